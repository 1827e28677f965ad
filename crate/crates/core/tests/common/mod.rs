#![allow(dead_code)]

use std::path::PathBuf;

use dercoopt::cli::{bundle_for, load_config, read_history, representative_days, Mode, ScenarioConfig};
use dercoopt::optimizer::{prepare, size_renewables, PreparedScenario, ScenarioBundle};
use dercoopt::profiles::fit_models;

pub fn fixture_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("ohio_fixture").join("config.toml")
}

pub struct Loaded {
    pub config: ScenarioConfig,
    pub bundle: ScenarioBundle,
    pub scenario: PreparedScenario,
}

/// The bundled Ohio scenario after Step 1, with `DERCOOPT__` style
/// overrides such as `("DEMAND_CONTEXT__THERMAL_LOAD_MWH_PER_YR", "3e5")`.
pub fn ohio(mode: Mode, overrides: &[(&str, &str)]) -> Loaded {
    let path = fixture_config();
    let env = overrides.iter().map(|(k, v)| (format!("DERCOOPT__{k}"), v.to_string()));
    let mut config = load_config(&path, env).expect("fixture config parses");
    config.mode = mode;
    let history = read_history(&path, &config).expect("fixture history");
    let models = fit_models(&history, config.inputs.pv_rating_mw, config.turbine).expect("fit");
    let days = representative_days(&models, &config).expect("sample");
    let bundle = bundle_for(&config, days);
    let renewables = size_renewables(&bundle).expect("step 1");
    let scenario = prepare(&bundle, renewables).expect("prepare");
    Loaded { config, bundle, scenario }
}

/// Thermal load that makes the cheapest cut-off fail the NG threshold.
pub const ENGINEERED_THERMAL_LOAD: &str = "300000.0";
