use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost_model::CostBook;
use crate::optimizer::PsoConfig;
use crate::profiles::{fit_models, ingest_series, History, ProfileError, TurbineCurve};
use crate::renewable_lp::{DemandContext, RegulatoryParams, SavingsCoefficients};
use crate::spectral_sizing::SizingParams;

/// Prefix of environment variables that override config keys. Nested keys
/// are joined with `__`, e.g. `DERCOOPT__REGULATORY_PARAMS__OMEGA_CO2_REDUCTION`.
pub const ENV_PREFIX: &str = "DERCOOPT__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Full,
    CostOnly,
    Step1Only,
    SplitOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::CostOnly => "cost-only",
            Mode::Step1Only => "step1-only",
            Mode::SplitOnly => "split-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    /// `timestamp,value` load in MW.
    pub load_csv: PathBuf,
    /// `timestamp,value` PV output in MW of a plant rated `pv_rating_mw`.
    pub pv_csv: PathBuf,
    /// `timestamp,value` wind speed in m/s.
    pub wind_csv: PathBuf,
    pub pv_rating_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    pub interval_hours: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Cut-off for `split-only` runs when no `--cutoff-hz` is given.
    #[serde(default)]
    pub split_cutoff_hz: Option<f64>,
    pub inputs: InputPaths,
    pub turbine: TurbineCurve,
    pub savings_coefficients: SavingsCoefficients,
    pub regulatory_params: RegulatoryParams,
    pub demand_context: DemandContext,
    pub cost_book: CostBook,
    pub sizing_params: SizingParams,
    #[serde(default)]
    pub pso_config: PsoConfig,
}

/// One problem with a config, located by a dotted path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    /// Type that owns the offending key.
    pub section: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.path, self.section, self.message)
    }
}

fn section_type(top: &str) -> &'static str {
    match top {
        "inputs" => "InputPaths",
        "turbine" => "TurbineCurve",
        "savings_coefficients" => "SavingsCoefficients",
        "regulatory_params" => "RegulatoryParams",
        "demand_context" => "DemandContext",
        "cost_book" => "CostBook",
        "sizing_params" => "SizingParams",
        "pso_config" => "PsoConfig",
        _ => "ScenarioConfig",
    }
}

fn diagnostic(path: &str, message: impl Into<String>) -> Diagnostic {
    let top = path.split('.').next().unwrap_or("");
    Diagnostic {
        path: path.to_string(),
        section: section_type(top).to_string(),
        message: message.into(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Parse a scalar override: anything TOML accepts as a value, otherwise a
/// bare string.
fn parse_override(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Apply `DERCOOPT__A__B=value` pairs to the parsed document.
pub fn apply_overrides<I>(doc: &mut toml::Table, vars: I) -> Result<(), Diagnostic>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(diagnostic(&path.join("."), format!("malformed override variable {key}")));
        }
        let mut table = &mut *doc;
        for part in &path[..path.len() - 1] {
            let entry = table
                .entry(part.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = match entry {
                toml::Value::Table(t) => t,
                _ => return Err(diagnostic(&path.join("."), format!("{part} is not a section"))),
            };
        }
        table.insert(path[path.len() - 1].clone(), parse_override(&raw));
    }
    Ok(())
}

/// Read, override and deserialize a config. Paths inside stay as written.
pub fn load_config<I>(path: &Path, env: I) -> Result<ScenarioConfig, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Invalid(vec![diagnostic("", e.message().to_string())]))?;
    apply_overrides(&mut doc, env).map_err(|d| ConfigError::Invalid(vec![d]))?;
    serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
        let p = e.path().to_string();
        let p = if p == "." { String::new() } else { p };
        ConfigError::Invalid(vec![diagnostic(&p, e.inner().to_string())])
    })
}

/// Resolve a config-relative path.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

pub fn read_history(config_path: &Path, cfg: &ScenarioConfig) -> Result<History, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut read = |field: &str, p: &Path| match fs::File::open(resolve(config_path, p)) {
        Ok(f) => match ingest_series(f, cfg.interval_hours) {
            Ok(days) => days,
            Err(e) => {
                diags.push(diagnostic(&format!("inputs.{field}"), e.to_string()));
                Vec::new()
            }
        },
        Err(e) => {
            diags.push(diagnostic(&format!("inputs.{field}"), format!("{}: {e}", p.display())));
            Vec::new()
        }
    };
    let history = History {
        load: read("load_csv", &cfg.inputs.load_csv),
        pv: read("pv_csv", &cfg.inputs.pv_csv),
        wind_speed: read("wind_csv", &cfg.inputs.wind_csv),
    };
    if diags.is_empty() {
        Ok(history)
    } else {
        Err(diags)
    }
}

/// Every invariant violation of a parsed config, including unreadable or
/// unfittable input series.
pub fn check_config(config_path: &Path, cfg: &ScenarioConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut add = |section: &str, problems: Vec<String>| {
        for p in problems {
            let (field, msg) = p.split_once(": ").unwrap_or(("", p.as_str()));
            let path = if field.is_empty() {
                section.to_string()
            } else {
                format!("{section}.{field}")
            };
            out.push(diagnostic(&path, msg));
        }
    };
    add("savings_coefficients", cfg.savings_coefficients.problems());
    add("regulatory_params", cfg.regulatory_params.problems());
    add("demand_context", cfg.demand_context.problems());
    add("cost_book", cfg.cost_book.problems());
    add("sizing_params", cfg.sizing_params.problems());
    add("pso_config", cfg.pso_config.problems());
    if let Err(e) = cfg.turbine.validate() {
        add("turbine", vec![e.to_string()]);
    }
    let steps = 24.0 / cfg.interval_hours;
    if !(cfg.interval_hours > 0.0 && (steps - steps.round()).abs() < 1e-9 && steps.round() >= 2.0) {
        add("", vec![format!("interval_hours: {} must divide 24 h into at least 2 slots", cfg.interval_hours)]);
    }
    if !(cfg.inputs.pv_rating_mw > 0.0) {
        add("inputs", vec![format!("pv_rating_mw: {} must be positive", cfg.inputs.pv_rating_mw)]);
    }
    if let Some(c) = cfg.split_cutoff_hz {
        if !(c >= 0.0) {
            add("", vec![format!("split_cutoff_hz: {c} must be >= 0")]);
        }
    }
    let ctx = &cfg.demand_context;
    let book = &cfg.cost_book;
    let mut missing = Vec::new();
    if ctx.pv_cap_mw > 0.0 && book.pv.is_none() {
        missing.push("pv: missing cost row for a class with a nonzero cap".to_string());
    }
    if ctx.wind_cap_mw > 0.0 && book.wind.is_none() {
        missing.push("wind: missing cost row for a class with a nonzero cap".to_string());
    }
    if ctx.biomass_cap_mw > 0.0 && book.biomass.is_none() {
        missing.push("biomass: missing cost row for a class with a nonzero cap".to_string());
    }
    if book.natural_gas.is_none() {
        missing.push("natural_gas: missing cost row; CHP capacity is always priced".to_string());
    }
    if book.bess.is_none() {
        missing.push("bess: missing cost row; storage is always priced".to_string());
    }
    add("cost_book", missing);

    if out.is_empty() {
        match read_history(config_path, cfg) {
            Ok(h) => {
                if let Err(e) = fit_models(&h, cfg.inputs.pv_rating_mw, cfg.turbine) {
                    let path = match e {
                        ProfileError::InsufficientHistory { source_name, .. } => format!("inputs.{source_name}_csv"),
                        _ => "inputs".to_string(),
                    };
                    out.push(diagnostic(&path, e.to_string()));
                }
            }
            Err(d) => out.extend(d),
        }
    }
    out
}
