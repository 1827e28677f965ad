//! Command-line front end: config loading, stage gating and artifact output.

mod config;

pub use config::{
    apply_overrides, check_config, load_config, read_history, resolve, ConfigError, Diagnostic, InputPaths, Mode,
    ScenarioConfig, ENV_PREFIX,
};

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::evaluation::{compile_report, render_text, write_baselines_csv, EvaluationReport};
use crate::optimizer::{
    co_optimize_prepared, prepare, size_renewables, CoOptimizationResult, OptimizerError, ParityFailure,
    RepresentativeDay, ScenarioBundle,
};
use crate::profiles::{fit_models, ingest_series, sample_day, DayKey, StochasticModelSet};
use crate::renewable_lp::{build_lp, FarkasCertificate, LpError, RenewableSizingSolution, SizingError};
use crate::spectral_sizing::{split_day, write_split_csv, SplitResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dercoopt", version, about = "Co-optimized DER sizing for community microgrids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit models, size renewables, search the cut-off and evaluate.
    Run(RunArgs),
    /// List every problem with a config; prints `[]` when runnable.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the stochastic load/PV/wind models and write `models.json`.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a net-load series at one cut-off and size CHP/BESS per day.
    Split {
        #[arg(long)]
        config: PathBuf,
        /// `timestamp,value` net load in MW.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cutoff_hz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cut-off for `--mode split-only`.
    #[arg(long)]
    pub cutoff_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Infeasible,
}

/// Farkas weight attached to its constraint label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunFailure {
    /// Step 1 has no feasible point.
    LpInfeasible {
        certificate: FarkasCertificate,
        rows: Vec<CertificateRow>,
    },
    /// No cut-off bin passes parity.
    NoFeasibleCutoff { failure: ParityFailure },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDayArtifact {
    pub key: DayKey,
    pub file: String,
    pub chp_capacity_mw: f64,
    pub bess_power_capacity_mw: f64,
    pub bess_energy_capacity_mwh: f64,
}

/// Contents of `result.json`. Blocks a mode does not produce are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub status: RunStatus,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renewables: Option<RenewableSizingSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub co_optimization: Option<CoOptimizationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<Vec<SplitDayArtifact>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RunFailure>,
}

pub fn read_run_artifact(path: &Path) -> Result<RunArtifact, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_evaluation(path: &Path) -> Result<EvaluationReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("invalid config")]
    Diagnostics(Vec<Diagnostic>),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Io { .. }) => "config_unreadable",
            CliError::Config(ConfigError::Invalid(_)) | CliError::Diagnostics(_) => "config_invalid",
            CliError::Input(_) => "input_invalid",
            CliError::Output { .. } => "output_failed",
            CliError::Failed(_) => "run_failed",
        }
    }

    fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            CliError::Config(ConfigError::Invalid(d)) | CliError::Diagnostics(d) => d,
            _ => &[],
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    reason: &'a str,
    message: String,
    #[serde(skip_serializing_if = "<[Diagnostic]>::is_empty")]
    diagnostics: &'a [Diagnostic],
}

fn report_error(reason: &str, message: String, diagnostics: &[Diagnostic]) {
    let report = ErrorReport {
        reason,
        message,
        diagnostics,
    };
    eprintln!("{}", serde_json::to_string(&report).unwrap_or_default());
}

/// Seed of the `idx`-th representative day.
pub fn day_seed(seed: u64, idx: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(idx as u64 + 1))
}

/// One stochastic draw per key, normalized to 1 MW of PV and wind.
pub fn representative_days(
    models: &StochasticModelSet,
    cfg: &ScenarioConfig,
) -> Result<Vec<RepresentativeDay>, CliError> {
    DayKey::all()
        .enumerate()
        .map(|(idx, key)| {
            let day = sample_day(models, key, day_seed(cfg.seed, idx)).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(RepresentativeDay {
                pv_per_mw: day.pv.scaled(1.0 / cfg.inputs.pv_rating_mw),
                wind_per_mw: day.wind.scaled(1.0 / cfg.turbine.rated_power_mw),
                load: day.load,
            })
        })
        .collect()
}

pub fn bundle_for(cfg: &ScenarioConfig, days: Vec<RepresentativeDay>) -> ScenarioBundle {
    ScenarioBundle {
        days,
        regulatory: cfg.regulatory_params,
        coefficients: cfg.savings_coefficients,
        demand: cfg.demand_context,
        costs: cfg.cost_book.clone(),
        sizing: cfg.sizing_params,
        cost_only: cfg.mode == Mode::CostOnly,
    }
}

fn output_dir(config_path: &Path, cfg: &ScenarioConfig, flag: Option<PathBuf>) -> PathBuf {
    match (flag, &cfg.output_dir) {
        (Some(p), _) => p,
        (None, Some(p)) => resolve(config_path, p),
        (None, None) => PathBuf::from("dercoopt-out"),
    }
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_split(path: &Path, split: &SplitResult) -> Result<(), CliError> {
    let mut w = create_file(path)?;
    write_split_csv(split, &mut w).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Parse, apply overrides and validate; any diagnostic stops the run.
fn load_checked<I>(config_path: &Path, env: I) -> Result<ScenarioConfig, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let cfg = load_config(config_path, env)?;
    let diags = check_config(config_path, &cfg);
    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Diagnostics(diags))
    }
}

fn fit_from_config(config_path: &Path, cfg: &ScenarioConfig) -> Result<StochasticModelSet, CliError> {
    let history = read_history(config_path, cfg).map_err(CliError::Diagnostics)?;
    fit_models(&history, cfg.inputs.pv_rating_mw, cfg.turbine).map_err(|e| CliError::Input(e.to_string()))
}

fn infeasibility(err: &OptimizerError, cfg: &ScenarioConfig) -> Option<RunFailure> {
    match err {
        OptimizerError::Sizing(SizingError::Lp(LpError::Infeasible(cert))) => {
            let labels: Vec<String> = build_lp(&cfg.regulatory_params, &cfg.savings_coefficients, &cfg.demand_context)
                .map(|s| s.lp.constraints.iter().map(|c| c.label.clone()).collect())
                .unwrap_or_default();
            let rows = if labels.len() == cert.row_weights.len() {
                labels
                    .into_iter()
                    .zip(&cert.row_weights)
                    .map(|(label, &weight)| CertificateRow { label, weight })
                    .collect()
            } else {
                Vec::new()
            };
            Some(RunFailure::LpInfeasible {
                certificate: cert.clone(),
                rows,
            })
        }
        OptimizerError::NoFeasibleCutoff(f) => Some(RunFailure::NoFeasibleCutoff { failure: (**f).clone() }),
        _ => None,
    }
}

/// Execute `run`; returns the exit code. Artifacts land in the output
/// directory, which is created if needed.
pub fn run<I>(args: RunArgs, env: I) -> Result<i32, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut cfg = load_config(&args.config, env)?;
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = args.cutoff_hz {
        cfg.split_cutoff_hz = Some(c);
    }
    let diags = check_config(&args.config, &cfg);
    if !diags.is_empty() {
        return Err(CliError::Diagnostics(diags));
    }
    let out = output_dir(&args.config, &cfg, args.out);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let models = fit_from_config(&args.config, &cfg)?;
    let bundle = bundle_for(&cfg, representative_days(&models, &cfg)?);
    let mut pso = cfg.pso_config.clone();
    pso.seed = cfg.seed;

    let mut artifact = RunArtifact {
        status: RunStatus::Ok,
        mode: cfg.mode,
        seed: cfg.seed,
        renewables: None,
        co_optimization: None,
        splits: None,
        failure: None,
    };
    let result_path = out.join("result.json");
    let fail = |artifact: &mut RunArtifact, err: OptimizerError| -> Result<i32, CliError> {
        match infeasibility(&err, &cfg) {
            Some(f) => {
                artifact.status = RunStatus::Infeasible;
                artifact.failure = Some(f);
                write_json(&result_path, artifact)?;
                report_error("infeasible", err.to_string(), &[]);
                Ok(EXIT_INFEASIBLE)
            }
            None => Err(CliError::Failed(err.to_string())),
        }
    };

    let renewables = match size_renewables(&bundle) {
        Ok(r) => r,
        Err(e) => return fail(&mut artifact, e),
    };
    artifact.renewables = Some(renewables.clone());
    if cfg.mode == Mode::Step1Only {
        write_json(&result_path, &artifact)?;
        return Ok(EXIT_OK);
    }

    let scenario = prepare(&bundle, renewables).map_err(|e| CliError::Failed(e.to_string()))?;

    if cfg.mode == Mode::SplitOnly {
        let cutoff = cfg
            .split_cutoff_hz
            .ok_or_else(|| CliError::Diagnostics(vec![Diagnostic {
                path: "split_cutoff_hz".into(),
                section: "ScenarioConfig".into(),
                message: "split-only mode needs --cutoff-hz or split_cutoff_hz".into(),
            }]))?;
        let mut splits = Vec::new();
        for d in &scenario.days {
            let split = split_day(&d.net, cutoff, &cfg.sizing_params).map_err(|e| CliError::Failed(e.to_string()))?;
            let file = format!("split_{}.csv", d.key);
            write_split(&out.join(&file), &split)?;
            splits.push(SplitDayArtifact {
                key: d.key,
                file,
                chp_capacity_mw: split.chp_capacity_mw,
                bess_power_capacity_mw: split.bess_power_capacity_mw,
                bess_energy_capacity_mwh: split.bess_energy_capacity_mwh,
            });
        }
        artifact.splits = Some(splits);
        write_json(&result_path, &artifact)?;
        return Ok(EXIT_OK);
    }

    let result = match co_optimize_prepared(&bundle, &scenario, &pso) {
        Ok(r) => r,
        Err(e) => return fail(&mut artifact, e),
    };
    let report = compile_report(&result, &scenario, &bundle).map_err(|e| CliError::Failed(e.to_string()))?;

    let mut log = create_file(&out.join("iterations.jsonl"))?;
    for entry in &result.iteration_log {
        let line = serde_json::to_string(entry).map_err(|e| CliError::io(&out, e))?;
        writeln!(log, "{line}").map_err(|e| CliError::io(&out, e))?;
    }
    log.flush().map_err(|e| CliError::io(&out, e))?;
    for d in &result.final_candidate.splits {
        write_split(&out.join(format!("split_{}.csv", d.key)), &d.split)?;
    }
    write_json(&out.join("evaluation.json"), &report)?;
    let text_path = out.join("evaluation.txt");
    fs::write(&text_path, render_text(&report, &bundle)).map_err(|e| CliError::io(&text_path, e))?;
    let csv_path = out.join("baselines.csv");
    let mut w = create_file(&csv_path)?;
    write_baselines_csv(&report, &mut w).map_err(|e| CliError::io(&csv_path, e))?;
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;

    artifact.co_optimization = Some(result);
    write_json(&result_path, &artifact)?;
    Ok(EXIT_OK)
}

fn fit_command(config: &Path, out: Option<PathBuf>, env: Vec<(String, String)>) -> Result<i32, CliError> {
    let cfg = load_checked(config, env)?;
    let models = fit_from_config(config, &cfg)?;
    let out = output_dir(config, &cfg, out);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    write_json(&out.join("models.json"), &models)?;
    Ok(EXIT_OK)
}

fn split_command(
    config: &Path,
    input: &Path,
    cutoff_hz: f64,
    out: Option<PathBuf>,
    env: Vec<(String, String)>,
) -> Result<i32, CliError> {
    let cfg = load_config(config, env)?;
    let diags: Vec<Diagnostic> = cfg
        .sizing_params
        .problems()
        .into_iter()
        .map(|p| Diagnostic {
            path: format!("sizing_params.{}", p.split_once(": ").map_or("", |s| s.0)),
            section: "SizingParams".into(),
            message: p,
        })
        .collect();
    if !diags.is_empty() {
        return Err(CliError::Diagnostics(diags));
    }
    let file = fs::File::open(input).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let days = ingest_series(file, cfg.interval_hours).map_err(|e| CliError::Input(e.to_string()))?;
    let out = output_dir(config, &cfg, out);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut summary = Vec::new();
    for (i, day) in days.iter().enumerate() {
        let split = split_day(day, cutoff_hz, &cfg.sizing_params).map_err(|e| CliError::Input(e.to_string()))?;
        let file = format!("split_{i:03}_{}.csv", day.key());
        write_split(&out.join(&file), &split)?;
        summary.push(SplitDayArtifact {
            key: day.key(),
            file,
            chp_capacity_mw: split.chp_capacity_mw,
            bess_power_capacity_mw: split.bess_power_capacity_mw,
            bess_energy_capacity_mwh: split.bess_energy_capacity_mwh,
        });
    }
    write_json(&out.join("splits.json"), &summary)?;
    Ok(EXIT_OK)
}

fn validate_command(config: &Path, env: Vec<(String, String)>) -> Result<i32, CliError> {
    let diags = match load_config(config, env) {
        Ok(cfg) => check_config(config, &cfg),
        Err(ConfigError::Invalid(d)) => d,
        Err(e) => return Err(e.into()),
    };
    println!("{}", serde_json::to_string_pretty(&diags).unwrap_or_default());
    Ok(if diags.is_empty() { EXIT_OK } else { EXIT_CONFIG })
}

/// Entry point shared by the binary and tests. Errors are printed to stderr
/// as one JSON object carrying a `reason` field.
pub fn main_with<A, T>(args: A, env: Vec<(String, String)>) -> i32
where
    A: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a, env),
        Command::Validate { config } => validate_command(&config, env),
        Command::Fit { config, out } => fit_command(&config, out, env),
        Command::Split {
            config,
            input,
            cutoff_hz,
            out,
        } => split_command(&config, &input, cutoff_hz, out, env),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            report_error(e.reason(), e.to_string(), e.diagnostics());
            EXIT_CONFIG
        }
    }
}
