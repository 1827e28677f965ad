//! Historical series ingestion, stochastic load/PV/wind models and net-load
//! construction.

mod day;
mod density;
mod fit;
mod sample;

pub use day::{ingest_series, net_load, DayKey, DayProfile, DayType, Season};
pub use density::{
    normal_pdf, pv_power_pdf, weibull_cdf, wind_power_curve, wind_power_pdf, WindPowerDensity,
};
pub use fit::{
    fit_models, fit_normal_slot, fit_pv_slot, fit_wind_slot, BetaPvModel, DayModels, History,
    NormalLoadModel, PvSlot, StochasticModelSet, TurbineCurve, WeibullWindModel, WindSlot,
};
pub use sample::{sample_day, sample_load_slot, sample_pv_slot, sample_wind_speed, SampledDay};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("malformed series{}: {reason}", row.map(|r| format!(" at data row {r}")).unwrap_or_default())]
    MalformedSeries { row: Option<usize>, reason: String },
    #[error("invalid day profile: {0}")]
    InvalidProfile(String),
    #[error("{source_name} history for {key} has {days} day(s), at least 2 are required")]
    InsufficientHistory {
        key: DayKey,
        source_name: &'static str,
        days: usize,
    },
    #[error("distribution is degenerate (zero variance)")]
    DegenerateDistribution,
    #[error("value {value} outside support [{lo}, {hi}]")]
    DomainError { value: f64, lo: f64, hi: f64 },
    #[error("profile shape mismatch: {0}")]
    ShapeError(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
