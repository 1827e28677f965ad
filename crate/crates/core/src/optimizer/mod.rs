//! Steps 2 and 3: cut-off search over the net-load spectrum and the parity
//! loop that keeps Step 1's mandates intact.

mod parity;
mod pso;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parity::{
    blocking_constraint, parity_check, reselect_suboptimal, run_parity_loop, CandidateSummary,
    ParityFailure, ParityOutcome, ParityStatus, ParityStep,
};
pub use pso::{pso_minimize, PsoConfig, PsoOutcome};

use crate::cost_model::{
    annual_day_weight, total_annualized_cost, AnnualCostReport, ClassUsage, CostBook, CostError,
    FleetUsage, WeightedSeries,
};
use crate::profiles::{net_load, DayKey, DayProfile, DayType, ProfileError, Season};
use crate::renewable_lp::{
    build_lp, co2_reduction_holds, cost_only_solution, efficiency_increase_holds, pv_share_holds,
    renewable_share_holds, solve_lp, Capacities, DemandContext, RegulatoryParams,
    RenewableSizingSolution, SavingsCoefficients, SizingError,
};
use crate::spectral_sizing::{
    bin_cutoff_hz, cutoff_bin, forward_transform, nyquist_hz, split_spectrum, SizingParams,
    SpectralError, Spectrum, SplitResult,
};

/// Bin counts up to this are enumerated in full once the swarm's pick fails
/// parity.
pub const COMPLETE_ENUMERATION_LIMIT: usize = 512;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("no cut-off satisfies parity; blocked by {}", .0.blocking)]
    NoFeasibleCutoff(Box<ParityFailure>),
    #[error("final candidate failed re-validation: {0}")]
    Revalidation(String),
}

/// Load and per-MW renewable output for one representative day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeDay {
    pub load: DayProfile,
    /// Output of 1 MW of PV.
    pub pv_per_mw: DayProfile,
    /// Output of 1 MW of wind.
    pub wind_per_mw: DayProfile,
}

impl RepresentativeDay {
    pub fn key(&self) -> DayKey {
        self.load.key()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBundle {
    pub days: Vec<RepresentativeDay>,
    pub regulatory: RegulatoryParams,
    pub coefficients: SavingsCoefficients,
    pub demand: DemandContext,
    pub costs: CostBook,
    pub sizing: SizingParams,
    /// Skip fuel-savings maximization and all mandates.
    pub cost_only: bool,
}

/// One day after Step 1: renewable output at the chosen capacities, net
/// load and its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDay {
    pub key: DayKey,
    pub days_per_year: f64,
    pub load: DayProfile,
    pub pv_mw: Vec<f64>,
    pub wind_mw: Vec<f64>,
    pub net: DayProfile,
    pub spectrum: Spectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedScenario {
    pub renewables: RenewableSizingSolution,
    pub days: Vec<PreparedDay>,
    /// Mandates used by the parity check; all zero in cost-only runs.
    pub regulatory: RegulatoryParams,
    pub costs: CostBook,
    pub sizing: SizingParams,
    pub peak_load_mw: f64,
    pub samples_per_day: usize,
    pub interval_hours: f64,
}

impl PreparedScenario {
    pub fn cutoff_bins(&self) -> usize {
        self.samples_per_day / 2 + 1
    }

    pub fn nyquist_hz(&self) -> f64 {
        nyquist_hz(self.interval_hours)
    }

    pub fn bin_cutoff_hz(&self, bin: usize) -> f64 {
        bin_cutoff_hz(bin, self.samples_per_day, self.interval_hours)
    }

    pub fn cutoff_bin(&self, cutoff_hz: f64) -> usize {
        cutoff_bin(cutoff_hz, self.samples_per_day, self.interval_hours)
    }
}

fn check_days(days: &[RepresentativeDay]) -> Result<(), OptimizerError> {
    let first = days
        .first()
        .ok_or_else(|| OptimizerError::Scenario("no representative days".into()))?;
    let mut seen = std::collections::BTreeSet::new();
    for d in days {
        let key = d.key();
        if !seen.insert(key) {
            return Err(OptimizerError::Scenario(format!("day {key} appears twice")));
        }
        for p in [&d.pv_per_mw, &d.wind_per_mw] {
            if p.key() != key || p.len() != d.load.len() || p.interval_hours != d.load.interval_hours {
                return Err(OptimizerError::Scenario(format!("renewable profile misaligned with load for {key}")));
            }
        }
        if d.load.len() != first.load.len() || d.load.interval_hours != first.load.interval_hours {
            return Err(OptimizerError::Scenario("days differ in sampling".into()));
        }
        d.load.ensure_non_negative()?;
    }
    if !days.iter().any(|d| d.key().day_type == DayType::Weekday) {
        return Err(OptimizerError::Scenario("at least one weekday is required".into()));
    }
    Ok(())
}

/// Step 1 for a bundle.
pub fn size_renewables(bundle: &ScenarioBundle) -> Result<RenewableSizingSolution, OptimizerError> {
    if bundle.cost_only {
        Ok(cost_only_solution(&bundle.coefficients, &bundle.demand))
    } else {
        Ok(solve_lp(&build_lp(&bundle.regulatory, &bundle.coefficients, &bundle.demand)?)?)
    }
}

/// Net loads and spectra for the given Step-1 capacities.
pub fn prepare(bundle: &ScenarioBundle, renewables: RenewableSizingSolution) -> Result<PreparedScenario, OptimizerError> {
    check_days(&bundle.days)?;
    bundle.sizing.validate()?;
    bundle.costs.validate()?;
    let mut days = Vec::with_capacity(bundle.days.len());
    for d in &bundle.days {
        let net = net_load(
            &d.load,
            &[(&d.pv_per_mw, renewables.pv_nom_mw), (&d.wind_per_mw, renewables.wind_nom_mw)],
        )?;
        let spectrum = forward_transform(&net)?;
        days.push(PreparedDay {
            key: d.key(),
            days_per_year: annual_day_weight(d.key().day_type),
            pv_mw: d.pv_per_mw.samples.iter().map(|p| p * renewables.pv_nom_mw).collect(),
            wind_mw: d.wind_per_mw.samples.iter().map(|p| p * renewables.wind_nom_mw).collect(),
            load: d.load.clone(),
            net,
            spectrum,
        });
    }
    let first = &bundle.days[0].load;
    Ok(PreparedScenario {
        peak_load_mw: days.iter().map(|d| d.load.peak()).fold(0.0, f64::max),
        samples_per_day: first.len(),
        interval_hours: first.interval_hours,
        regulatory: if bundle.cost_only {
            RegulatoryParams::disabled()
        } else {
            bundle.regulatory
        },
        costs: bundle.costs.clone(),
        sizing: bundle.sizing,
        renewables,
        days,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySplit {
    pub key: DayKey,
    pub split: SplitResult,
}

/// Weekday capacities of one season.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonCapacity {
    pub season: Season,
    pub chp_mw: f64,
    pub bess_power_mw: f64,
    pub bess_energy_mwh: f64,
}

/// Everything evaluated at one cut-off bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub summary: CandidateSummary,
    pub governing_season: Season,
    /// CHP (biomass included) at the governing season.
    pub chp_capacity_mw: f64,
    pub bess_power_mw: f64,
    pub bess_energy_mwh: f64,
    pub seasons: Vec<SeasonCapacity>,
    /// Weekend days fit inside the weekday-governed capacities.
    pub weekend_feasible: bool,
    pub pv_share_ok: bool,
    pub renewable_share_ok: bool,
    pub parity: ParityStatus,
    pub cost: AnnualCostReport,
    pub splits: Vec<DaySplit>,
}

impl CandidateRecord {
    pub fn total_cost(&self) -> f64 {
        self.cost.total
    }

    pub fn sum_p_ng_mw(&self) -> f64 {
        self.summary.sum_p_ng_mw()
    }
}

/// Split every day at `cutoff_hz`, size from the weekdays' governing season,
/// dispatch biomass first inside the CHP share and price the fleet.
pub fn evaluate_cutoff(cutoff_hz: f64, scenario: &PreparedScenario) -> Result<CandidateRecord, OptimizerError> {
    let mut splits = Vec::with_capacity(scenario.days.len());
    for d in &scenario.days {
        splits.push(DaySplit {
            key: d.key,
            split: split_spectrum(&d.net, &d.spectrum, cutoff_hz, &scenario.sizing)?,
        });
    }

    let mut seasons: Vec<SeasonCapacity> = Vec::new();
    for s in splits.iter().filter(|s| s.key.day_type == DayType::Weekday) {
        seasons.push(SeasonCapacity {
            season: s.key.season,
            chp_mw: s.split.chp_capacity_mw,
            bess_power_mw: s.split.bess_power_capacity_mw,
            bess_energy_mwh: s.split.bess_energy_capacity_mwh,
        });
    }
    let governing = seasons
        .iter()
        .fold(None::<&SeasonCapacity>, |best, s| match best {
            Some(b) if b.chp_mw >= s.chp_mw => Some(b),
            _ => Some(s),
        })
        .expect("weekday present");
    let chp_capacity_mw = governing.chp_mw;
    let bess_power_mw = seasons.iter().map(|s| s.bess_power_mw).fold(0.0, f64::max);
    let bess_energy_mwh = seasons.iter().map(|s| s.bess_energy_mwh).fold(0.0, f64::max);
    let weekend_feasible = splits.iter().filter(|s| s.key.day_type == DayType::Weekend).all(|s| {
        s.split.chp_capacity_mw <= chp_capacity_mw
            && s.split.bess_power_capacity_mw <= bess_power_mw
            && s.split.bess_energy_capacity_mwh <= bess_energy_mwh
    });

    let biomass_mw = scenario.renewables.biomass_nom_mw;
    let ng_mw = (chp_capacity_mw - biomass_mw).max(0.0);
    let capacities = Capacities {
        pv_mw: scenario.renewables.pv_nom_mw,
        wind_mw: scenario.renewables.wind_nom_mw,
        biomass_mw,
        ng_mw,
    };

    let mut fleet = FleetUsage {
        pv: ClassUsage { capacity_mw: capacities.pv_mw, output: Vec::new() },
        wind: ClassUsage { capacity_mw: capacities.wind_mw, output: Vec::new() },
        biomass: ClassUsage { capacity_mw: biomass_mw, output: Vec::new() },
        natural_gas: ClassUsage { capacity_mw: ng_mw, output: Vec::new() },
        bess_power_mw,
        bess_energy_mwh,
        peak_load_mw: scenario.peak_load_mw,
    };
    for (d, s) in scenario.days.iter().zip(&splits) {
        let series = |power_mw: Vec<f64>| WeightedSeries {
            days_per_year: d.days_per_year,
            interval_hours: scenario.interval_hours,
            power_mw,
        };
        let bio: Vec<f64> = s.split.chp_series.iter().map(|&c| c.min(biomass_mw)).collect();
        let ng: Vec<f64> = s.split.chp_series.iter().zip(&bio).map(|(c, b)| c - b).collect();
        fleet.pv.output.push(series(d.pv_mw.clone()));
        fleet.wind.output.push(series(d.wind_mw.clone()));
        fleet.biomass.output.push(series(bio));
        fleet.natural_gas.output.push(series(ng));
    }
    let cost = total_annualized_cost(&fleet, &scenario.costs)?;

    let summary = CandidateSummary {
        bin: scenario.cutoff_bin(cutoff_hz),
        cutoff_hz,
        total_cost: cost.total,
        capacities,
    };
    let parity = parity_check(&summary, scenario.renewables.ng_threshold_mw, &scenario.regulatory);
    Ok(CandidateRecord {
        pv_share_ok: pv_share_holds(&scenario.regulatory, &capacities),
        renewable_share_ok: renewable_share_holds(&scenario.regulatory, &capacities),
        governing_season: governing.season,
        chp_capacity_mw,
        bess_power_mw,
        bess_energy_mwh,
        seasons,
        weekend_feasible,
        parity,
        cost,
        splits,
        summary,
    })
}

/// Candidates keyed by bin; each bin is evaluated at its own cut-off
/// `bin · Δf` so that every cut-off inside a bin yields the same record.
#[derive(Debug, Default)]
pub struct CandidateCache {
    records: BTreeMap<usize, CandidateRecord>,
    order: Vec<(usize, &'static str)>,
}

impl CandidateCache {
    pub fn get_or_eval(
        &mut self,
        bin: usize,
        stage: &'static str,
        scenario: &PreparedScenario,
    ) -> Result<&CandidateRecord, OptimizerError> {
        if !self.records.contains_key(&bin) {
            let rec = evaluate_cutoff(scenario.bin_cutoff_hz(bin), scenario)?;
            self.records.insert(bin, rec);
            self.order.push((bin, stage));
        }
        Ok(&self.records[&bin])
    }

    pub fn records(&self) -> &BTreeMap<usize, CandidateRecord> {
        &self.records
    }

    pub fn summaries(&self) -> BTreeMap<usize, CandidateSummary> {
        self.records.iter().map(|(&b, r)| (b, r.summary.clone())).collect()
    }
}

/// One evaluated candidate in evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub sequence: usize,
    pub stage: String,
    pub bin: usize,
    pub cutoff_hz: f64,
    pub total_cost: f64,
    pub sum_p_ng_mw: f64,
    pub parity: ParityStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoSummary {
    pub best_bin: usize,
    pub best_cutoff_hz: f64,
    pub best_cost: f64,
    pub initial_best_cost: f64,
    pub objective_calls: usize,
    pub distinct_bins: usize,
    pub iterations_run: usize,
    pub restarted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoOptimizationResult {
    pub renewables: RenewableSizingSolution,
    pub final_candidate: CandidateRecord,
    pub chp_capacity_mw: f64,
    pub ng_capacity_mw: f64,
    pub biomass_capacity_mw: f64,
    pub bess_power_mw: f64,
    pub bess_energy_mwh: f64,
    pub governing_season: Season,
    pub chp_capacity_by_season: Vec<SeasonCapacity>,
    pub pso: PsoSummary,
    pub parity_steps: Vec<ParityStep>,
    pub outer_iterations: usize,
    pub completed_enumeration: bool,
    pub iteration_log: Vec<IterationEntry>,
}

/// Swarm search over cut-off bins. Returns the best bin and the swarm's
/// bookkeeping; all evaluated bins land in `cache`.
pub fn search_cutoff(
    scenario: &PreparedScenario,
    config: &PsoConfig,
    cache: &mut CandidateCache,
) -> Result<PsoSummary, OptimizerError> {
    let [lo, hi] = config.bounds_hz.unwrap_or([0.0, scenario.nyquist_hz()]);
    let hi = hi.min(scenario.nyquist_hz());
    // equal-width basins, so the end bins are as reachable as the rest
    let (first, last) = (scenario.cutoff_bin(lo), scenario.cutoff_bin(hi));
    let span = last - first + 1;
    let bin_of = |x: f64| {
        if hi > lo {
            first + (((x - lo) / (hi - lo) * span as f64).floor().max(0.0) as usize).min(span - 1)
        } else {
            first
        }
    };
    let mut failure = None;
    let outcome = pso_minimize(
        |x| {
            let bin = bin_of(x);
            match cache.get_or_eval(bin, "pso", scenario) {
                Ok(r) => r.total_cost(),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            }
        },
        lo,
        hi,
        config,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let best_bin = bin_of(outcome.argmin);
    Ok(PsoSummary {
        best_bin,
        best_cutoff_hz: scenario.bin_cutoff_hz(best_bin),
        best_cost: outcome.min,
        initial_best_cost: outcome.initial_min,
        objective_calls: outcome.evaluated.len(),
        distinct_bins: cache.records.len(),
        iterations_run: outcome.iterations_run,
        restarted: outcome.restarted,
    })
}

/// Independent check of the accepted candidate against Step 1.
fn revalidate(
    candidate: &CandidateRecord,
    scenario: &PreparedScenario,
    bundle: &ScenarioBundle,
) -> Result<(), OptimizerError> {
    let x = candidate.summary.capacities;
    let thr = scenario.renewables.ng_threshold_mw;
    let mut failures = Vec::new();
    if x.ng_mw < thr - 1e-9 * thr.max(1.0) {
        failures.push(format!("NG {} MW below threshold {} MW", x.ng_mw, thr));
    }
    if !bundle.cost_only {
        let reg = &bundle.regulatory;
        let step1 = scenario.renewables.capacities();
        if !pv_share_holds(reg, &x) {
            failures.push("pv share".into());
        }
        if !renewable_share_holds(reg, &x) {
            failures.push("renewable share".into());
        }
        if !co2_reduction_holds(reg, &bundle.coefficients, &bundle.demand, &step1) {
            failures.push("CO2 reduction at Step-1 capacities".into());
        }
        if !efficiency_increase_holds(reg, &bundle.coefficients, &bundle.demand, &step1) {
            failures.push("efficiency increase at Step-1 capacities".into());
        }
        if x.biomass_mw > bundle.demand.biomass_cap_mw {
            failures.push("biomass cap".into());
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(OptimizerError::Revalidation(failures.join("; ")))
    }
}

/// Full pipeline after representative days are drawn: Step 1, net loads,
/// swarm search, parity loop.
pub fn co_optimize(bundle: &ScenarioBundle, pso: &PsoConfig) -> Result<CoOptimizationResult, OptimizerError> {
    let renewables = size_renewables(bundle)?;
    let scenario = prepare(bundle, renewables)?;
    co_optimize_prepared(bundle, &scenario, pso)
}

pub fn co_optimize_prepared(
    bundle: &ScenarioBundle,
    scenario: &PreparedScenario,
    pso: &PsoConfig,
) -> Result<CoOptimizationResult, OptimizerError> {
    let mut cache = CandidateCache::default();
    let pso_summary = search_cutoff(scenario, pso, &mut cache)?;

    let mut summaries = cache.summaries();
    let outcome = run_parity_loop(
        pso_summary.best_bin,
        scenario.cutoff_bins(),
        &mut summaries,
        |bin| cache.get_or_eval(bin, "parity", scenario).map(|r| r.summary.clone()),
        scenario.renewables.ng_threshold_mw,
        &scenario.regulatory,
        COMPLETE_ENUMERATION_LIMIT,
    )?;
    let outcome = outcome.map_err(|f| OptimizerError::NoFeasibleCutoff(Box::new(f)))?;

    let final_candidate = cache.records()[&outcome.accepted_bin].clone();
    revalidate(&final_candidate, scenario, bundle)?;

    let iteration_log = cache
        .order
        .iter()
        .enumerate()
        .map(|(i, &(bin, stage))| {
            let r = &cache.records[&bin];
            IterationEntry {
                sequence: i,
                stage: stage.to_string(),
                bin,
                cutoff_hz: r.summary.cutoff_hz,
                total_cost: r.total_cost(),
                sum_p_ng_mw: r.sum_p_ng_mw(),
                parity: r.parity,
            }
        })
        .collect();

    Ok(CoOptimizationResult {
        renewables: scenario.renewables.clone(),
        chp_capacity_mw: final_candidate.chp_capacity_mw,
        ng_capacity_mw: final_candidate.sum_p_ng_mw(),
        biomass_capacity_mw: final_candidate.summary.capacities.biomass_mw,
        bess_power_mw: final_candidate.bess_power_mw,
        bess_energy_mwh: final_candidate.bess_energy_mwh,
        governing_season: final_candidate.governing_season,
        chp_capacity_by_season: final_candidate.seasons.clone(),
        pso: pso_summary,
        outer_iterations: outcome.steps.len(),
        parity_steps: outcome.steps,
        completed_enumeration: outcome.completed_enumeration,
        iteration_log,
        final_candidate,
    })
}
