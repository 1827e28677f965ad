use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::renewable_lp::{pv_share_holds, renewable_share_holds, Capacities, RegulatoryParams};

const THRESHOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityStatus {
    Pass,
    NeedMoreChp,
    NeedLessChp,
}

/// What the parity loop needs to know about one evaluated cut-off bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub bin: usize,
    pub cutoff_hz: f64,
    pub total_cost: f64,
    /// PV, wind and biomass from Step 1, NG as the implied ΣP_NG.
    pub capacities: Capacities,
}

impl CandidateSummary {
    pub fn sum_p_ng_mw(&self) -> f64 {
        self.capacities.ng_mw
    }
}

/// NG below the threshold means the CO₂ and efficiency floors are no longer
/// backed; NG at or above it but with a renewable-share mandate broken means
/// too much fossil capacity.
pub fn parity_check(candidate: &CandidateSummary, threshold_mw: f64, reg: &RegulatoryParams) -> ParityStatus {
    if candidate.sum_p_ng_mw() < threshold_mw - THRESHOLD_TOL * threshold_mw.max(1.0) {
        ParityStatus::NeedMoreChp
    } else if !pv_share_holds(reg, &candidate.capacities) || !renewable_share_holds(reg, &candidate.capacities) {
        ParityStatus::NeedLessChp
    } else {
        ParityStatus::Pass
    }
}

/// Cheapest unvisited candidate whose ΣP_NG moves strictly in the direction
/// `status` asks for; ties go to the smallest cut-off change, then the lower
/// bin.
pub fn reselect_suboptimal(
    evaluated: &BTreeMap<usize, CandidateSummary>,
    failing: &CandidateSummary,
    status: ParityStatus,
    visited: &BTreeSet<usize>,
) -> Option<usize> {
    let moves = |c: &CandidateSummary| match status {
        ParityStatus::NeedMoreChp => c.sum_p_ng_mw() > failing.sum_p_ng_mw(),
        ParityStatus::NeedLessChp => c.sum_p_ng_mw() < failing.sum_p_ng_mw(),
        ParityStatus::Pass => false,
    };
    evaluated
        .values()
        .filter(|c| !visited.contains(&c.bin) && moves(c))
        .min_by(|a, b| {
            a.total_cost
                .total_cmp(&b.total_cost)
                .then_with(|| {
                    let da = (a.cutoff_hz - failing.cutoff_hz).abs();
                    let db = (b.cutoff_hz - failing.cutoff_hz).abs();
                    da.total_cmp(&db)
                })
                .then(a.bin.cmp(&b.bin))
        })
        .map(|c| c.bin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityStep {
    pub bin: usize,
    pub cutoff_hz: f64,
    pub total_cost: f64,
    pub sum_p_ng_mw: f64,
    pub status: ParityStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityOutcome {
    pub accepted_bin: usize,
    pub steps: Vec<ParityStep>,
    /// Bins evaluated by the loop itself (completion or one-bin steps).
    pub added_bins: Vec<usize>,
    pub completed_enumeration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityFailure {
    pub steps: Vec<ParityStep>,
    /// Cheapest evaluated candidate; it fails parity.
    pub best_infeasible: CandidateSummary,
    pub blocking: String,
}

pub fn blocking_constraint(c: &CandidateSummary, threshold_mw: f64, reg: &RegulatoryParams) -> String {
    match parity_check(c, threshold_mw, reg) {
        ParityStatus::Pass => "none".into(),
        ParityStatus::NeedMoreChp => "ng_threshold".into(),
        ParityStatus::NeedLessChp if !pv_share_holds(reg, &c.capacities) => "pv_share".into(),
        ParityStatus::NeedLessChp => "renewable_share".into(),
    }
}

/// Parity loop starting from `start`.
///
/// `evaluate` adds bins to `evaluated` on demand. If the start fails and the
/// number of bins is at most `complete_up_to`, every bin is evaluated first,
/// which makes the accepted bin the cheapest passing one. Otherwise a failed
/// reselection steps one bin at a time away from the failing bin (up for
/// more CHP, down for less) until a candidate qualifies or the range ends.
#[allow(clippy::too_many_arguments)]
pub fn run_parity_loop<E, X>(
    start: usize,
    bins: usize,
    evaluated: &mut BTreeMap<usize, CandidateSummary>,
    mut evaluate: E,
    threshold_mw: f64,
    reg: &RegulatoryParams,
    complete_up_to: usize,
) -> Result<Result<ParityOutcome, ParityFailure>, X>
where
    E: FnMut(usize) -> Result<CandidateSummary, X>,
{
    let mut ensure = |bin: usize, evaluated: &mut BTreeMap<usize, CandidateSummary>, added: &mut Vec<usize>| -> Result<(), X> {
        if let std::collections::btree_map::Entry::Vacant(e) = evaluated.entry(bin) {
            e.insert(evaluate(bin)?);
            added.push(bin);
        }
        Ok(())
    };
    let mut added = Vec::new();
    let mut steps = Vec::new();
    let mut visited = BTreeSet::new();
    let mut completed = false;
    ensure(start, evaluated, &mut added)?;
    let mut current = start;

    loop {
        let c = evaluated[&current].clone();
        let status = parity_check(&c, threshold_mw, reg);
        steps.push(ParityStep {
            bin: c.bin,
            cutoff_hz: c.cutoff_hz,
            total_cost: c.total_cost,
            sum_p_ng_mw: c.sum_p_ng_mw(),
            status,
        });
        visited.insert(current);
        if status == ParityStatus::Pass {
            return Ok(Ok(ParityOutcome {
                accepted_bin: current,
                steps,
                added_bins: added,
                completed_enumeration: completed,
            }));
        }
        if !completed && bins <= complete_up_to {
            for b in 0..bins {
                ensure(b, evaluated, &mut added)?;
            }
            completed = true;
        }
        let mut next = reselect_suboptimal(evaluated, &c, status, &visited);
        if next.is_none() && !completed {
            let mut probe = current;
            loop {
                let stepped = match status {
                    ParityStatus::NeedMoreChp if probe + 1 < bins => probe + 1,
                    ParityStatus::NeedLessChp if probe > 0 => probe - 1,
                    _ => break,
                };
                probe = stepped;
                ensure(probe, evaluated, &mut added)?;
                next = reselect_suboptimal(evaluated, &c, status, &visited);
                if next.is_some() {
                    break;
                }
            }
        }
        match next {
            Some(b) => current = b,
            None => {
                let best_infeasible = evaluated
                    .values()
                    .min_by(|a, b| a.total_cost.total_cmp(&b.total_cost).then(a.bin.cmp(&b.bin)))
                    .cloned()
                    .expect("at least the start bin");
                let blocking = blocking_constraint(&best_infeasible, threshold_mw, reg);
                return Ok(Err(ParityFailure {
                    steps,
                    best_infeasible,
                    blocking,
                }));
            }
        }
    }
}
