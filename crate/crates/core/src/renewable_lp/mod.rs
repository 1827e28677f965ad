//! Step 1: size PV, wind and biomass and the NG-CHP threshold by maximizing
//! annual fuel savings under the regulatory mandates.

mod kkt;
mod simplex;
mod sizing;

pub use kkt::{kkt_verify, KktReport, KKT_TOLERANCE};
pub use simplex::{
    Constraint, FarkasCertificate, LinearProgram, LpError, LpSolution, Relation, UnboundedRay,
};
pub use sizing::{
    build_lp, co2_reduction_fraction, co2_reduction_holds, cost_only_solution,
    efficiency_increase_fraction, efficiency_increase_holds, emissions_reduction, fuel_savings,
    pv_share, pv_share_holds, renewable_share, renewable_share_holds, solve_fs_program, solve_lp,
    system_energy_savings, Capacities, ChpCoefficients, DemandContext, LabeledValue,
    RegulatoryParams, RenewableCoefficients, RenewableSizingSolution, SavingsCoefficients,
    SizingLp, BIOMASS_CAP_LIMIT_MW, MIN_DENOMINATOR_MW, VARIABLES,
};

#[derive(Debug, thiserror::Error)]
pub enum SizingError {
    #[error("invalid sizing model: {0}")]
    Model(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("solver optimum failed KKT verification (max residual {})", .0.max_residual())]
    KktFailed(KktReport),
}
