//! Planning toolkit for community microgrids.
//!
//! The pipeline sizes renewables by maximizing annual fuel savings under
//! regulatory floors ([`renewable_lp`]), builds stochastic net-load days
//! ([`profiles`]), splits each day between CHP and battery storage in the
//! frequency domain ([`spectral_sizing`]), prices the result
//! ([`cost_model`]), searches the cut-off frequency with a particle swarm and
//! a parity loop ([`optimizer`]) and finally reports evaluation indices and
//! baselines ([`evaluation`]). [`cli`] wires it together behind a config file.

pub mod cli;
pub mod cost_model;
pub mod evaluation;
pub mod optimizer;
pub mod profiles;
pub mod renewable_lp;
pub mod spectral_sizing;

/// Resolution of the power grid that split series are snapped to, in MW.
///
/// Power values that are integer multiples of this step add and subtract
/// exactly in `f64` as long as they stay below 2^21 MW.
pub const POWER_RESOLUTION_MW: f64 = 1.0 / 4_294_967_296.0;

/// Round a power value to the nearest multiple of [`POWER_RESOLUTION_MW`].
pub fn snap_power(mw: f64) -> f64 {
    (mw / POWER_RESOLUTION_MW).round() * POWER_RESOLUTION_MW
}
