use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Weibull};
use serde::{Deserialize, Serialize};

use super::{
    wind_power_curve, DayKey, DayProfile, ProfileError, PvSlot, StochasticModelSet, WindSlot,
};

const LOAD_RESAMPLE_LIMIT: usize = 100;

/// One stochastic draw of a representative day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDay {
    pub load: DayProfile,
    /// PV output in MW of the model's rated plant.
    pub pv: DayProfile,
    /// Turbine output in MW of the model's turbine.
    pub wind: DayProfile,
}

/// Normal draw truncated at zero: redraw up to 100 times, then clamp.
pub fn sample_load_slot<R: Rng + ?Sized>(mean: f64, variance: f64, rng: &mut R) -> f64 {
    if variance <= 0.0 {
        return mean.max(0.0);
    }
    let normal = Normal::new(mean, variance.sqrt()).expect("finite positive sd");
    for _ in 0..LOAD_RESAMPLE_LIMIT {
        let x = normal.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
    0.0
}

pub fn sample_pv_slot<R: Rng + ?Sized>(slot: &PvSlot, rating_mw: f64, rng: &mut R) -> f64 {
    let fraction = match *slot {
        PvSlot::Fixed { fraction } => fraction,
        PvSlot::Beta { a, b } => Beta::new(a, b).expect("positive shapes").sample(rng),
    };
    fraction.clamp(0.0, 1.0) * rating_mw
}

pub fn sample_wind_speed<R: Rng + ?Sized>(slot: &WindSlot, rng: &mut R) -> f64 {
    match *slot {
        WindSlot::Fixed { speed_m_s } => speed_m_s,
        WindSlot::Weibull { scale_m_s, shape } => {
            Weibull::new(scale_m_s, shape).expect("positive parameters").sample(rng)
        }
    }
}

/// Draw load, PV and wind for one representative day. Slots and sources are
/// independent; the same seed always gives the same day.
pub fn sample_day(
    models: &StochasticModelSet,
    key: DayKey,
    seed: u64,
) -> Result<SampledDay, ProfileError> {
    let day = models
        .get(key)
        .ok_or_else(|| ProfileError::InvalidModel(format!("no model for {key}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let load: Vec<f64> = day
        .load
        .mean_mw
        .iter()
        .zip(&day.load.variance_mw2)
        .map(|(&m, &v)| sample_load_slot(m, v, &mut rng))
        .collect();
    let pv: Vec<f64> = day
        .pv
        .slots
        .iter()
        .map(|slot| sample_pv_slot(slot, day.pv.rating_mw, &mut rng))
        .collect();
    let wind: Vec<f64> = day
        .wind
        .slots
        .iter()
        .map(|slot| wind_power_curve(sample_wind_speed(slot, &mut rng), &day.wind.turbine))
        .collect();

    let make = |samples| DayProfile::new(key.season, key.day_type, models.interval_hours, samples);
    Ok(SampledDay {
        load: make(load)?,
        pv: make(pv)?,
        wind: make(wind)?,
    })
}
