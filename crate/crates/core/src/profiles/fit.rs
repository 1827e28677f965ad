use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma, ln_gamma};

use super::{DayKey, DayProfile, ProfileError};

/// Smallest Beta shape produced by moment matching.
const MIN_BETA_SHAPE: f64 = 1e-3;
const WEIBULL_SHAPE_RANGE: (f64, f64) = (0.1, 20.0);
const WEIBULL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbineCurve {
    pub cut_in_m_s: f64,
    pub rated_m_s: f64,
    pub cut_out_m_s: f64,
    pub rated_power_mw: f64,
}

impl TurbineCurve {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let ok = self.cut_in_m_s >= 0.0
            && self.cut_in_m_s < self.rated_m_s
            && self.rated_m_s <= self.cut_out_m_s
            && self.rated_power_mw > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ProfileError::InvalidModel(format!(
                "turbine curve {self:?} violates 0 <= V_in < V_R <= V_out, P_R > 0"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalLoadModel {
    pub mean_mw: Vec<f64>,
    pub variance_mw2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PvSlot {
    Beta { a: f64, b: f64 },
    /// Degenerate history: output fixed at this fraction of the rating.
    Fixed { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaPvModel {
    pub rating_mw: f64,
    pub slots: Vec<PvSlot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindSlot {
    Weibull { scale_m_s: f64, shape: f64 },
    /// Degenerate history: wind speed fixed at this value.
    Fixed { speed_m_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullWindModel {
    pub turbine: TurbineCurve,
    pub slots: Vec<WindSlot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayModels {
    pub load: NormalLoadModel,
    pub pv: BetaPvModel,
    pub wind: WeibullWindModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticModelSet {
    pub interval_hours: f64,
    pub days: BTreeMap<DayKey, DayModels>,
}

impl StochasticModelSet {
    pub fn get(&self, key: DayKey) -> Option<&DayModels> {
        self.days.get(&key)
    }
}

/// Historical days per source. PV is in MW of a plant rated `pv_rating_mw`;
/// wind is speed in m/s.
#[derive(Debug, Clone, Default)]
pub struct History {
    pub load: Vec<DayProfile>,
    pub pv: Vec<DayProfile>,
    pub wind_speed: Vec<DayProfile>,
}

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Sample mean and (unbiased) variance of one slot.
pub fn fit_normal_slot(values: &[f64]) -> (f64, f64) {
    if all_equal(values) {
        return (values[0], 0.0);
    }
    moments(values)
}

/// Moment-matched Beta on the normalized values `p / rating`, clipped to [0, 1].
pub fn fit_pv_slot(values_mw: &[f64], rating_mw: f64) -> PvSlot {
    let normalized: Vec<f64> = values_mw
        .iter()
        .map(|p| (p / rating_mw).clamp(0.0, 1.0))
        .collect();
    if all_equal(&normalized) {
        return PvSlot::Fixed {
            fraction: normalized[0],
        };
    }
    let (mean, var) = moments(&normalized);
    let common = mean * (1.0 - mean) / var - 1.0;
    PvSlot::Beta {
        a: (mean * common).max(MIN_BETA_SHAPE),
        b: ((1.0 - mean) * common).max(MIN_BETA_SHAPE),
    }
}

/// `ln Γ(1+2/k) − 2 ln Γ(1+1/k) − ln(1+cv²)`; zero at the shape matching `cv`.
fn weibull_cv_residual(shape: f64, log_target: f64) -> f64 {
    ln_gamma(1.0 + 2.0 / shape) - 2.0 * ln_gamma(1.0 + 1.0 / shape) - log_target
}

fn weibull_cv_residual_slope(shape: f64) -> f64 {
    let k2 = shape * shape;
    (-2.0 * digamma(1.0 + 2.0 / shape) + 2.0 * digamma(1.0 + 1.0 / shape)) / k2
}

/// Weibull shape whose coefficient of variation equals `cv`.
///
/// Newton iteration on the log form of the CV equation, kept inside a
/// shrinking bracket on [0.1, 20] and falling back to bisection when a step
/// leaves it. CVs outside the bracket's range clamp to its ends.
pub fn weibull_shape_for_cv(cv: f64) -> f64 {
    let (mut lo, mut hi) = WEIBULL_SHAPE_RANGE;
    let target = (1.0 + cv * cv).ln();
    // residual is decreasing in shape
    if weibull_cv_residual(lo, target) <= 0.0 {
        return lo;
    }
    if weibull_cv_residual(hi, target) >= 0.0 {
        return hi;
    }
    let mut shape = cv.powf(-1.086).clamp(lo, hi);
    for _ in 0..200 {
        let r = weibull_cv_residual(shape, target);
        if r > 0.0 {
            lo = shape;
        } else {
            hi = shape;
        }
        let slope = weibull_cv_residual_slope(shape);
        let mut next = shape - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - shape).abs() <= WEIBULL_TOLERANCE * shape.max(1.0) {
            return next;
        }
        shape = next;
    }
    shape
}

pub fn fit_wind_slot(speeds: &[f64]) -> WindSlot {
    let speeds: Vec<f64> = speeds.iter().map(|v| v.max(0.0)).collect();
    if all_equal(&speeds) {
        return WindSlot::Fixed {
            speed_m_s: speeds[0],
        };
    }
    let (mean, var) = moments(&speeds);
    let shape = weibull_shape_for_cv(var.sqrt() / mean);
    WindSlot::Weibull {
        scale_m_s: mean / gamma(1.0 + 1.0 / shape),
        shape,
    }
}

fn days_for<'a>(
    days: &'a [DayProfile],
    key: DayKey,
    source_name: &'static str,
    slots: usize,
) -> Result<Vec<&'a DayProfile>, ProfileError> {
    let picked: Vec<&DayProfile> = days.iter().filter(|d| d.key() == key).collect();
    if picked.len() < 2 {
        return Err(ProfileError::InsufficientHistory {
            key,
            source_name,
            days: picked.len(),
        });
    }
    if let Some(bad) = picked.iter().find(|d| d.len() != slots) {
        return Err(ProfileError::ShapeError(format!(
            "{source_name} day has {} samples, expected {slots}",
            bad.len()
        )));
    }
    Ok(picked)
}

fn column(days: &[&DayProfile], slot: usize) -> Vec<f64> {
    days.iter().map(|d| d.samples[slot]).collect()
}

/// Per-slot method-of-moments fits for all eight representative keys.
pub fn fit_models(
    history: &History,
    pv_rating_mw: f64,
    turbine: TurbineCurve,
) -> Result<StochasticModelSet, ProfileError> {
    turbine.validate()?;
    if !(pv_rating_mw > 0.0) {
        return Err(ProfileError::InvalidModel(format!(
            "PV rating {pv_rating_mw} must be positive"
        )));
    }
    let first = history
        .load
        .first()
        .ok_or_else(|| ProfileError::InvalidModel("load history is empty".into()))?;
    let (slots, interval_hours) = (first.len(), first.interval_hours);

    let mut days = BTreeMap::new();
    for key in DayKey::all() {
        let load = days_for(&history.load, key, "load", slots)?;
        let pv = days_for(&history.pv, key, "pv", slots)?;
        let wind = days_for(&history.wind_speed, key, "wind", slots)?;

        let (mean_mw, variance_mw2) = (0..slots).map(|k| fit_normal_slot(&column(&load, k))).unzip();
        let models = DayModels {
            load: NormalLoadModel {
                mean_mw,
                variance_mw2,
            },
            pv: BetaPvModel {
                rating_mw: pv_rating_mw,
                slots: (0..slots)
                    .map(|k| fit_pv_slot(&column(&pv, k), pv_rating_mw))
                    .collect(),
            },
            wind: WeibullWindModel {
                turbine,
                slots: (0..slots).map(|k| fit_wind_slot(&column(&wind, k))).collect(),
            },
        };
        days.insert(key, models);
    }
    Ok(StochasticModelSet {
        interval_hours,
        days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_variance_load() {
        assert_eq!(fit_normal_slot(&[2.0, 2.0, 2.0]), (2.0, 0.0));
    }

    #[test]
    fn beta_moment_match_by_hand() {
        // mean 0.5, unbiased variance 0.05: four points 0.5 ± s with
        // 4 s^2 / 3 = 0.05. Hand solution: m(1-m)/v - 1 = 4, a = b = 2.
        let s = (0.0375f64).sqrt();
        let values = [0.5 - s, 0.5 + s, 0.5 - s, 0.5 + s];
        match fit_pv_slot(&values, 1.0) {
            PvSlot::Beta { a, b } => {
                assert_relative_eq!(a, 2.0, epsilon = 1e-12);
                assert_relative_eq!(b, 2.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn beta_degenerate_and_clamped() {
        assert_eq!(fit_pv_slot(&[0.0, 0.0, 0.0], 2.0), PvSlot::Fixed { fraction: 0.0 });
        // variance above m(1-m) forces the clamp
        match fit_pv_slot(&[0.0, 2.0], 2.0) {
            PvSlot::Beta { a, b } => {
                assert!(a >= MIN_BETA_SHAPE && b >= MIN_BETA_SHAPE);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weibull_exponential_case() {
        assert_relative_eq!(weibull_shape_for_cv(1.0), 1.0, epsilon = 1e-9);
        // cv of Weibull(k=2) = sqrt(4/pi - 1)
        let cv2 = (4.0 / std::f64::consts::PI - 1.0).sqrt();
        assert_relative_eq!(weibull_shape_for_cv(cv2), 2.0, epsilon = 1e-8);
        assert_eq!(weibull_shape_for_cv(1e-6), WEIBULL_SHAPE_RANGE.1);
        assert_eq!(weibull_shape_for_cv(1e6), WEIBULL_SHAPE_RANGE.0);
    }

    #[test]
    fn weibull_slot_scale_is_mean_for_exponential() {
        // two points with cv = 1 under the unbiased variance: mean 5, sd 5
        let s = 5.0 / 2f64.sqrt();
        let values = [5.0 - s, 5.0 + s];
        match fit_wind_slot(&values) {
            WindSlot::Weibull { scale_m_s, shape } => {
                assert_relative_eq!(shape, 1.0, epsilon = 1e-9);
                assert_relative_eq!(scale_m_s, 5.0, epsilon = 1e-8);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(fit_wind_slot(&[4.0, 4.0]), WindSlot::Fixed { speed_m_s: 4.0 });
    }
}
