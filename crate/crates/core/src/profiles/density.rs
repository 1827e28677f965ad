use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{ProfileError, TurbineCurve};

/// Normal density of load power.
pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> Result<f64, ProfileError> {
    if variance < 0.0 || !variance.is_finite() {
        return Err(ProfileError::InvalidModel(format!("variance {variance} is invalid")));
    }
    if variance == 0.0 {
        return Err(ProfileError::DegenerateDistribution);
    }
    let z = x - mean;
    Ok((-z * z / (2.0 * variance)).exp() / (2.0 * variance * std::f64::consts::PI).sqrt())
}

/// Density of PV output over MW.
///
/// The Beta law is defined on `p / p_max`; dividing by `p_max` turns it into
/// a density per MW so it shares units with the load and wind densities.
pub fn pv_power_pdf(p: f64, a: f64, b: f64, p_max: f64) -> Result<f64, ProfileError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(ProfileError::InvalidModel(format!("beta shapes a={a}, b={b} must be positive")));
    }
    if !(p_max > 0.0) {
        return Err(ProfileError::InvalidModel(format!("PV rating {p_max} must be positive")));
    }
    if !(0.0..=p_max).contains(&p) {
        return Err(ProfileError::DomainError { value: p, lo: 0.0, hi: p_max });
    }
    let u = p / p_max;
    let log_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let body = |base: f64, exponent: f64| {
        if exponent == 0.0 {
            0.0
        } else {
            exponent * base.ln()
        }
    };
    Ok((log_norm + body(u, a - 1.0) + body(1.0 - u, b - 1.0)).exp() / p_max)
}

/// Piecewise-linear turbine curve: zero below cut-in and above cut-out, a
/// linear ramp up to rated speed, flat at rated power up to cut-out.
pub fn wind_power_curve(speed: f64, turbine: &TurbineCurve) -> f64 {
    let TurbineCurve {
        cut_in_m_s,
        rated_m_s,
        cut_out_m_s,
        rated_power_mw,
    } = *turbine;
    if speed < cut_in_m_s || speed > cut_out_m_s {
        0.0
    } else if speed <= rated_m_s {
        rated_power_mw * (speed - cut_in_m_s) / (rated_m_s - cut_in_m_s)
    } else {
        rated_power_mw
    }
}

pub fn weibull_cdf(speed: f64, scale: f64, shape: f64) -> f64 {
    if speed <= 0.0 {
        0.0
    } else {
        1.0 - (-(speed / scale).powf(shape)).exp()
    }
}

/// Mixed distribution of turbine output: a density on `(0, P_R)` and two
/// probability atoms at `0` and `P_R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindPowerDensity {
    /// Continuous part in 1/MW. Evaluated from the same expression at the
    /// closed endpoints, where it is the one-sided limit.
    pub continuous: f64,
    /// Probability of zero output (calm or storm shutdown).
    pub atom_zero: f64,
    /// Probability of rated output.
    pub atom_rated: f64,
}

pub fn wind_power_pdf(
    p: f64,
    scale: f64,
    shape: f64,
    turbine: &TurbineCurve,
) -> Result<WindPowerDensity, ProfileError> {
    if !(scale > 0.0 && shape > 0.0) {
        return Err(ProfileError::InvalidModel(format!(
            "weibull scale={scale}, shape={shape} must be positive"
        )));
    }
    turbine.validate()?;
    let p_r = turbine.rated_power_mw;
    if !(0.0..=p_r).contains(&p) {
        return Err(ProfileError::DomainError { value: p, lo: 0.0, hi: p_r });
    }
    let cdf = |v| weibull_cdf(v, scale, shape);
    let ramp = turbine.rated_m_s - turbine.cut_in_m_s;
    let speed = turbine.cut_in_m_s + ramp * p / p_r;
    let ratio = speed / scale;
    let continuous = if speed == 0.0 && shape < 1.0 {
        f64::INFINITY
    } else if speed == 0.0 && shape > 1.0 {
        0.0
    } else {
        ramp / p_r * shape / scale * ratio.powf(shape - 1.0) * (-ratio.powf(shape)).exp()
    };
    Ok(WindPowerDensity {
        continuous,
        atom_zero: 1.0 - (cdf(turbine.cut_out_m_s) - cdf(turbine.cut_in_m_s)),
        atom_rated: cdf(turbine.cut_out_m_s) - cdf(turbine.rated_m_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn turbine() -> TurbineCurve {
        TurbineCurve {
            cut_in_m_s: 3.0,
            rated_m_s: 12.0,
            cut_out_m_s: 25.0,
            rated_power_mw: 1.0,
        }
    }

    /// Composite Simpson rule; test-side quadrature oracle.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn normal_reference_values() {
        assert_relative_eq!(normal_pdf(0.0, 0.0, 1.0).unwrap(), 0.398_942_280_401_432_7, epsilon = 1e-15);
        // mpmath: exp(-1/8) / sqrt(8 pi)
        assert_relative_eq!(normal_pdf(1.0, 0.0, 4.0).unwrap(), 0.176_032_663_382_149_74, epsilon = 1e-15);
        let (mu, var) = (2.0, 0.3_f64);
        let s = var.sqrt();
        assert_relative_eq!(
            normal_pdf(mu + s, mu, var).unwrap(),
            normal_pdf(mu - s, mu, var).unwrap(),
            epsilon = 1e-15
        );
        assert!(matches!(normal_pdf(1.0, 1.0, 0.0), Err(ProfileError::DegenerateDistribution)));
    }

    #[test]
    fn pv_reference_values() {
        for p in [0.0, 0.3, 1.0, 2.0] {
            assert_relative_eq!(pv_power_pdf(p, 1.0, 1.0, 2.0).unwrap(), 0.5, epsilon = 1e-12);
        }
        assert_relative_eq!(pv_power_pdf(1.5, 2.0, 2.0, 3.0).unwrap(), 1.5 / 3.0, epsilon = 1e-12);
        // 30 * 0.2 * 0.8^4
        assert_relative_eq!(pv_power_pdf(0.4, 2.0, 5.0, 2.0).unwrap(), 2.4576 / 2.0, epsilon = 1e-12);
        assert!(matches!(pv_power_pdf(2.1, 2.0, 5.0, 2.0), Err(ProfileError::DomainError { .. })));
        assert!(matches!(pv_power_pdf(-0.1, 2.0, 5.0, 2.0), Err(ProfileError::DomainError { .. })));
    }

    #[test]
    fn pv_density_integrates_to_one() {
        for &(a, b, pmax) in &[(2.0, 5.0, 2.0), (3.5, 1.5, 4.37), (1.0, 1.0, 1.0), (2.0, 2.0, 0.7)] {
            let total = simpson(|p| pv_power_pdf(p, a, b, pmax).unwrap(), 0.0, pmax, 20_000);
            assert_relative_eq!(total, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn turbine_curve_pieces() {
        let t = turbine();
        assert_eq!(wind_power_curve(2.0, &t), 0.0);
        assert_eq!(wind_power_curve(7.5, &t), 0.5);
        assert_eq!(wind_power_curve(26.0, &t), 0.0);
        assert_eq!(wind_power_curve(3.0, &t), 0.0);
        assert_eq!(wind_power_curve(12.0, &t), 1.0);
        assert_eq!(wind_power_curve(25.0, &t), 1.0);
        assert_eq!(wind_power_curve(18.0, &t), 1.0);
    }

    #[test]
    fn weibull_cdf_at_scale() {
        assert_relative_eq!(weibull_cdf(10.0, 10.0, 2.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(weibull_cdf(10.0, 10.0, 2.0), 0.632_120_558_828_557_7, epsilon = 1e-15);
    }

    #[test]
    fn wind_atoms_match_independent_values() {
        // mpmath, 30 digits: F(25)=0.99806954586..., F(3)=0.08606881472...,
        // F(12)=0.76307224131...
        let d = wind_power_pdf(0.0, 10.0, 2.0, &turbine()).unwrap();
        assert_relative_eq!(d.atom_zero, 0.087_999_268_864_999_52, epsilon = 1e-12);
        assert_relative_eq!(d.atom_rated, 0.234_997_304_545_894_05, epsilon = 1e-12);
    }

    #[test]
    fn wind_mixture_has_unit_mass() {
        for &(scale, shape) in &[(10.0, 2.0), (7.0, 1.4), (12.0, 3.0), (5.0, 0.9)] {
            let t = turbine();
            let d = wind_power_pdf(0.5, scale, shape, &t).unwrap();
            let cont = simpson(
                |p| wind_power_pdf(p, scale, shape, &t).unwrap().continuous,
                0.0,
                t.rated_power_mw,
                20_000,
            );
            assert_relative_eq!(d.atom_zero + d.atom_rated + cont, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn wind_pdf_domain() {
        assert!(matches!(
            wind_power_pdf(1.5, 10.0, 2.0, &turbine()),
            Err(ProfileError::DomainError { .. })
        ));
    }
}
