//! Frequency-domain split of a net-load day between CHP units and battery
//! storage, and the resulting CHP/BESS capacities.
//!
//! A day of `N` samples at interval `T` is treated as one period of a
//! periodic signal. Bin `m` has frequency `min(m, N − m) / (N·T)`. Bins at or
//! below the cut-off go to CHP, the rest to BESS; DC always goes to CHP.

use std::io::Write;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::DayProfile;
use crate::snap_power;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("a day needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("cut-off {cutoff_hz} Hz outside [0, {nyquist_hz}] Hz")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("degenerate sizing parameters: {0}")]
    DegenerateParams(String),
    #[error("series lengths differ: {0} vs {1}")]
    Misaligned(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unnormalized DFT of one day.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coefficients: Vec<Complex64>,
    pub interval_hours: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Frequency spacing between bins, Hz.
    pub fn bin_step_hz(&self) -> f64 {
        bin_step_hz(self.len(), self.interval_hours)
    }

    pub fn nyquist_hz(&self) -> f64 {
        nyquist_hz(self.interval_hours)
    }

    /// Number of distinct cut-off bins (`N/2 + 1`).
    pub fn cutoff_bins(&self) -> usize {
        self.len() / 2 + 1
    }

    /// Two-sided frequency of bin `m` in Hz.
    pub fn bin_frequency_hz(&self, m: usize) -> f64 {
        m.min(self.len() - m) as f64 * self.bin_step_hz()
    }

    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.len() as f64
    }
}

pub fn bin_step_hz(samples: usize, interval_hours: f64) -> f64 {
    1.0 / (samples as f64 * interval_hours * 3600.0)
}

pub fn nyquist_hz(interval_hours: f64) -> f64 {
    1.0 / (2.0 * interval_hours * 3600.0)
}

/// Highest bin index that a cut-off admits. Inclusive, with a relative slack
/// of 1e-9 of a bin so that a cut-off computed as `m · step` lands on `m`.
pub fn cutoff_bin(cutoff_hz: f64, samples: usize, interval_hours: f64) -> usize {
    let m = (cutoff_hz / bin_step_hz(samples, interval_hours) + 1e-9).floor();
    (m.max(0.0) as usize).min(samples / 2)
}

/// Cut-off frequency of bin `m`, Hz.
pub fn bin_cutoff_hz(m: usize, samples: usize, interval_hours: f64) -> f64 {
    m as f64 * bin_step_hz(samples, interval_hours)
}

pub fn forward_transform(day: &DayProfile) -> Result<Spectrum, SpectralError> {
    if day.len() < 2 {
        return Err(SpectralError::TooShort(day.len()));
    }
    let mut buffer: Vec<Complex64> = day.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buffer.len()).process(&mut buffer);
    Ok(Spectrum {
        coefficients: buffer,
        interval_hours: day.interval_hours,
    })
}

/// Inverse DFT (with the `1/N` factor), returning the real part.
pub fn inverse_transform(spectrum: &Spectrum) -> Vec<f64> {
    let mut buffer = spectrum.coefficients.clone();
    FftPlanner::new().plan_fft_inverse(buffer.len()).process(&mut buffer);
    let n = buffer.len() as f64;
    buffer.iter().map(|c| c.re / n).collect()
}

/// Low/high-frequency parts of a day before clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSplit {
    pub chp: Vec<f64>,
    pub bess: Vec<f64>,
}

pub fn split_at_cutoff(spectrum: &Spectrum, cutoff_hz: f64) -> Result<RawSplit, SpectralError> {
    let nyquist = spectrum.nyquist_hz();
    if !(0.0..=nyquist * (1.0 + 1e-12)).contains(&cutoff_hz) {
        return Err(SpectralError::CutoffOutOfRange {
            cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    let n = spectrum.len();
    let top = cutoff_bin(cutoff_hz, n, spectrum.interval_hours);
    let zero = Complex64::new(0.0, 0.0);
    let (low, high): (Vec<_>, Vec<_>) = spectrum
        .coefficients
        .iter()
        .enumerate()
        .map(|(m, &c)| if m.min(n - m) <= top { (c, zero) } else { (zero, c) })
        .unzip();
    let part = |coefficients| {
        inverse_transform(&Spectrum {
            coefficients,
            interval_hours: spectrum.interval_hours,
        })
    };
    Ok(RawSplit {
        chp: part(low),
        bess: part(high),
    })
}

/// Clamped CHP/BESS series. `chp[k] + bess[k] == net[k]` holds bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampedSplit {
    pub net: Vec<f64>,
    pub chp: Vec<f64>,
    pub bess: Vec<f64>,
}

/// CHP cannot absorb power: negative CHP samples are set to zero and the
/// difference is moved to storage.
///
/// Net and CHP values are snapped to the power grid first, which is what
/// makes the identity exact.
pub fn clamp_negative(net: &[f64], raw_chp: &[f64]) -> Result<ClampedSplit, SpectralError> {
    if net.len() != raw_chp.len() {
        return Err(SpectralError::Misaligned(net.len(), raw_chp.len()));
    }
    let net: Vec<f64> = net.iter().map(|&x| snap_power(x)).collect();
    let chp: Vec<f64> = raw_chp.iter().map(|&x| snap_power(x.max(0.0))).collect();
    let bess = net.iter().zip(&chp).map(|(n, c)| n - c).collect();
    Ok(ClampedSplit { net, chp, bess })
}

pub fn size_chp(chp: &[f64], reserve: f64) -> f64 {
    chp.iter().copied().fold(0.0, f64::max) * (1.0 + reserve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingParams {
    pub reserve_fraction: f64,
    pub bess_efficiency: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl SizingParams {
    /// Invariant violations as `field: message` strings.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.reserve_fraction) {
            problems.push(format!("reserve_fraction: {} not in [0, 1]", self.reserve_fraction));
        }
        if !(self.bess_efficiency > 0.0 && self.bess_efficiency <= 1.0) {
            problems.push(format!("bess_efficiency: {} not in (0, 1]", self.bess_efficiency));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            problems.push(format!(
                "soc_min/soc_max: [{}, {}] not within 0 <= min < max <= 1",
                self.soc_min, self.soc_max
            ));
        }
        problems
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SpectralError::DegenerateParams(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessSizing {
    pub power_mw: f64,
    pub energy_mwh: f64,
    /// Stored-energy change from the start of the day, `N + 1` points with
    /// a leading zero. Discharge lowers it.
    pub energy_trace_mwh: Vec<f64>,
}

impl BessSizing {
    /// Energy left over at the end of the day; zero for a balanced cycle.
    pub fn daily_energy_imbalance(&self) -> f64 {
        self.energy_trace_mwh.last().copied().unwrap_or(0.0)
    }
}

/// Terminal power, power rating, energy trace and energy rating of storage
/// following `bess` (positive = discharge).
pub fn size_bess(
    bess: &[f64],
    params: &SizingParams,
    interval_hours: f64,
) -> Result<BessSizing, SpectralError> {
    params.validate()?;
    let eta = params.bess_efficiency;
    let terminal: Vec<f64> = bess
        .iter()
        .map(|&p| if p >= 0.0 { p / eta } else { p * eta })
        .collect();
    let power_mw = terminal.iter().fold(0.0f64, |acc, p| acc.max(p.abs()));
    let mut energy_trace_mwh = Vec::with_capacity(terminal.len() + 1);
    let mut stored = 0.0;
    energy_trace_mwh.push(stored);
    for p in &terminal {
        stored -= p * interval_hours;
        energy_trace_mwh.push(stored);
    }
    let (lo, hi) = energy_trace_mwh
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    Ok(BessSizing {
        power_mw,
        energy_mwh: (hi - lo) / (params.soc_max - params.soc_min),
        energy_trace_mwh,
    })
}

/// Full CHP/BESS split and sizing of one day at one cut-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub cutoff_hz: f64,
    pub cutoff_bin: usize,
    pub interval_hours: f64,
    pub net_series: Vec<f64>,
    pub chp_series: Vec<f64>,
    pub bess_series: Vec<f64>,
    pub chp_capacity_mw: f64,
    pub bess_power_capacity_mw: f64,
    pub bess_energy_capacity_mwh: f64,
    pub energy_trace_mwh: Vec<f64>,
    pub daily_energy_imbalance_mwh: f64,
}

pub fn split_day(
    day: &DayProfile,
    cutoff_hz: f64,
    params: &SizingParams,
) -> Result<SplitResult, SpectralError> {
    let spectrum = forward_transform(day)?;
    split_spectrum(day, &spectrum, cutoff_hz, params)
}

/// [`split_day`] with a precomputed spectrum of `day`.
pub fn split_spectrum(
    day: &DayProfile,
    spectrum: &Spectrum,
    cutoff_hz: f64,
    params: &SizingParams,
) -> Result<SplitResult, SpectralError> {
    let raw = split_at_cutoff(spectrum, cutoff_hz)?;
    let clamped = clamp_negative(&day.samples, &raw.chp)?;
    let bess = size_bess(&clamped.bess, params, day.interval_hours)?;
    Ok(SplitResult {
        cutoff_hz,
        cutoff_bin: cutoff_bin(cutoff_hz, day.len(), day.interval_hours),
        interval_hours: day.interval_hours,
        chp_capacity_mw: size_chp(&clamped.chp, params.reserve_fraction),
        bess_power_capacity_mw: bess.power_mw,
        bess_energy_capacity_mwh: bess.energy_mwh,
        daily_energy_imbalance_mwh: bess.daily_energy_imbalance(),
        energy_trace_mwh: bess.energy_trace_mwh,
        net_series: clamped.net,
        chp_series: clamped.chp,
        bess_series: clamped.bess,
    })
}

/// Write `slot,net,chp,bess,trace` rows; `trace` is the stored-energy change
/// after each slot.
pub fn write_split_csv<W: Write>(split: &SplitResult, mut out: W) -> Result<(), SpectralError> {
    writeln!(out, "slot,net,chp,bess,trace")?;
    for k in 0..split.net_series.len() {
        writeln!(
            out,
            "{k},{},{},{},{}",
            split.net_series[k],
            split.chp_series[k],
            split.bess_series[k],
            split.energy_trace_mwh[k + 1]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{DayType, Season};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn day(samples: Vec<f64>) -> DayProfile {
        let interval = 24.0 / samples.len() as f64;
        DayProfile::new(Season::Summer, DayType::Weekday, interval, samples).unwrap()
    }

    fn params(eta: f64) -> SizingParams {
        SizingParams {
            reserve_fraction: 0.1,
            bess_efficiency: eta,
            soc_min: 0.5,
            soc_max: 1.0,
        }
    }

    /// O(N^2) DFT, test oracle independent of the FFT library.
    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let angle = -2.0 * PI * (m * k) as f64 / n as f64;
                        Complex64::new(v * angle.cos(), v * angle.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn constant_day_has_only_dc() {
        let s = forward_transform(&day(vec![2.0; 96])).unwrap();
        assert_relative_eq!(s.coefficients[0].re, 192.0, epsilon = 1e-12);
        assert!(s.coefficients[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn single_tone_occupies_two_bins() {
        let x: Vec<f64> = (0..96).map(|k| (2.0 * PI * 3.0 * k as f64 / 96.0).cos()).collect();
        let s = forward_transform(&day(x)).unwrap();
        let nonzero: Vec<usize> = (0..96).filter(|&m| s.coefficients[m].norm() > 1e-9).collect();
        assert_eq!(nonzero, vec![3, 93]);
        assert_relative_eq!(s.coefficients[3].re, 48.0, epsilon = 1e-9);
        assert_relative_eq!(s.coefficients[93].im, -s.coefficients[3].im, epsilon = 1e-12);
    }

    #[test]
    fn fft_matches_naive_dft() {
        let x: Vec<f64> = (0..96).map(|k| ((k * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let s = forward_transform(&day(x.clone())).unwrap();
        for (a, b) in s.coefficients.iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn frequency_axis_for_quarter_hours() {
        let s = forward_transform(&day(vec![0.0; 96])).unwrap();
        assert_relative_eq!(s.nyquist_hz(), 1.0 / 1800.0);
        assert_relative_eq!(s.bin_step_hz(), 1.0 / 86_400.0);
        assert_eq!(s.cutoff_bins(), 49);
        assert_relative_eq!(s.bin_frequency_hz(95), s.bin_step_hz());
    }

    #[test]
    fn dc_only_and_full_band_splits() {
        let x: Vec<f64> = (0..96).map(|k| 2.0 + (k as f64 * 0.3).sin()).collect();
        let d = day(x.clone());
        let s = forward_transform(&d).unwrap();
        let mean = d.mean();
        let dc = split_at_cutoff(&s, 0.0).unwrap();
        for k in 0..96 {
            assert_relative_eq!(dc.chp[k], mean, epsilon = 1e-12);
            assert_relative_eq!(dc.bess[k], x[k] - mean, epsilon = 1e-12);
        }
        let full = split_at_cutoff(&s, s.nyquist_hz()).unwrap();
        for k in 0..96 {
            assert_relative_eq!(full.chp[k], x[k], epsilon = 1e-12);
            assert!(full.bess[k].abs() < 1e-12);
        }
        assert!(split_at_cutoff(&s, s.nyquist_hz() * 1.01).is_err());
    }

    #[test]
    fn tone_above_cutoff_goes_to_storage() {
        // bin 17 of a 96-sample day is 0.197 mHz
        let x: Vec<f64> = (0..96).map(|k| (2.0 * PI * 17.0 * k as f64 / 96.0).sin()).collect();
        let s = forward_transform(&day(x.clone())).unwrap();
        let split = split_at_cutoff(&s, 0.1e-3).unwrap();
        for k in 0..96 {
            assert!(split.chp[k].abs() < 1e-12);
            assert_relative_eq!(split.bess[k], x[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn clamp_cases() {
        let c = clamp_negative(&[1.0, 2.0], &[0.5, 2.5]).unwrap();
        assert_eq!(c.chp, vec![0.5, 2.5]);
        assert_eq!(c.bess, vec![0.5, -0.5]);
        let c = clamp_negative(&[-0.1], &[-0.4]).unwrap();
        assert_eq!(c.chp, vec![0.0]);
        assert_eq!(c.bess[0], snap_power(-0.1));
        assert!(clamp_negative(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn chp_sizing() {
        assert_relative_eq!(size_chp(&[0.2, 1.0, 0.4], 0.1), 1.1);
        assert_eq!(size_chp(&[0.2, 1.0], 0.0), 1.0);
        assert_eq!(size_chp(&[0.0; 4], 0.1), 0.0);
    }

    fn square_wave() -> Vec<f64> {
        (0..96).map(|k| if k < 48 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn bess_square_wave_hand_trace() {
        // discharge 1 MW for 12 h: trace falls to -12 MWh, then back to 0.
        // spread 12 MWh over a 0.5 SOC window = 24 MWh.
        let s = size_bess(&square_wave(), &params(1.0), 0.25).unwrap();
        assert_eq!(s.power_mw, 1.0);
        assert_eq!(s.energy_mwh, 24.0);
        assert_eq!(s.energy_trace_mwh.len(), 97);
        assert_eq!(s.energy_trace_mwh[48], -12.0);
        assert_eq!(s.daily_energy_imbalance(), 0.0);

        let s = size_bess(&square_wave(), &params(0.85), 0.25).unwrap();
        assert_relative_eq!(s.power_mw, 1.0 / 0.85, epsilon = 1e-15);
        // -12/0.85 at the bottom, then +12*0.85 back up
        assert_relative_eq!(s.energy_mwh, 12.0 / 0.85 / 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.daily_energy_imbalance(), -12.0 / 0.85 + 12.0 * 0.85, epsilon = 1e-12);
    }

    #[test]
    fn bess_zero_and_degenerate() {
        let s = size_bess(&[0.0; 96], &params(0.85), 0.25).unwrap();
        assert_eq!((s.power_mw, s.energy_mwh), (0.0, 0.0));
        let mut p = params(0.85);
        p.soc_min = 1.0;
        assert!(matches!(size_bess(&[0.0; 4], &p, 6.0), Err(SpectralError::DegenerateParams(_))));
    }

    #[test]
    fn full_band_with_positive_net_needs_no_storage() {
        let x: Vec<f64> = (0..96).map(|k| 2.0 + (k as f64 * 0.2).cos()).collect();
        let d = day(x);
        let nyq = nyquist_hz(d.interval_hours);
        let r = split_day(&d, nyq, &params(0.85)).unwrap();
        assert_eq!(r.bess_power_capacity_mw, 0.0);
        assert_eq!(r.cutoff_bin, 48);
    }

    #[test]
    fn same_bin_same_split() {
        let x: Vec<f64> = (0..96).map(|k| 2.0 + (k as f64 * 0.7).sin()).collect();
        let d = day(x);
        let step = bin_step_hz(96, 0.25);
        let a = split_day(&d, 5.1 * step, &params(0.85)).unwrap();
        let b = split_day(&d, 5.9 * step, &params(0.85)).unwrap();
        assert_eq!(a.chp_series, b.chp_series);
        assert_eq!(a.cutoff_bin, 5);
        assert_eq!(cutoff_bin(bin_cutoff_hz(7, 96, 0.25), 96, 0.25), 7);
    }

    #[test]
    fn csv_has_one_row_per_slot() {
        let d = day(square_wave().iter().map(|x| x + 2.0).collect());
        let r = split_day(&d, 0.0, &params(1.0)).unwrap();
        let mut buf = Vec::new();
        write_split_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 97);
        assert!(text.starts_with("slot,net,chp,bess,trace\n0,3,2,1,"));
    }

    proptest! {
        #[test]
        fn parseval_round_trip_and_identity(
            x in proptest::collection::vec(-5.0f64..8.0, 96),
            bin in 0usize..=48,
            r in 0.0f64..0.5,
        ) {
            let d = day(x.clone());
            let s = forward_transform(&d).unwrap();
            let time_energy: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((time_energy - s.energy()).abs() <= 1e-9 * time_energy.max(1e-300));
            let back = inverse_transform(&s);
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-12 * 8.0);
            }

            let cutoff = bin_cutoff_hz(bin, 96, 0.25);
            let raw = split_at_cutoff(&s, cutoff).unwrap();
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            prop_assert!(raw.bess.iter().sum::<f64>().abs() <= 1e-9 * l1.max(1.0));
            for k in 0..96 {
                prop_assert!((raw.chp[k] + raw.bess[k] - x[k]).abs() <= 1e-9);
            }

            let mut p = params(0.85);
            p.reserve_fraction = r;
            let split = split_spectrum(&d, &s, cutoff, &p).unwrap();
            for k in 0..96 {
                prop_assert_eq!(split.chp_series[k] + split.bess_series[k], split.net_series[k]);
                prop_assert!(split.chp_series[k] >= 0.0);
                prop_assert!((split.net_series[k] - x[k]).abs() <= crate::POWER_RESOLUTION_MW);
            }
            p.reserve_fraction = r + 0.1;
            let wider = split_spectrum(&d, &s, cutoff, &p).unwrap();
            prop_assert!(wider.chp_capacity_mw >= split.chp_capacity_mw);
        }
    }
}
