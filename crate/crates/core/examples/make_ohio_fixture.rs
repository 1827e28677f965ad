//! Writes the synthetic Ohio scenario: one year (2023) of 15-minute load, PV
//! and wind-speed history plus `config.toml`.
//!
//! `cargo run --example make_ohio_fixture [-- <dir>]`

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SLOTS: usize = 96;
const DT_H: f64 = 0.25;
const SUMMER_WEEKDAY_PEAK_MW: f64 = 4.5;

struct SeasonShape {
    load_scale: f64,
    sunrise_h: f64,
    sunset_h: f64,
    pv_peak: f64,
    wind_mean_m_s: f64,
}

/// Winter, spring, summer, autumn.
const SEASONS: [SeasonShape; 4] = [
    SeasonShape { load_scale: 0.86, sunrise_h: 7.8, sunset_h: 17.4, pv_peak: 0.45, wind_mean_m_s: 8.0 },
    SeasonShape { load_scale: 0.78, sunrise_h: 6.6, sunset_h: 19.8, pv_peak: 0.75, wind_mean_m_s: 7.5 },
    SeasonShape { load_scale: 1.0, sunrise_h: 6.2, sunset_h: 21.0, pv_peak: 0.85, wind_mean_m_s: 5.5 },
    SeasonShape { load_scale: 0.8, sunrise_h: 7.6, sunset_h: 18.8, pv_peak: 0.6, wind_mean_m_s: 6.8 },
];

/// Daily load shape: overnight trough, morning ramp, afternoon plateau and
/// an early-evening peak. Divided by [`shape_peak`] before use.
fn load_shape(h: f64, weekend: bool) -> f64 {
    let bump = |center: f64, width: f64| (-((h - center) / width).powi(2)).exp();
    if weekend {
        0.52 + 0.22 * bump(11.5, 3.5) + 0.28 * bump(18.5, 2.5)
    } else {
        0.48 + 0.28 * bump(9.0, 2.0) + 0.32 * bump(15.0, 3.0) + 0.38 * bump(18.0, 1.8)
    }
}

fn shape_peak(weekend: bool) -> f64 {
    (0..SLOTS * 10).map(|k| load_shape(k as f64 * DT_H / 10.0, weekend)).fold(0.0, f64::max)
}

fn pv_clear_sky(h: f64, s: &SeasonShape) -> f64 {
    if h <= s.sunrise_h || h >= s.sunset_h {
        return 0.0;
    }
    s.pv_peak * (PI * (h - s.sunrise_h) / (s.sunset_h - s.sunrise_h)).sin().powf(1.3)
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("ohio_fixture"));
    fs::create_dir_all(&dir).expect("create fixture dir");

    let mut rng = ChaCha8Rng::seed_from_u64(20_230_101);
    let load_noise = Normal::new(0.0, 0.03).unwrap();
    let wind_noise = Normal::new(0.0, 1.2).unwrap();
    let (peak_wd, peak_we) = (shape_peak(false), shape_peak(true));

    let mut load = String::from("timestamp,value\n");
    let mut pv = String::from("timestamp,value\n");
    let mut wind = String::from("timestamp,value\n");
    let first = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
    for d in 0..365 {
        let date = first + Duration::days(d);
        let s = &SEASONS[match date.month() {
            3..=5 => 1,
            6..=8 => 2,
            9..=11 => 3,
            _ => 0,
        }];
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let day_level = if weekend { 0.82 } else { 1.0 };
        let cloud: f64 = 0.55 + 0.45 * rng.random::<f64>();
        let gust_level = s.wind_mean_m_s * (0.75 + 0.5 * rng.random::<f64>());
        let mut speed = gust_level;
        for k in 0..SLOTS {
            let h = k as f64 * DT_H;
            let stamp = date.and_hms_opt(0, 0, 0).unwrap() + Duration::minutes(15 * k as i64);
            let ts = stamp.format("%Y-%m-%dT%H:%M");

            let shape = load_shape(h, weekend) / if weekend { peak_we } else { peak_wd };
            let mw = SUMMER_WEEKDAY_PEAK_MW * s.load_scale * day_level * shape * (1.0 + load_noise.sample(&mut rng));
            writeln!(load, "{ts},{:.4}", mw.max(0.0)).unwrap();

            let sky = pv_clear_sky(h, s);
            let p = if sky > 0.0 {
                (sky * cloud * (0.85 + 0.15 * rng.random::<f64>())).clamp(0.0, 1.0)
            } else {
                0.0
            };
            writeln!(pv, "{ts},{p:.4}").unwrap();

            // AR(1) around a diurnal mean that picks up in the afternoon
            let diurnal = gust_level * (1.0 + 0.2 * (2.0 * PI * (h - 15.0) / 24.0).cos());
            speed = 0.8 * speed + 0.2 * diurnal + 0.6 * wind_noise.sample(&mut rng);
            writeln!(wind, "{ts},{:.4}", speed.max(0.0)).unwrap();
        }
    }
    fs::write(dir.join("load.csv"), load).unwrap();
    fs::write(dir.join("pv.csv"), pv).unwrap();
    fs::write(dir.join("wind.csv"), wind).unwrap();
    fs::write(dir.join("config.toml"), CONFIG).unwrap();
    println!("wrote {}", dir.display());
}

const CONFIG: &str = r#"# Synthetic Ohio community microgrid, 15-minute resolution.
seed = 7
mode = "full"
interval_hours = 0.25
output_dir = "out"

[inputs]
load_csv = "load.csv"
pv_csv = "pv.csv"
wind_csv = "wind.csv"
pv_rating_mw = 1.0

[turbine]
cut_in_m_s = 3.0
rated_m_s = 12.0
cut_out_m_s = 25.0
rated_power_mw = 1.0

[savings_coefficients.pv]
alpha_tons_per_mw = 1479.7
beta_mwh_per_mw = 1594.3
gamma_mmbtu_per_mw = 23458.1

[savings_coefficients.wind]
alpha_tons_per_mw = 1967.6
beta_mwh_per_mw = 2119.9
gamma_mmbtu_per_mw = 31191.7

[savings_coefficients.biomass]
alpha_tons_per_mw = 6437.0
beta_e_mwh_per_mw = 7008.0
beta_th_mwh_per_mw = 9877.66
gamma_mmbtu_per_mw = 103114.0

[savings_coefficients.natural_gas]
alpha_tons_per_mw = 6345.0
beta_e_mwh_per_mw = 7008.0
beta_th_mwh_per_mw = 9877.66
gamma_mmbtu_per_mw = 23340.0

[regulatory_params]
theta_pv_share = 0.005
rho_renewable_share = 0.125
omega_co2_reduction = 0.20
delta_efficiency_increase = 0.20

[demand_context]
electric_load_mwh_per_yr = 26280.0
thermal_load_mwh_per_yr = 100000.0
base_co2_tons_per_mw = 6330.55
average_load_mw = 3.0
biomass_cap_mw = 0.5
pv_cap_mw = 4.0
wind_cap_mw = 1.0
ng_threshold_cap_mw = 4.95

[cost_book]
discount_rate = 0.05
lifetime_years = 20.0
ng_efficiency = 0.3

[cost_book.pv]
capital_cost_usd_per_mw = 2800000.0
om_cost_usd_per_mw_yr = 19000.0
tax_credit_usd_per_mwh = 23.0

[cost_book.wind]
capital_cost_usd_per_mw = 1710000.0
om_cost_usd_per_mw_yr = 29000.0
tax_credit_usd_per_mwh = 23.0

[cost_book.biomass]
capital_cost_usd_per_mw = 1000000.0
om_cost_usd_per_mw_yr = 91000.0
tax_credit_usd_per_mwh = 12.0

[cost_book.natural_gas]
capital_cost_usd_per_mw = 1000000.0
om_cost_usd_per_mw_yr = 91000.0
fuel_cost_usd_per_mwh = 10.0

[cost_book.bess]
capital_power_usd_per_mw_yr = 280000.0
capital_energy_usd_per_mwh_yr = 24000.0
om_cost_usd_per_mw_yr = 3000.0

[sizing_params]
reserve_fraction = 0.1
bess_efficiency = 0.85
soc_min = 0.5
soc_max = 1.0

[pso_config]
swarm_size = 30
iterations = 60
"#;
