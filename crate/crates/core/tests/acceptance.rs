//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dercoopt::cli::{load_config, Mode};
use dercoopt::cost_model::capital_recovery_factor;
use dercoopt::evaluation::{compile_report, renewable_utilization};
use dercoopt::optimizer::{co_optimize_prepared, evaluate_cutoff, search_cutoff, CandidateCache, ParityStatus, PsoConfig};
use dercoopt::profiles::{ingest_series, DayProfile, DayType, Season};
use dercoopt::renewable_lp::{
    build_lp, co2_reduction_fraction, co2_reduction_holds, efficiency_increase_fraction, efficiency_increase_holds,
    fuel_savings, pv_share_holds, renewable_share_holds, solve_lp, Capacities, DemandContext, LpError,
    RegulatoryParams, SavingsCoefficients, SizingError, KKT_TOLERANCE,
};
use dercoopt::spectral_sizing::{
    forward_transform, inverse_transform, size_bess, split_at_cutoff, split_spectrum, SizingParams,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let mut o = result.unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    if elapsed > budget {
        o.pass = false;
    }
    o.detail = format!("{}; {:.3?} of {:?}", o.detail, elapsed, budget);
    o
}

fn crf() -> Outcome {
    let f = capital_recovery_factor(0.05, 20.0);
    let a = f * 1_000_000.0;
    let b = f * 2_800_000.0;
    let ok = ((a - 80_000.0) / 80_000.0).abs() <= 0.005 && ((b - 224_700.0) / 224_700.0).abs() <= 0.005;
    outcome(ok, format!("annualized {a:.1} vs 80000, {b:.1} vs 224700"))
}

fn transform_integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_parseval, mut worst_round) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..96).map(|_| rng.random_range(-5.0..10.0)).collect();
        let day = DayProfile::new(Season::Summer, DayType::Weekday, 0.25, x.clone()).unwrap();
        let s = forward_transform(&day).unwrap();
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = s.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / 96.0;
        worst_parseval = worst_parseval.max((time - freq).abs() / time);
        let back = inverse_transform(&s);
        worst_round = worst_round.max(x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    outcome(
        worst_parseval <= 1e-9 && worst_round <= 1e-12,
        format!("max Parseval rel err {worst_parseval:.2e}, max round-trip err {worst_round:.2e}"),
    )
}

fn split_identity(fixture: &common::Loaded, history: &[DayProfile]) -> Outcome {
    let sc = &fixture.scenario;
    let mut days: Vec<(DayProfile, Vec<usize>)> = sc.days.iter().map(|d| (d.net.clone(), (0..sc.cutoff_bins()).collect())).collect();
    days.extend(history.iter().map(|d| (d.clone(), vec![0, 3, 12, 48])));
    let (mut mismatches, mut worst_sum, mut splits) = (0usize, 0.0f64, 0usize);
    for (day, bins) in &days {
        let spectrum = forward_transform(day).unwrap();
        let l1: f64 = day.samples.iter().map(|v| v.abs()).sum();
        for &bin in bins {
            let cutoff = sc.bin_cutoff_hz(bin);
            let raw = split_at_cutoff(&spectrum, cutoff).unwrap();
            worst_sum = worst_sum.max(raw.bess.iter().sum::<f64>().abs() / l1.max(f64::MIN_POSITIVE));
            let r = split_spectrum(day, &spectrum, cutoff, &sc.sizing).unwrap();
            mismatches += (0..day.len()).filter(|&k| r.chp_series[k] + r.bess_series[k] != r.net_series[k]).count();
            mismatches += (0..day.len()).filter(|&k| r.net_series[k] != dercoopt::snap_power(day.samples[k])).count();
            splits += 1;
        }
    }
    outcome(
        mismatches == 0 && worst_sum <= 1e-9,
        format!("{splits} splits, {mismatches} inexact slots, max |sum pre-clamp BESS|/|net|_1 {worst_sum:.2e}"),
    )
}

fn bess_oracle() -> Outcome {
    let square: Vec<f64> = (0..96).map(|k| if k < 48 { 1.0 } else { -1.0 }).collect();
    let params = |eta| SizingParams {
        reserve_fraction: 0.1,
        bess_efficiency: eta,
        soc_min: 0.5,
        soc_max: 1.0,
    };
    let lossy = size_bess(&square, &params(0.85), 0.25).unwrap();
    let ideal = size_bess(&square, &params(1.0), 0.25).unwrap();
    let ok = lossy.power_mw == 1.0 / 0.85 && ideal.power_mw == 1.0 && ideal.energy_mwh == 24.0;
    outcome(
        ok,
        format!(
            "power {} MW at eta 0.85, energy {} MWh at eta 1",
            lossy.power_mw, ideal.energy_mwh
        ),
    )
}

const GRID_STEP: f64 = 0.01;

/// Best fuel savings over the 0.01 MW grid. For each (PV, wind, biomass)
/// point the NG values meeting the linear mandates form an interval; its top
/// grid point is confirmed with the pass/fail checks.
fn grid_best(reg: &RegulatoryParams, coeff: &SavingsCoefficients, ctx: &DemandContext) -> Option<f64> {
    let steps = |cap: f64| (cap / GRID_STEP + 1e-9).floor() as i64;
    let (n_pv, n_wt, n_bio, n_ng) = (steps(ctx.pv_cap_mw), steps(ctx.wind_cap_mw), steps(ctx.biomass_cap_mw), steps(ctx.ng_threshold_cap_mw));
    let feasible = |x: &Capacities| {
        pv_share_holds(reg, x)
            && renewable_share_holds(reg, x)
            && co2_reduction_holds(reg, coeff, ctx, x)
            && efficiency_increase_holds(reg, coeff, ctx, x)
    };
    let mut best: Option<f64> = None;
    for i in 0..=n_pv {
        for j in 0..=n_wt {
            for b in 0..=n_bio {
                let mut x = Capacities {
                    pv_mw: i as f64 * GRID_STEP,
                    wind_mw: j as f64 * GRID_STEP,
                    biomass_mw: b as f64 * GRID_STEP,
                    ng_mw: 0.0,
                };
                // PV share does not involve NG
                if !pv_share_holds(reg, &x) {
                    continue;
                }
                let mut lo = 0.0f64;
                let mut hi = n_ng as f64 * GRID_STEP;
                let ren = x.pv_mw + x.wind_mw + x.biomass_mw;
                if reg.rho_renewable_share > 0.0 {
                    hi = hi.min(ren * (1.0 - reg.rho_renewable_share) / reg.rho_renewable_share);
                }
                for (f, floor) in [
                    (co2_reduction_fraction as fn(&SavingsCoefficients, &DemandContext, &Capacities) -> f64, reg.omega_co2_reduction),
                    (efficiency_increase_fraction, reg.delta_efficiency_increase),
                ] {
                    let f0 = f(coeff, ctx, &x);
                    let slope = f(coeff, ctx, &Capacities { ng_mw: 1.0, ..x }) - f0;
                    if f0 < floor {
                        lo = lo.max((floor - f0) / slope);
                    }
                }
                if !(lo <= hi + GRID_STEP) {
                    continue;
                }
                let (k_lo, mut k) = (((lo / GRID_STEP) - 1.0).floor().max(0.0) as i64, ((hi / GRID_STEP) + 1.0).floor().min(n_ng as f64) as i64);
                // fuel savings grow with NG, so nothing below the best so far can win
                if best.is_some_and(|v| fuel_savings(coeff, &Capacities { ng_mw: k as f64 * GRID_STEP, ..x }) <= v) {
                    continue;
                }
                while k >= k_lo {
                    x.ng_mw = k as f64 * GRID_STEP;
                    if feasible(&x) {
                        let fs = fuel_savings(coeff, &x);
                        if best.is_none_or(|v| fs > v) {
                            best = Some(fs);
                        }
                        break;
                    }
                    k -= 1;
                }
            }
        }
    }
    best
}

fn lp_vs_grid(base: &SavingsCoefficients, demand: &DemandContext) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut feasible, mut tried, mut worst_gap, mut worst_kkt) = (0, 0, f64::INFINITY, 0.0f64);
    let mut failures = Vec::new();
    while feasible < 50 && tried < 400 {
        tried += 1;
        let reg = RegulatoryParams {
            theta_pv_share: rng.random_range(0.0..0.3),
            rho_renewable_share: rng.random_range(0.0..0.6),
            omega_co2_reduction: rng.random_range(0.0..0.8),
            delta_efficiency_increase: rng.random_range(0.0..0.8),
            pv_share_includes_biomass: false,
        };
        let ctx = DemandContext {
            pv_cap_mw: rng.random_range(0.0..5.0),
            wind_cap_mw: rng.random_range(0.0..5.0),
            biomass_cap_mw: rng.random_range(0.0..0.5),
            ng_threshold_cap_mw: rng.random_range(0.0..5.0),
            ..*demand
        };
        let mut coeff = *base;
        coeff.pv.gamma_mmbtu_per_mw *= rng.random_range(0.5..1.5);
        coeff.wind.gamma_mmbtu_per_mw *= rng.random_range(0.5..1.5);
        coeff.biomass.gamma_mmbtu_per_mw *= rng.random_range(0.5..1.5);
        coeff.natural_gas.gamma_mmbtu_per_mw *= rng.random_range(0.5..1.5);
        let sizing = build_lp(&reg, &coeff, &ctx).unwrap();
        let grid = grid_best(&reg, &coeff, &ctx);
        match solve_lp(&sizing) {
            Ok(s) => {
                feasible += 1;
                let kkt = s.fs_kkt.max_residual().max(s.threshold_kkt.max_residual());
                worst_kkt = worst_kkt.max(kkt);
                let slack = GRID_STEP * coeff.gamma().iter().sum::<f64>();
                if let Some(g) = grid {
                    worst_gap = worst_gap.min(s.max_fuel_savings_mmbtu - (g - slack));
                    if s.max_fuel_savings_mmbtu < g - slack {
                        failures.push(format!("instance {tried}: solver {} < grid {g}", s.max_fuel_savings_mmbtu));
                    }
                }
                if !(s.fs_kkt.passes && s.threshold_kkt.passes) || kkt > KKT_TOLERANCE {
                    failures.push(format!("instance {tried}: KKT residual {kkt:.2e}"));
                }
            }
            Err(SizingError::Lp(LpError::Infeasible(cert))) => {
                if grid.is_some() || !cert.verify(&sizing.lp, 1e-9) {
                    failures.push(format!("instance {tried}: infeasible verdict contradicted"));
                }
            }
            Err(e) => failures.push(format!("instance {tried}: {e}")),
        }
    }
    outcome(
        failures.is_empty() && feasible == 50,
        format!(
            "{feasible} feasible of {tried}; min (solver - grid + slack) {worst_gap:.3}; max KKT residual {worst_kkt:.2e}{}",
            failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn exhaustive(scenario: &dercoopt::optimizer::PreparedScenario) -> Vec<(usize, f64, ParityStatus)> {
    (0..scenario.cutoff_bins())
        .map(|b| {
            let r = evaluate_cutoff(scenario.bin_cutoff_hz(b), scenario).unwrap();
            (b, r.total_cost(), r.parity)
        })
        .collect()
}

fn pso_vs_enumeration(fixtures: &[&common::Loaded]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for f in fixtures {
        let sc = &f.scenario;
        if sc.cutoff_bins() != 49 {
            return outcome(false, format!("fixture has {} bins", sc.cutoff_bins()));
        }
        let best = exhaustive(sc).iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let mut hits = 0;
        for seed in 0..10 {
            let mut cache = CandidateCache::default();
            let s = search_cutoff(sc, &PsoConfig { seed, ..Default::default() }, &mut cache).unwrap();
            if s.best_cost == best {
                hits += 1;
            }
        }
        ok &= hits == 10;
        lines.push(format!("{}: {hits}/10 seeds hit {best:.2}", f.config.mode.as_str()));
    }
    outcome(ok, lines.join(", "))
}

fn parity_loop(f: &common::Loaded) -> Outcome {
    let sc = &f.scenario;
    let all = exhaustive(sc);
    let global = all.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let cheapest_pass = all
        .iter()
        .filter(|e| e.2 == ParityStatus::Pass)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let Some(cheapest_pass) = cheapest_pass else {
        return outcome(false, "no bin passes parity");
    };
    if global.2 == ParityStatus::Pass {
        return outcome(false, format!("fixture not engineered: global-min bin {} passes", global.0));
    }
    let r = co_optimize_prepared(&f.bundle, sc, &PsoConfig::default()).unwrap();
    let limit = sc.samples_per_day / 2 + 1;
    let accepted = r.final_candidate.summary.bin;
    outcome(
        accepted == cheapest_pass.0 && r.outer_iterations <= limit,
        format!(
            "global-min bin {} is {:?}; accepted bin {accepted}, cheapest passing bin {}; {} outer iterations (limit {limit})",
            global.0, global.2, cheapest_pass.0, r.outer_iterations
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_dercoopt"))
            .args(["run", "--seed", "7", "--config"])
            .arg(common::fixture_config())
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        (status.code(), std::fs::read(out.join("result.json")).unwrap_or_default())
    };
    let (a_code, a) = run("a");
    let (b_code, b) = run("b");
    outcome(
        a_code == Some(0) && b_code == Some(0) && !a.is_empty() && a == b,
        format!("exit codes {a_code:?}/{b_code:?}, {} bytes, identical {}", a.len(), a == b),
    )
}

fn ohio_reproduction(f: &common::Loaded) -> Outcome {
    let sc = &f.scenario;
    let r = co_optimize_prepared(&f.bundle, sc, &PsoConfig { seed: f.config.seed, ..f.config.pso_config.clone() }).unwrap();
    let report = compile_report(&r, sc, &f.bundle).unwrap();
    let c = report.checks;
    let mandates = c.co2_reduction && c.efficiency_increase && c.pv_share && c.renewable_share;
    let top = sc.peak_load_mw * (1.0 + sc.sizing.reserve_fraction);
    let chp_ok = (0.3 * top..=top).contains(&r.chp_capacity_mw);
    let (b1, b2) = (&report.baselines.baseline_i.cost, &report.baselines.baseline_ii.cost);
    let order = b1.capital < report.cost.capital && report.cost.capital < b2.capital && report.cost.total < b2.total;
    outcome(
        mandates && chp_ok && order,
        format!(
            "mandates {mandates}; CHP {:.3} MW in [{:.3}, {:.3}]; capital {:.0} < {:.0} < {:.0}; total {:.0} < {:.0}",
            r.chp_capacity_mw,
            0.3 * top,
            top,
            b1.capital,
            report.cost.capital,
            b2.capital,
            report.cost.total,
            b2.total
        ),
    )
}

fn ure() -> Outcome {
    let load = 26_280.0;
    let a = renewable_utilization(0.474 * load, load).unwrap();
    let b = renewable_utilization(0.0, load).unwrap();
    outcome((a - 0.526).abs() <= 1e-9 && b == 1.0, format!("URe {a} and {b}"))
}

#[test]
fn acceptance_criteria() {
    let ohio = common::ohio(Mode::Full, &[]);
    let cost_only = common::ohio(Mode::CostOnly, &[]);
    let engineered = common::ohio(Mode::Full, &[("DEMAND_CONTEXT__THERMAL_LOAD_MWH_PER_YR", common::ENGINEERED_THERMAL_LOAD)]);
    let history_path = common::fixture_config().with_file_name("load.csv");
    let history = ingest_series(std::fs::File::open(history_path).unwrap(), 0.25).unwrap();
    let base = load_config(&common::fixture_config(), std::iter::empty()).unwrap();

    let ms = Duration::from_millis;
    let s = Duration::from_secs;
    let results = [
        ("capital recovery factor", timed(ms(1), crf)),
        ("transform integrity", timed(s(1), transform_integrity)),
        ("split identity", timed(s(1), || split_identity(&ohio, &history))),
        ("storage sizing oracle", timed(ms(1), bess_oracle)),
        ("LP vs brute force", timed(s(30), || lp_vs_grid(&base.savings_coefficients, &base.demand_context))),
        ("swarm vs enumeration", timed(s(60), || pso_vs_enumeration(&[&ohio, &cost_only]))),
        ("parity loop", timed(s(60), || parity_loop(&engineered))),
        ("end-to-end determinism", timed(s(120), determinism)),
        ("Ohio fixture outcome", timed(s(300), || ohio_reproduction(&ohio))),
        ("index formulas", timed(ms(10), ure)),
    ];
    // straight to the process stdout so the lines survive output capture
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (i, (name, o)) in results.iter().enumerate() {
        writeln!(out, "criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
