use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// Improvement of the best cost smaller than this counts as none.
    pub tolerance: f64,
    /// Iterations without improvement before the swarm restarts (once) or,
    /// after the restart, stops.
    pub stagnation_iterations: usize,
    /// Search interval in Hz; defaults to `[0, Nyquist]`.
    pub bounds_hz: Option<[f64; 2]>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            iterations: 60,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            seed: 0,
            tolerance: 0.0,
            stagnation_iterations: 15,
            bounds_hz: None,
        }
    }
}

impl PsoConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.swarm_size < 2 {
            out.push(format!("swarm_size: {} must be >= 2", self.swarm_size));
        }
        for (k, v) in [("inertia", self.inertia), ("cognitive", self.cognitive), ("social", self.social), ("tolerance", self.tolerance)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{k}: {v} must be >= 0"));
            }
        }
        if let Some([lo, hi]) = self.bounds_hz {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                out.push(format!("bounds_hz: [{lo}, {hi}] must be ordered and non-negative"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoOutcome {
    pub argmin: f64,
    pub min: f64,
    /// Every objective call in order, `(x, f(x))`.
    pub evaluated: Vec<(f64, f64)>,
    pub initial_min: f64,
    pub iterations_run: usize,
    pub restarted: bool,
}

fn reflect(x: f64, v: f64, lo: f64, hi: f64) -> (f64, f64) {
    if x > hi {
        ((2.0 * hi - x).max(lo), -v)
    } else if x < lo {
        ((2.0 * lo - x).min(hi), -v)
    } else {
        (x, v)
    }
}

/// Particle swarm over a closed interval.
///
/// Initial positions are stratified (one particle per equal sub-interval),
/// velocities are clamped to the interval width and particles bounce off the
/// bounds. Ties keep the earlier point, so the result depends only on the
/// seed and the objective values.
pub fn pso_minimize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, config: &PsoConfig) -> PsoOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width = hi - lo;
    let n = config.swarm_size.max(1);
    let mut evaluated = Vec::new();
    let mut call = |x: f64, evaluated: &mut Vec<(f64, f64)>| {
        let y = f(x);
        evaluated.push((x, y));
        y
    };

    let spawn = |rng: &mut ChaCha8Rng| -> (Vec<f64>, Vec<f64>) {
        let xs = (0..n)
            .map(|i| (lo + width * (i as f64 + rng.random::<f64>()) / n as f64).clamp(lo, hi))
            .collect();
        let vs = (0..n).map(|_| width * (rng.random::<f64>() - 0.5) * 0.2).collect();
        (xs, vs)
    };

    let (mut xs, mut vs) = spawn(&mut rng);
    let mut pbest_x = xs.clone();
    let mut pbest_f: Vec<f64> = xs.iter().map(|&x| call(x, &mut evaluated)).collect();
    let (mut gbest_x, mut gbest_f) = (pbest_x[0], pbest_f[0]);
    for i in 1..n {
        if pbest_f[i] < gbest_f {
            gbest_x = pbest_x[i];
            gbest_f = pbest_f[i];
        }
    }
    let initial_min = gbest_f;

    let mut restarted = false;
    let mut stale = 0usize;
    let mut iterations_run = 0;
    for _ in 0..config.iterations {
        iterations_run += 1;
        let before = gbest_f;
        for i in 0..n {
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let v = config.inertia * vs[i]
                + config.cognitive * r1 * (pbest_x[i] - xs[i])
                + config.social * r2 * (gbest_x - xs[i]);
            let v = v.clamp(-width, width);
            let (x, v) = reflect(xs[i] + v, v, lo, hi);
            xs[i] = x;
            vs[i] = v;
            let y = call(x, &mut evaluated);
            if y < pbest_f[i] {
                pbest_f[i] = y;
                pbest_x[i] = x;
            }
            if y < gbest_f {
                gbest_f = y;
                gbest_x = x;
            }
        }
        if before - gbest_f > config.tolerance {
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= config.stagnation_iterations.max(1) {
            if restarted {
                break;
            }
            restarted = true;
            stale = 0;
            let (nx, nv) = spawn(&mut rng);
            xs = nx;
            vs = nv;
            for i in 0..n {
                pbest_x[i] = xs[i];
                pbest_f[i] = call(xs[i], &mut evaluated);
                if pbest_f[i] < gbest_f {
                    gbest_f = pbest_f[i];
                    gbest_x = xs[i];
                }
            }
        }
    }

    PsoOutcome {
        argmin: gbest_x,
        min: gbest_f,
        evaluated,
        initial_min,
        iterations_run,
        restarted,
    }
}
