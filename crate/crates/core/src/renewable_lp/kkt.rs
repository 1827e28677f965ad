use serde::{Deserialize, Serialize};

use super::simplex::{LinearProgram, Relation};

pub const KKT_TOLERANCE: f64 = 1e-7;

/// KKT residuals of a candidate primal/dual pair, all on the scaled problem:
/// each row divided by its largest coefficient, the objective by its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub complementary_slackness: f64,
    pub passes: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
            .max(self.complementary_slackness)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Check `x` with row multipliers `mu` and bound multipliers `nu` against the
/// optimality conditions of `lp` (maximization, `x >= 0`). Sign convention as
/// in [`super::simplex::LpSolution`].
pub fn kkt_verify(lp: &LinearProgram, x: &[f64], mu: &[f64], nu: &[f64]) -> KktReport {
    let n = lp.variables.len();
    let obj_scale = match inf_norm(&lp.objective) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let row_scale: Vec<f64> = lp
        .constraints
        .iter()
        .map(|c| match inf_norm(&c.coefficients) {
            s if s > 0.0 => s,
            _ => 1.0,
        })
        .collect();

    let mut stationarity = 0.0f64;
    for j in 0..n {
        let g: f64 = lp.constraints.iter().zip(mu).map(|(c, m)| m * c.coefficients[j]).sum();
        stationarity = stationarity.max((lp.objective[j] - g + nu[j]).abs() / obj_scale);
    }

    let mut primal = x.iter().fold(0.0f64, |m, &v| m.max(-v));
    let mut dual = nu.iter().fold(0.0f64, |m, &v| m.max(-v / obj_scale));
    let mut slackness = x.iter().zip(nu).fold(0.0f64, |m, (xi, ni)| m.max((xi * ni / obj_scale).abs()));
    for ((c, &m), &s) in lp.constraints.iter().zip(mu).zip(&row_scale) {
        let gap = c.rhs - c.lhs(x);
        let violation = match c.relation {
            Relation::Le => -gap,
            Relation::Ge => gap,
            Relation::Eq => gap.abs(),
        };
        primal = primal.max(violation / s);
        let wrong_sign = match c.relation {
            Relation::Le => -m,
            Relation::Ge => m,
            Relation::Eq => 0.0,
        };
        dual = dual.max(wrong_sign * s / obj_scale);
        slackness = slackness.max((m * gap).abs() / obj_scale);
    }

    let mut report = KktReport {
        stationarity,
        primal_feasibility: primal.max(0.0),
        dual_feasibility: dual.max(0.0),
        complementary_slackness: slackness,
        passes: false,
    };
    report.passes = report.max_residual() <= KKT_TOLERANCE;
    report
}
