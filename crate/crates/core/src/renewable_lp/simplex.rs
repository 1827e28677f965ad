//! Dense two-phase simplex for small LPs in the form
//! `max c·x  s.t.  a_i·x (<=|>=|=) b_i,  x >= 0`.
//!
//! Bland's rule on both the entering and leaving choice, so it cannot cycle.
//! Rows are scaled to unit infinity norm internally; multipliers are reported
//! for the rows as given.

use serde::{Deserialize, Serialize};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub label: String,
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(label: impl Into<String>, coefficients: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            label: label.into(),
            coefficients,
            relation,
            rhs,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x)
    }

    /// Signed slack: positive when satisfied with room to spare; for
    /// equalities, minus the absolute violation.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => self.rhs - lhs,
            Relation::Ge => lhs - self.rhs,
            Relation::Eq => -(lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub variables: Vec<String>,
    /// Maximized.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One per constraint; `c = Σ μ_i a_i − ν` at the optimum, with μ ≥ 0 on
    /// `<=` rows, μ ≤ 0 on `>=` rows and free on equalities.
    pub row_multipliers: Vec<f64>,
    /// One per variable, for `x >= 0`; non-negative.
    pub bound_multipliers: Vec<f64>,
    pub pivots: usize,
}

/// Row weights `w` proving that no `x >= 0` satisfies the system: `wᵀA >= 0`,
/// `wᵀb < 0`, with `w >= 0` on `<=` rows and `w <= 0` on `>=` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub row_weights: Vec<f64>,
}

impl FarkasCertificate {
    /// Check the certificate against `lp`, allowing `tol` on each inequality
    /// after scaling by the weight magnitudes.
    pub fn verify(&self, lp: &LinearProgram, tol: f64) -> bool {
        let n = lp.variables.len();
        let scale = self.row_weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if scale == 0.0 || self.row_weights.len() != lp.constraints.len() {
            return false;
        }
        let w: Vec<f64> = self.row_weights.iter().map(|v| v / scale).collect();
        let signs_ok = lp.constraints.iter().zip(&w).all(|(c, &wi)| match c.relation {
            Relation::Le => wi >= -tol,
            Relation::Ge => wi <= tol,
            Relation::Eq => true,
        });
        let combo_ok = (0..n).all(|j| {
            lp.constraints.iter().zip(&w).map(|(c, wi)| wi * c.coefficients[j]).sum::<f64>() >= -tol
        });
        let rhs: f64 = lp.constraints.iter().zip(&w).map(|(c, wi)| wi * c.rhs).sum();
        signs_ok && combo_ok && rhs < -tol
    }
}

/// Feasible point and direction along which the objective grows without
/// bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnboundedRay {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize, Deserialize)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible(FarkasCertificate),
    #[error("linear program is unbounded")]
    Unbounded(UnboundedRay),
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("pivot limit reached")]
    PivotLimit,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinearProgram {
    pub fn new(variables: Vec<String>, objective: Vec<f64>) -> Self {
        Self {
            variables,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, constraint: Constraint) {
        self.constraints.push(constraint);
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        if n == 0 {
            return Err(LpError::Malformed("no variables".into()));
        }
        if self.objective.len() != n || self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("objective length or values".into()));
        }
        for c in &self.constraints {
            if c.coefficients.len() != n
                || c.coefficients.iter().any(|v| !v.is_finite())
                || !c.rhs.is_finite()
            {
                return Err(LpError::Malformed(format!("constraint {}", c.label)));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.check()?;
        Tableau::build(self).run(self)
    }
}

/// Column layout: structural `0..n`, one slack/surplus per inequality row,
/// one artificial per row, then the right-hand side.
struct Tableau {
    n: usize,
    m: usize,
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Column of the initial identity for each row (slack or artificial).
    unit_col: Vec<usize>,
    artificial_start: usize,
    /// `sign_i · scale_i`: row i of the tableau is original row i times this.
    row_factor: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.artificial_start + self.m
    }

    fn build(lp: &LinearProgram) -> Self {
        let n = lp.variables.len();
        let m = lp.constraints.len();
        let slack_count = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let artificial_start = n + slack_count;
        let width = artificial_start + m;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        let mut row_factor = Vec::with_capacity(m);
        let mut next_slack = n;
        for (i, c) in lp.constraints.iter().enumerate() {
            let scale = c.coefficients.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            let f = sign * scale;
            let mut row = vec![0.0; width + 1];
            for (j, &a) in c.coefficients.iter().enumerate() {
                row[j] = a * f;
            }
            row[width] = c.rhs * f;
            let slack_sign = match c.relation {
                Relation::Le => Some(1.0),
                Relation::Ge => Some(-1.0),
                Relation::Eq => None,
            };
            let mut unit = artificial_start + i;
            if let Some(s) = slack_sign {
                // slack coefficient stays ±1 after flipping the row sign
                let s = s * sign;
                row[next_slack] = s;
                if s > 0.0 {
                    unit = next_slack;
                }
                next_slack += 1;
            }
            row[artificial_start + i] = 1.0;
            basis.push(unit);
            unit_col.push(unit);
            rows.push(row);
            row_factor.push(f);
        }
        Self {
            n,
            m,
            rows,
            basis,
            unit_col,
            artificial_start,
            row_factor,
            pivots: 0,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.width();
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..=width {
                    row[j] -= f * pivot_row[j];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs `c_j − c_B B⁻¹ A_j` for a cost vector over all columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.width();
        let mut d: Vec<f64> = cost[..width].to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..width {
                    d[j] -= cb * row[j];
                }
            }
        }
        d
    }

    /// `c_B B⁻¹` read off the columns that formed the initial identity.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|k| {
                let col = self.unit_col[k];
                self.rows.iter().enumerate().map(|(i, row)| cost[self.basis[i]] * row[col]).sum()
            })
            .collect()
    }

    /// Maximize `cost` over the current basis. Columns at or beyond
    /// `enter_limit` never enter. Returns the entering column on unboundedness.
    fn optimize(&mut self, cost: &[f64], enter_limit: usize) -> Result<(), Result<usize, LpError>> {
        let width = self.width();
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(Err(LpError::PivotLimit));
            }
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..enter_limit).find(|&j| d[j] > PIVOT_EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_EPS {
                    let ratio = row[width] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Err(Ok(enter)),
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        let width = self.width();
        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rows[i][width].max(0.0);
            }
        }
        x
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let width = self.width();
        let n = self.n;

        // phase 1: maximize minus the sum of artificials in the basis
        let mut phase1 = vec![0.0; width];
        for i in 0..self.m {
            if self.basis[i] >= self.artificial_start {
                phase1[self.basis[i]] = -1.0;
            }
        }
        match self.optimize(&phase1, self.artificial_start) {
            Ok(()) => {}
            Err(Err(e)) => return Err(e),
            Err(Ok(_)) => unreachable!("phase 1 is bounded"),
        }
        let infeasibility: f64 = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= self.artificial_start)
            .map(|(i, _)| self.rows[i][width])
            .sum();
        if infeasibility > FEAS_EPS {
            let y = self.duals(&phase1);
            return Err(LpError::Infeasible(FarkasCertificate {
                row_weights: y.iter().zip(&self.row_factor).map(|(yi, f)| yi * f).collect(),
            }));
        }
        // drive zero-level artificials out where a structural or slack column allows
        for i in 0..self.m {
            if self.basis[i] >= self.artificial_start {
                if let Some(j) = (0..self.artificial_start).find(|&j| self.rows[i][j].abs() > 1e-9) {
                    self.pivot(i, j);
                }
            }
        }

        // phase 2
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&lp.objective);
        if let Err(outcome) = self.optimize(&cost, self.artificial_start) {
            let enter = outcome?;
            let mut direction = vec![0.0; n];
            if enter < n {
                direction[enter] = 1.0;
            }
            for (i, &b) in self.basis.iter().enumerate() {
                if b < n {
                    direction[b] = -self.rows[i][enter];
                }
            }
            return Err(LpError::Unbounded(UnboundedRay {
                point: self.primal(),
                direction,
            }));
        }

        let x = self.primal();
        let y = self.duals(&cost);
        let row_multipliers: Vec<f64> = y.iter().zip(&self.row_factor).map(|(yi, f)| yi * f).collect();
        let bound_multipliers = (0..n)
            .map(|j| {
                let s: f64 = lp
                    .constraints
                    .iter()
                    .zip(&row_multipliers)
                    .map(|(c, mu)| mu * c.coefficients[j])
                    .sum();
                (s - lp.objective[j]).max(0.0)
            })
            .collect();
        Ok(LpSolution {
            objective: lp.objective_at(&x),
            x,
            row_multipliers,
            bound_multipliers,
            pivots: self.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vars(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn single_cap() {
        let mut lp = LinearProgram::new(vars(1), vec![2.0]);
        lp.push(Constraint::new("cap", vec![1.0], Relation::Le, 0.5));
        let s = lp.solve().unwrap();
        assert_eq!(s.x, vec![0.5]);
        assert_eq!(s.objective, 1.0);
        assert_eq!(s.row_multipliers, vec![2.0]);
        assert_eq!(s.bound_multipliers, vec![0.0]);
    }

    #[test]
    fn textbook_two_variable() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(vars(2), vec![3.0, 5.0]);
        lp.push(Constraint::new("a", vec![1.0, 0.0], Relation::Le, 4.0));
        lp.push(Constraint::new("b", vec![0.0, 2.0], Relation::Le, 12.0));
        lp.push(Constraint::new("c", vec![3.0, 2.0], Relation::Le, 18.0));
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 6.0, epsilon = 1e-12);
        assert_relative_eq!(s.objective, 36.0, epsilon = 1e-12);
        // shadow prices 0, 3/2, 1
        assert_relative_eq!(s.row_multipliers[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.row_multipliers[1], 1.5, epsilon = 1e-12);
        assert_relative_eq!(s.row_multipliers[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ge_and_eq_rows() {
        // max -x - y, x + y >= 2, x - y = 1 -> (1.5, 0.5)
        let mut lp = LinearProgram::new(vars(2), vec![-1.0, -1.0]);
        lp.push(Constraint::new("ge", vec![1.0, 1.0], Relation::Ge, 2.0));
        lp.push(Constraint::new("eq", vec![1.0, -1.0], Relation::Eq, 1.0));
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.x[0], 1.5, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 0.5, epsilon = 1e-12);
        assert!(s.row_multipliers[0] <= 0.0);
    }

    #[test]
    fn negative_rhs_rows() {
        // -x <= -1 means x >= 1
        let mut lp = LinearProgram::new(vars(1), vec![-1.0]);
        lp.push(Constraint::new("neg", vec![-1.0], Relation::Le, -1.0));
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.row_multipliers[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_with_certificate() {
        let mut lp = LinearProgram::new(vars(2), vec![1.0, 1.0]);
        lp.push(Constraint::new("lo", vec![1.0, 1.0], Relation::Ge, 3.0));
        lp.push(Constraint::new("hi", vec![1.0, 1.0], Relation::Le, 2.0));
        match lp.solve() {
            Err(LpError::Infeasible(cert)) => assert!(cert.verify(&lp, 1e-9)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_with_ray() {
        let mut lp = LinearProgram::new(vars(2), vec![1.0, 0.0]);
        lp.push(Constraint::new("a", vec![1.0, -1.0], Relation::Le, 1.0));
        match lp.solve() {
            Err(LpError::Unbounded(ray)) => {
                assert!(lp.objective_at(&ray.direction) > 0.0);
                assert!(ray.direction.iter().all(|&d| d >= 0.0));
                assert!(lp.constraints[0].lhs(&ray.direction) <= 1e-12);
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the largest-coefficient rule.
        let mut lp = LinearProgram::new(vars(4), vec![0.75, -150.0, 0.02, -6.0]);
        lp.push(Constraint::new("r1", vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0));
        lp.push(Constraint::new("r2", vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0));
        lp.push(Constraint::new("r3", vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0));
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.objective, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vars(2), vec![1.0, 2.0]);
        lp.push(Constraint::new("e1", vec![1.0, 1.0], Relation::Eq, 1.0));
        lp.push(Constraint::new("e2", vec![2.0, 2.0], Relation::Eq, 2.0));
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.objective, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn malformed_inputs() {
        let mut lp = LinearProgram::new(vars(2), vec![1.0, 1.0]);
        lp.push(Constraint::new("short", vec![1.0], Relation::Le, 1.0));
        assert!(matches!(lp.solve(), Err(LpError::Malformed(_))));
    }
}
