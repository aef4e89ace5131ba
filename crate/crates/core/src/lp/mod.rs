//! Bounded-variable linear programs and the solvers behind them.
//!
//! A [`LinearProgram`] minimizes `c'x` over per-variable bounds and sparse
//! `<=` / `=` rows. Two self-contained engines implement [`LpSolver`]:
//!
//! * [`Simplex`]: bounded revised primal simplex with a composite phase 1,
//!   Dantzig pricing and a Bland's-rule fallback when progress stalls.
//!   Accepts a starting basis, which makes repeated solves of nearly
//!   identical programs cheap.
//! * [`InteriorPoint`]: Mehrotra predictor-corrector on the normal
//!   equations, factored with an envelope Cholesky. Programs whose rows are
//!   emitted in time order (as the dispatch builder does) have a narrow
//!   envelope, so year-long horizons factor in linear time.

mod dense_lu;
mod export;
mod ipm;
mod profile_cholesky;
mod simplex;

use serde::{Deserialize, Serialize};

pub use export::write_lp_format;
pub use ipm::InteriorPoint;
pub use simplex::Simplex;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    LessEq,
    Equal,
}

/// One sparse constraint row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize c'x  s.t.  rows, lower <= x <= upper`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    rows: Vec<Row>,
    names: Vec<String>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index. Bounds may be infinite.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.add_named_var(String::new(), lower, upper, cost)
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.names.push(name.into());
        self.lower.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, Relation::LessEq, rhs)
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, Relation::Equal, rhs)
    }

    /// `coeffs . x >= rhs`, stored negated as a `<=` row.
    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        let neg = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
        self.add_row(neg, Relation::LessEq, -rhs)
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn set_objective_coeff(&mut self, j: usize, cost: f64) {
        self.objective[j] = cost;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_rhs(&mut self, row: usize, rhs: f64) {
        self.rows[row].rhs = rhs;
    }

    /// Checks structural invariants: ordered bounds, finite coefficients,
    /// indices in range.
    pub fn check(&self) -> Result<()> {
        let n = self.num_vars();
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::Invalid(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::Invalid(format!("variable {j} has an empty infinite bound")));
            }
            if !self.objective[j].is_finite() {
                return Err(Error::Invalid(format!("objective coefficient {j} is not finite")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Invalid(format!("row {i} rhs is not finite")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(Error::Invalid(format!("row {i} references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(Error::Invalid(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let r = match row.relation {
                Relation::LessEq => (lhs - row.rhs).max(0.0),
                Relation::Equal => (lhs - row.rhs).abs(),
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Column-major copy of the constraint matrix: per variable, the
    /// `(row, coefficient)` entries with duplicates summed.
    pub(crate) fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                match cols[j].last_mut() {
                    Some((r, v)) if *r == i => *v += a,
                    _ => cols[j].push((i, a)),
                }
            }
        }
        cols
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The engine could not certify any of the above (iteration limit,
    /// singular factorization, residual above tolerance).
    NumericalFailure,
}

/// Which engine produced a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    Simplex,
    InteriorPoint,
}

/// A simplex basis: the basic variable of each row position and, for every
/// structural and logical variable, whether a nonbasic variable sits at its
/// upper bound. Logical `i` has index `num_vars + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub at_upper: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_residual: f64,
    pub iterations: usize,
    pub engine: Engine,
    /// Final basis, when the engine maintains one.
    pub basis: Option<Basis>,
}

impl LpSolution {
    pub(crate) fn failed(status: LpStatus, n: usize, iterations: usize, engine: Engine) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            max_residual: f64::NAN,
            iterations,
            engine,
            basis: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Simplex for small programs, interior point otherwise, with the
    /// simplex as a fallback.
    #[default]
    Auto,
    Simplex,
    Interior,
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default = "default_tol")]
    pub feas_tol: f64,
    #[serde(default = "default_tol")]
    pub opt_tol: f64,
    #[serde(default)]
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            opt_tol: 1e-6,
            method: Method::Auto,
        }
    }
}

/// Largest program `Method::Auto` hands to the dense simplex first.
const AUTO_SIMPLEX_ROWS: usize = 300;
/// Largest program the dense simplex is tried on as a fallback.
const FALLBACK_SIMPLEX_ROWS: usize = 1500;

/// A pluggable LP engine.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram, hint: Option<&Basis>) -> LpSolution;
}

/// Solves with the engine chosen by `options.method`.
pub fn solve(lp: &LinearProgram, options: &SolverOptions) -> LpSolution {
    solve_with_hint(lp, options, None)
}

/// Like [`solve`], passing a starting basis to the simplex when it runs.
pub fn solve_with_hint(lp: &LinearProgram, options: &SolverOptions, hint: Option<&Basis>) -> LpSolution {
    if let Err(e) = lp.check() {
        log::warn!("rejecting malformed LP: {e}");
        return LpSolution::failed(LpStatus::NumericalFailure, lp.num_vars(), 0, Engine::Simplex);
    }
    let simplex = Simplex::new(*options);
    let interior = InteriorPoint::new(*options);
    match options.method {
        Method::Simplex => simplex.solve(lp, hint),
        Method::Interior => interior.solve(lp, hint),
        Method::Auto => {
            if lp.num_rows() <= AUTO_SIMPLEX_ROWS {
                let sol = simplex.solve(lp, hint);
                if sol.status != LpStatus::NumericalFailure {
                    return sol;
                }
                return interior.solve(lp, None);
            }
            let sol = interior.solve(lp, None);
            if sol.status == LpStatus::NumericalFailure && lp.num_rows() <= FALLBACK_SIMPLEX_ROWS {
                return simplex.solve(lp, hint);
            }
            sol
        }
    }
}
