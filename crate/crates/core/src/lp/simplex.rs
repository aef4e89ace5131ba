//! Bounded-variable revised primal simplex.

use super::dense_lu::DenseLu;
use super::{Basis, Engine, LinearProgram, LpSolution, LpSolver, LpStatus, Relation, SolverOptions};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 50;
const NONBASIC: usize = usize::MAX;

/// Revised primal simplex with product-form updates on a dense LU.
#[derive(Clone, Debug)]
pub struct Simplex {
    options: SolverOptions,
    max_iterations: Option<usize>,
}

impl Simplex {
    pub fn new(options: SolverOptions) -> Self {
        Self {
            options,
            max_iterations: None,
        }
    }

    pub fn with_max_iterations(mut self, limit: usize) -> Self {
        self.max_iterations = Some(limit);
        self
    }
}

impl LpSolver for Simplex {
    fn solve(&self, lp: &LinearProgram, hint: Option<&Basis>) -> LpSolution {
        let n = lp.num_vars();
        let limit = self
            .max_iterations
            .unwrap_or(50 * (n + lp.num_rows()) + 1000);
        let mut state = State::new(lp);
        if let Some(b) = hint.filter(|b| state.hint_usable(b)) {
            state.apply_hint(b);
        }
        let status = state.run(limit);
        let iterations = state.iterations;
        if status != LpStatus::Optimal {
            return LpSolution::failed(status, n, iterations, Engine::Simplex);
        }
        let x = state.x[..n].to_vec();
        let residual = lp.max_residual(&x);
        if residual > self.options.feas_tol {
            log::debug!("simplex residual {residual:e} above tolerance");
            return LpSolution::failed(LpStatus::NumericalFailure, n, iterations, Engine::Simplex);
        }
        LpSolution {
            status,
            objective: lp.objective_value(&x),
            x,
            max_residual: residual,
            iterations,
            engine: Engine::Simplex,
            basis: Some(state.basis()),
        }
    }
}

struct Eta {
    r: usize,
    pivot_inv: f64,
    /// `(i, -alpha_i / alpha_r)` for `i != r`.
    col: Vec<(usize, f64)>,
}

struct State {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    pos: Vec<usize>,
    lu: Option<DenseLu>,
    etas: Vec<Eta>,
    iterations: usize,
}

enum Step {
    Optimal,
    Infeasible,
    Unbounded,
    Failure,
    Moved { improved: bool },
}

impl State {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols = lp.columns();
        let mut lo = lp.lower().to_vec();
        let mut hi = lp.upper().to_vec();
        let mut cost = lp.objective().to_vec();
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in lp.rows().iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            lo.push(0.0);
            hi.push(match row.relation {
                Relation::LessEq => f64::INFINITY,
                Relation::Equal => 0.0,
            });
            cost.push(0.0);
            rhs.push(row.rhs);
        }
        let mut x = vec![0.0; n + m];
        for j in 0..n {
            x[j] = resting_value(lo[j], hi[j], false);
        }
        let basic: Vec<usize> = (n..n + m).collect();
        let mut pos = vec![NONBASIC; n + m];
        for (r, &v) in basic.iter().enumerate() {
            pos[v] = r;
        }
        Self {
            m,
            n,
            cols,
            lo,
            hi,
            cost,
            rhs,
            x,
            basic,
            pos,
            lu: None,
            etas: Vec::new(),
            iterations: 0,
        }
    }

    fn hint_usable(&self, b: &Basis) -> bool {
        let total = self.n + self.m;
        if b.basic.len() != self.m || b.at_upper.len() != total {
            return false;
        }
        let mut seen = vec![false; total];
        for &v in &b.basic {
            if v >= total || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }

    fn apply_hint(&mut self, b: &Basis) {
        let total = self.n + self.m;
        self.basic = b.basic.clone();
        self.pos = vec![NONBASIC; total];
        for (r, &v) in self.basic.iter().enumerate() {
            self.pos[v] = r;
        }
        for j in 0..total {
            if self.pos[j] == NONBASIC {
                self.x[j] = resting_value(self.lo[j], self.hi[j], b.at_upper[j]);
            }
        }
    }

    fn basis(&self) -> Basis {
        let at_upper = (0..self.n + self.m)
            .map(|j| self.pos[j] == NONBASIC && self.hi[j].is_finite() && self.x[j] >= self.hi[j] && self.hi[j] > self.lo[j])
            .collect();
        Basis {
            basic: self.basic.clone(),
            at_upper,
        }
    }

    /// Fresh LU of the current basis. Dependent columns are swapped for
    /// logicals of rows left without a pivot.
    fn refactor(&mut self) -> bool {
        for _ in 0..=self.m {
            let refs: Vec<&[(usize, f64)]> = self.basic.iter().map(|&v| self.cols[v].as_slice()).collect();
            match DenseLu::factor(self.m, &refs) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.etas.clear();
                    self.recompute_basic_values();
                    return true;
                }
                Err(s) => {
                    let Some(row) = s.free_rows.iter().copied().find(|&r| self.pos[self.n + r] == NONBASIC) else {
                        return false;
                    };
                    let out = self.basic[s.position];
                    let logical = self.n + row;
                    self.pos[out] = NONBASIC;
                    self.x[out] = resting_value(self.lo[out], self.hi[out], false);
                    self.basic[s.position] = logical;
                    self.pos[logical] = s.position;
                }
            }
        }
        false
    }

    fn recompute_basic_values(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n + self.m {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    r[i] -= a * self.x[j];
                }
            }
        }
        self.ftran(&mut r);
        for (k, &v) in self.basic.iter().enumerate() {
            self.x[v] = r[k];
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        self.lu.as_ref().expect("factorized").solve(v);
        for eta in &self.etas {
            let xr = v[eta.r];
            if xr == 0.0 {
                continue;
            }
            v[eta.r] = xr * eta.pivot_inv;
            for &(i, e) in &eta.col {
                v[i] += e * xr;
            }
        }
    }

    fn btran(&self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.r] * eta.pivot_inv;
            for &(i, e) in &eta.col {
                s += e * c[i];
            }
            c[eta.r] = s;
        }
        self.lu.as_ref().expect("factorized").solve_transpose(c);
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.basic[k];
        let x = self.x[v];
        if x < self.lo[v] - PRIMAL_TOL {
            self.lo[v] - x
        } else if x > self.hi[v] + PRIMAL_TOL {
            x - self.hi[v]
        } else {
            0.0
        }
    }

    fn total_infeasibility(&self) -> f64 {
        (0..self.m).map(|k| self.infeasibility(k)).sum()
    }

    fn phase_objective(&self, phase1: bool) -> f64 {
        if phase1 {
            self.total_infeasibility()
        } else {
            (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
        }
    }

    fn run(&mut self, limit: usize) -> LpStatus {
        if !self.refactor() {
            return LpStatus::NumericalFailure;
        }
        let mut bland = false;
        let mut stalled = 0usize;
        let mut verifications = 0usize;
        loop {
            if self.iterations >= limit {
                return LpStatus::NumericalFailure;
            }
            if self.etas.len() >= REFACTOR_EVERY && !self.refactor() {
                return LpStatus::NumericalFailure;
            }
            match self.iterate(bland) {
                Step::Moved { improved } => {
                    self.iterations += 1;
                    if improved {
                        stalled = 0;
                        bland = false;
                    } else {
                        stalled += 1;
                        if stalled >= STALL_LIMIT {
                            bland = true;
                        }
                    }
                }
                Step::Optimal => {
                    // Confirm on a fresh factorization before accepting.
                    if self.etas.is_empty() || verifications >= 3 {
                        return LpStatus::Optimal;
                    }
                    verifications += 1;
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                }
                Step::Infeasible => {
                    if self.etas.is_empty() || verifications >= 3 {
                        return LpStatus::Infeasible;
                    }
                    verifications += 1;
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                }
                Step::Unbounded => return LpStatus::Unbounded,
                Step::Failure => return LpStatus::NumericalFailure,
            }
        }
    }

    fn iterate(&mut self, bland: bool) -> Step {
        let m = self.m;
        let phase1 = (0..m).any(|k| self.infeasibility(k) > 0.0);
        let before = self.phase_objective(phase1);

        let mut y: Vec<f64> = (0..m)
            .map(|k| {
                let v = self.basic[k];
                if phase1 {
                    let x = self.x[v];
                    if x < self.lo[v] - PRIMAL_TOL {
                        -1.0
                    } else if x > self.hi[v] + PRIMAL_TOL {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.cost[v]
                }
            })
            .collect();
        self.btran(&mut y);

        // Pricing.
        let mut entering: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.hi[j] <= self.lo[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let d = c - self.cols[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>();
            let dir = if d < -DUAL_TOL && self.x[j] < self.hi[j] {
                1.0
            } else if d > DUAL_TOL && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                entering = Some((j, dir));
                break;
            }
            if d.abs() > best {
                best = d.abs();
                entering = Some((j, dir));
            }
        }
        let Some((q, dir)) = entering else {
            return if phase1 { Step::Infeasible } else { Step::Optimal };
        };

        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[q] {
            alpha[i] += a;
        }
        self.ftran(&mut alpha);

        // Ratio test. Basic k moves at rate -dir * alpha_k.
        let own_range = self.hi[q] - self.lo[q];
        let limit_of = |k: usize, harris: f64| -> Option<(f64, bool)> {
            let rate = -dir * alpha[k];
            if rate.abs() < PIVOT_TOL {
                return None;
            }
            let v = self.basic[k];
            let x = self.x[v];
            let (lo, hi) = (self.lo[v], self.hi[v]);
            if x < lo - PRIMAL_TOL {
                // Infeasible below: only a rise is limited, at the lower bound.
                (rate > 0.0).then(|| (((lo - x) + harris) / rate, false))
            } else if x > hi + PRIMAL_TOL {
                (rate < 0.0).then(|| (((x - hi) + harris) / -rate, true))
            } else if rate < 0.0 {
                lo.is_finite().then(|| ((x - lo).max(0.0) + harris) / -rate).map(|t| (t, false))
            } else {
                hi.is_finite().then(|| ((hi - x).max(0.0) + harris) / rate).map(|t| (t, true))
            }
        };

        let mut leave: Option<(usize, bool)> = None;
        let mut theta;
        if bland {
            theta = f64::INFINITY;
            let mut best_var = usize::MAX;
            for k in 0..m {
                if let Some((t, up)) = limit_of(k, 0.0) {
                    let v = self.basic[k];
                    if t < theta - 1e-12 || (t <= theta + 1e-12 && v < best_var) {
                        theta = t.min(theta);
                        best_var = v;
                        leave = Some((k, up));
                    }
                }
            }
        } else {
            let mut theta_max = f64::INFINITY;
            for k in 0..m {
                if let Some((t, _)) = limit_of(k, PRIMAL_TOL) {
                    theta_max = theta_max.min(t);
                }
            }
            theta = f64::INFINITY;
            if theta_max.is_finite() {
                let mut best_piv = 0.0;
                for k in 0..m {
                    if let Some((t, up)) = limit_of(k, 0.0) {
                        if t <= theta_max && alpha[k].abs() > best_piv {
                            best_piv = alpha[k].abs();
                            theta = t;
                            leave = Some((k, up));
                        }
                    }
                }
            }
        }

        if own_range.is_finite() && own_range <= theta {
            // Bound flip.
            let step = dir * own_range;
            self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            for k in 0..m {
                let v = self.basic[k];
                self.x[v] -= alpha[k] * step;
            }
            let after = self.phase_objective(phase1);
            return Step::Moved {
                improved: after < before - 1e-12 * (1.0 + before.abs()),
            };
        }
        let Some((r, to_upper)) = leave else {
            return if phase1 { Step::Failure } else { Step::Unbounded };
        };
        let theta = theta.max(0.0);
        let step = dir * theta;
        self.x[q] += step;
        for k in 0..m {
            let v = self.basic[k];
            self.x[v] -= alpha[k] * step;
        }
        let p = self.basic[r];
        self.x[p] = if to_upper { self.hi[p] } else { self.lo[p] };

        let ar = alpha[r];
        if ar.abs() < PIVOT_TOL {
            return Step::Failure;
        }
        let col = (0..m)
            .filter(|&i| i != r && alpha[i] != 0.0)
            .map(|i| (i, -alpha[i] / ar))
            .collect();
        self.etas.push(Eta {
            r,
            pivot_inv: 1.0 / ar,
            col,
        });
        self.basic[r] = q;
        self.pos[q] = r;
        self.pos[p] = NONBASIC;

        let after = self.phase_objective(phase1);
        Step::Moved {
            improved: after < before - 1e-12 * (1.0 + before.abs()),
        }
    }
}

/// Where a nonbasic variable rests.
fn resting_value(lo: f64, hi: f64, prefer_upper: bool) -> f64 {
    if prefer_upper && hi.is_finite() {
        hi
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}
