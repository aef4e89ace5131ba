//! Mehrotra predictor-corrector interior point method.

use super::profile_cholesky::ProfileMatrix;
use super::{Basis, Engine, LinearProgram, LpSolution, LpSolver, LpStatus, Relation, SolverOptions};

const MAX_ITER: usize = 200;
const STEP_FRACTION: f64 = 0.9995;
const CONVERGENCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct InteriorPoint {
    options: SolverOptions,
}

impl InteriorPoint {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for InteriorPoint {
    fn solve(&self, lp: &LinearProgram, _hint: Option<&Basis>) -> LpSolution {
        let n = lp.num_vars();
        let std = match StandardForm::build(lp, self.options.feas_tol) {
            Ok(s) => s,
            Err(status) => return LpSolution::failed(status, n, 0, Engine::InteriorPoint),
        };
        let (status, xs, iterations) = std.solve(self.options.opt_tol);
        if status != LpStatus::Optimal {
            return LpSolution::failed(status, n, iterations, Engine::InteriorPoint);
        }
        let x = std.recover(&xs, n);
        let residual = lp.max_residual(&x);
        if residual > self.options.feas_tol {
            log::debug!("interior point residual {residual:e} above tolerance");
            return LpSolution::failed(LpStatus::NumericalFailure, n, iterations, Engine::InteriorPoint);
        }
        LpSolution {
            status,
            objective: lp.objective_value(&x),
            x,
            max_residual: residual,
            iterations,
            engine: Engine::InteriorPoint,
            basis: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Recover {
    Fixed(f64),
    Shift { col: usize, lo: f64 },
    Negated { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

/// `min c'x  s.t.  Ax = b, 0 <= x, x_j <= u_j` for finite `u_j`.
struct StandardForm {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    c: Vec<f64>,
    b: Vec<f64>,
    u: Vec<f64>,
    map: Vec<Recover>,
}

impl StandardForm {
    fn build(lp: &LinearProgram, feas_tol: f64) -> Result<Self, LpStatus> {
        let lp_cols = lp.columns();
        let m0 = lp.num_rows();
        let mut b: Vec<f64> = lp.rows().iter().map(|r| r.rhs).collect();
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut c = Vec::new();
        let mut u = Vec::new();
        let mut map = Vec::with_capacity(lp.num_vars());
        for (j, col) in lp_cols.iter().enumerate() {
            let (lo, hi, cj) = (lp.lower()[j], lp.upper()[j], lp.objective()[j]);
            if lo.is_finite() && hi.is_finite() && hi - lo <= 1e-13 * (1.0 + lo.abs()) {
                for &(i, a) in col {
                    b[i] -= a * lo;
                }
                map.push(Recover::Fixed(lo));
            } else if lo.is_finite() {
                for &(i, a) in col {
                    b[i] -= a * lo;
                }
                map.push(Recover::Shift { col: cols.len(), lo });
                cols.push(col.clone());
                c.push(cj);
                u.push(hi - lo);
            } else if hi.is_finite() {
                for &(i, a) in col {
                    b[i] -= a * hi;
                }
                map.push(Recover::Negated { col: cols.len(), hi });
                cols.push(col.iter().map(|&(i, a)| (i, -a)).collect());
                c.push(-cj);
                u.push(f64::INFINITY);
            } else {
                map.push(Recover::Split {
                    pos: cols.len(),
                    neg: cols.len() + 1,
                });
                cols.push(col.clone());
                cols.push(col.iter().map(|&(i, a)| (i, -a)).collect());
                c.extend([cj, -cj]);
                u.extend([f64::INFINITY, f64::INFINITY]);
            }
        }
        for (i, row) in lp.rows().iter().enumerate() {
            if row.relation == Relation::LessEq {
                cols.push(vec![(i, 1.0)]);
                c.push(0.0);
                u.push(f64::INFINITY);
            }
        }

        // Drop rows without entries, after checking them.
        let mut used = vec![false; m0];
        for col in &cols {
            for &(i, a) in col {
                if a != 0.0 {
                    used[i] = true;
                }
            }
        }
        let mut new_index = vec![usize::MAX; m0];
        let mut m = 0;
        for i in 0..m0 {
            if used[i] {
                new_index[i] = m;
                m += 1;
            } else if b[i].abs() > feas_tol {
                return Err(LpStatus::Infeasible);
            }
        }
        let mut scale = vec![0.0f64; m0];
        for col in &cols {
            for &(i, a) in col {
                scale[i] = scale[i].max(a.abs());
            }
        }
        let mut bb = vec![0.0; m];
        for i in 0..m0 {
            if used[i] {
                bb[new_index[i]] = b[i] / scale[i];
            }
        }
        for col in &mut cols {
            col.retain(|&(_, a)| a != 0.0);
            for e in col.iter_mut() {
                e.1 /= scale[e.0];
                e.0 = new_index[e.0];
            }
            col.sort_unstable_by_key(|e| e.0);
        }
        Ok(Self {
            m,
            cols,
            c,
            b: bb,
            u,
            map,
        })
    }

    fn recover(&self, xs: &[f64], n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (j, r) in self.map.iter().enumerate() {
            x[j] = match *r {
                Recover::Fixed(v) => v,
                Recover::Shift { col, lo } => lo + xs[col],
                Recover::Negated { col, hi } => hi - xs[col],
                Recover::Split { pos, neg } => xs[pos] - xs[neg],
            };
        }
        x
    }

    fn at(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.m];
        for (col, &v) in self.cols.iter().zip(x) {
            if v != 0.0 {
                for &(i, a) in col {
                    r[i] += a * v;
                }
            }
        }
        r
    }

    fn at_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, a)| a * y[i]).sum())
            .collect()
    }

    fn profile(&self) -> ProfileMatrix {
        let mut first: Vec<usize> = (0..self.m).collect();
        for col in &self.cols {
            if let Some(&(lo, _)) = col.first() {
                for &(i, _) in col {
                    first[i] = first[i].min(lo);
                }
            }
        }
        ProfileMatrix::new(first)
    }

    /// Returns the status, the standard-form primal point and the
    /// iteration count.
    fn solve(&self, opt_tol: f64) -> (LpStatus, Vec<f64>, usize) {
        let n = self.cols.len();
        let m = self.m;
        if n == 0 {
            return (LpStatus::Optimal, Vec::new(), 0);
        }
        let has_u: Vec<bool> = self.u.iter().map(|u| u.is_finite()).collect();
        let n_bounded = has_u.iter().filter(|&&h| h).count();
        let bnorm = inf_norm(&self.b);
        let cnorm = inf_norm(&self.c);
        let unorm = self.u.iter().filter(|u| u.is_finite()).fold(0.0f64, |a, u| a.max(u.abs()));

        let start = 1.0f64.max(0.1 * bnorm);
        let mut x: Vec<f64> = self
            .u
            .iter()
            .map(|&u| if u.is_finite() { (0.5 * u).min(start).max(1e-8 * start) } else { start })
            .collect();
        let mut w: Vec<f64> = (0..n).map(|j| if has_u[j] { self.u[j] - x[j] } else { 0.0 }).collect();
        let dual_start = 1.0f64.max(cnorm);
        let mut z = vec![dual_start; n];
        let mut v: Vec<f64> = (0..n).map(|j| if has_u[j] { dual_start } else { 0.0 }).collect();
        let mut y = vec![0.0; m];

        let mut normal = self.profile();
        let mut best_mu = f64::INFINITY;
        for it in 0..MAX_ITER {
            let ax = self.at(&x);
            let rb: Vec<f64> = (0..m).map(|i| self.b[i] - ax[i]).collect();
            let aty = self.at_transpose(&y);
            let rc: Vec<f64> = (0..n).map(|j| self.c[j] - aty[j] - z[j] + v[j]).collect();
            let ru: Vec<f64> = (0..n)
                .map(|j| if has_u[j] { self.u[j] - x[j] - w[j] } else { 0.0 })
                .collect();
            let pobj: f64 = dot(&self.c, &x);
            let dobj: f64 = dot(&self.b, &y)
                - (0..n).filter(|&j| has_u[j]).map(|j| self.u[j] * v[j]).sum::<f64>();
            let comp: f64 = dot(&x, &z) + dot(&w, &v);
            let mu = comp / (n + n_bounded) as f64;

            let p_res = inf_norm(&rb) / (1.0 + bnorm);
            let u_res = inf_norm(&ru) / (1.0 + unorm);
            let d_res = inf_norm(&rc) / (1.0 + cnorm);
            let gap = (pobj - dobj).abs();
            if p_res <= CONVERGENCE
                && u_res <= CONVERGENCE
                && d_res <= CONVERGENCE
                && (gap <= 0.1 * opt_tol || gap <= CONVERGENCE * (1.0 + pobj.abs()))
                && comp <= opt_tol.max(CONVERGENCE * (1.0 + pobj.abs()))
            {
                let clamped = (0..n)
                    .map(|j| if has_u[j] { x[j].clamp(0.0, self.u[j]) } else { x[j].max(0.0) })
                    .collect();
                return (LpStatus::Optimal, clamped, it);
            }
            if !mu.is_finite() || inf_norm(&x) > 1e14 * start || inf_norm(&y) > 1e14 * dual_start.max(1.0) {
                log::debug!("interior point diverged at iteration {it}");
                return (LpStatus::NumericalFailure, x, it);
            }
            best_mu = best_mu.min(mu);

            let theta: Vec<f64> = (0..n)
                .map(|j| {
                    let d = z[j] / x[j] + if has_u[j] { v[j] / w[j] } else { 0.0 };
                    1.0 / d
                })
                .collect();
            normal.clear();
            for (j, col) in self.cols.iter().enumerate() {
                let t = theta[j];
                for (k, &(i1, a1)) in col.iter().enumerate() {
                    for &(i2, a2) in &col[..=k] {
                        normal.add(i1, i2, t * a1 * a2);
                    }
                }
            }
            normal.factor(1e-30);

            let solve_dir = |rxz: &[f64], rwv: &[f64]| -> Dir {
                let rhat: Vec<f64> = (0..n)
                    .map(|j| {
                        let mut r = rc[j] - rxz[j] / x[j];
                        if has_u[j] {
                            r += (rwv[j] - v[j] * ru[j]) / w[j];
                        }
                        r
                    })
                    .collect();
                let th_r: Vec<f64> = (0..n).map(|j| theta[j] * rhat[j]).collect();
                let a_th_r = self.at(&th_r);
                let mut dy: Vec<f64> = (0..m).map(|i| rb[i] + a_th_r[i]).collect();
                normal.solve(&mut dy);
                let atdy = self.at_transpose(&dy);
                let dx: Vec<f64> = (0..n).map(|j| theta[j] * (atdy[j] - rhat[j])).collect();
                let dz: Vec<f64> = (0..n).map(|j| (rxz[j] - z[j] * dx[j]) / x[j]).collect();
                let dw: Vec<f64> = (0..n).map(|j| if has_u[j] { ru[j] - dx[j] } else { 0.0 }).collect();
                let dv: Vec<f64> = (0..n)
                    .map(|j| if has_u[j] { (rwv[j] - v[j] * dw[j]) / w[j] } else { 0.0 })
                    .collect();
                Dir { dx, dy, dz, dw, dv }
            };

            // Predictor.
            let rxz: Vec<f64> = (0..n).map(|j| -x[j] * z[j]).collect();
            let rwv: Vec<f64> = (0..n).map(|j| if has_u[j] { -w[j] * v[j] } else { 0.0 }).collect();
            let aff = solve_dir(&rxz, &rwv);
            let ap = max_step(&x, &aff.dx).min(max_step_masked(&w, &aff.dw, &has_u)).min(1.0);
            let ad = max_step(&z, &aff.dz).min(max_step_masked(&v, &aff.dv, &has_u)).min(1.0);
            let mut comp_aff = 0.0;
            for j in 0..n {
                comp_aff += (x[j] + ap * aff.dx[j]) * (z[j] + ad * aff.dz[j]);
                if has_u[j] {
                    comp_aff += (w[j] + ap * aff.dw[j]) * (v[j] + ad * aff.dv[j]);
                }
            }
            let mu_aff = comp_aff / (n + n_bounded) as f64;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

            // Corrector.
            let rxz: Vec<f64> = (0..n)
                .map(|j| sigma * mu - x[j] * z[j] - aff.dx[j] * aff.dz[j])
                .collect();
            let rwv: Vec<f64> = (0..n)
                .map(|j| {
                    if has_u[j] {
                        sigma * mu - w[j] * v[j] - aff.dw[j] * aff.dv[j]
                    } else {
                        0.0
                    }
                })
                .collect();
            let d = solve_dir(&rxz, &rwv);
            let ap = (STEP_FRACTION * max_step(&x, &d.dx).min(max_step_masked(&w, &d.dw, &has_u))).min(1.0);
            let ad = (STEP_FRACTION * max_step(&z, &d.dz).min(max_step_masked(&v, &d.dv, &has_u))).min(1.0);
            for j in 0..n {
                x[j] += ap * d.dx[j];
                z[j] += ad * d.dz[j];
                if has_u[j] {
                    w[j] += ap * d.dw[j];
                    v[j] += ad * d.dv[j];
                }
            }
            for i in 0..m {
                y[i] += ad * d.dy[i];
            }
        }
        log::debug!("interior point hit the iteration limit (best mu {best_mu:e})");
        (LpStatus::NumericalFailure, x, MAX_ITER)
    }
}

struct Dir {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    dw: Vec<f64>,
    dv: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Largest `alpha` keeping `v + alpha * d >= 0`.
fn max_step(v: &[f64], d: &[f64]) -> f64 {
    v.iter()
        .zip(d)
        .filter(|(_, &dj)| dj < 0.0)
        .map(|(&vj, &dj)| -vj / dj)
        .fold(f64::INFINITY, f64::min)
}

fn max_step_masked(v: &[f64], d: &[f64], mask: &[bool]) -> f64 {
    (0..v.len())
        .filter(|&j| mask[j] && d[j] < 0.0)
        .map(|j| -v[j] / d[j])
        .fold(f64::INFINITY, f64::min)
}
