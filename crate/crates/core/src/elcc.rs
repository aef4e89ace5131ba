//! Expected reliability over a fixed scenario set and ELCC accreditation by
//! bisection on the added load.

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::{dispatch_heuristic, dispatch_optimal_warm, DispatchResult, Dispatcher, PriorityConfig};
use crate::error::{Error, Result};
use crate::lp::{Basis, SolverOptions};
use crate::model::{LoadModel, Resource, SystemResources, UnlimitedUnit};
use crate::scenario::{ScenarioSet, TraceStore};

/// Reliability metric averaged over scenarios.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Expected unserved energy, MWh.
    #[default]
    Eue,
    /// Loss-of-load expectation, steps.
    Lole,
}

impl Metric {
    pub fn of(self, r: &DispatchResult) -> f64 {
        match self {
            Metric::Eue => r.metrics.eue_mwh,
            Metric::Lole => r.metrics.lole_steps as f64,
        }
    }
}

/// What the added resource is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Benchmark {
    /// Extra load the augmented system carries at baseline reliability.
    #[default]
    LoadIncrease,
    /// Capacity of a never-failing unit with the same reliability effect.
    PerfectGenerator,
    /// Capacity of a unit with forced-outage rate `efor` with the same
    /// reliability effect.
    ReferenceUnit {
        efor: f64,
        #[serde(default = "default_repair")]
        mean_repair_hours: f64,
    },
}

fn default_repair() -> f64 {
    24.0
}

/// Id under which benchmark units are realized; fixes their outage stream.
pub const BENCHMARK_UNIT_ID: &str = "elcc-benchmark-unit";

/// Everything that stays fixed while a study evaluates the metric.
#[derive(Clone, Copy)]
pub struct Evaluator<'a> {
    pub dispatcher: Dispatcher,
    pub metric: Metric,
    pub solver: &'a SolverOptions,
    pub rules: &'a PriorityConfig,
}

/// Mean metric and its per-scenario values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean: f64,
    pub per_scenario: Vec<f64>,
}

/// Per-scenario simplex bases kept between solves of the same fleet.
pub struct WarmCache {
    bases: Vec<Mutex<Option<Basis>>>,
}

impl WarmCache {
    pub fn new(n: usize) -> Self {
        Self {
            bases: (0..n).map(|_| Mutex::new(None)).collect(),
        }
    }
}

impl Evaluator<'_> {
    /// Mean reliability metric of a fleet under `load` over every scenario
    /// in `set`. Scenarios run in parallel; the result does not depend on
    /// the thread count.
    pub fn expected_reliability(
        &self,
        resources: &SystemResources,
        load: &LoadModel,
        set: &ScenarioSet,
        warm: Option<&WarmCache>,
    ) -> Result<Evaluation> {
        set.check_consistent(resources)?;
        let per_scenario = (0..set.len())
            .into_par_iter()
            .map(|i| {
                let sc = set.get(i);
                let d = set.load_for(i, load);
                let result = match self.dispatcher {
                    Dispatcher::Heuristic => dispatch_heuristic(resources, sc, &d, self.rules)?,
                    Dispatcher::Optimal => {
                        let slot = warm.map(|w| &w.bases[i]);
                        let hint = slot.and_then(|m| m.lock().ok().and_then(|g| g.clone()));
                        let (r, basis) = dispatch_optimal_warm(resources, sc, &d, self.solver, hint.as_ref())?;
                        if let (Some(m), Some(b)) = (slot, basis) {
                            if let Ok(mut g) = m.lock() {
                                *g = Some(b);
                            }
                        }
                        r
                    }
                };
                Ok(self.metric.of(&result))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Evaluation {
            mean: mean(&per_scenario),
            per_scenario,
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// How a bisection stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    /// The metric matched the target within tolerance at a point whose
    /// right neighbour (one resolution step on) already exceeds it.
    Tolerance,
    /// The search interval shrank below the resolution.
    Resolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bisection {
    /// Largest point known not to exceed the target (within tolerance).
    pub x: f64,
    pub value: f64,
    pub stop: Stop,
    /// Number of interval halvings.
    pub iterations: usize,
    /// Every evaluation in order, including bracket and probe points.
    pub trace: Vec<TracePoint>,
}

/// Upper bound on halvings for an interval of width `w`.
pub fn iteration_bound(w: f64, resolution: f64) -> usize {
    if w <= resolution {
        0
    } else {
        (w / resolution).log2().ceil() as usize
    }
}

/// Finds the largest `x` in `[lo, hi]` with `f(x) <= target`, for `f`
/// non-decreasing. Stops early when `|f(x) - target| < eps` and `f` already
/// exceeds the target one resolution step later; otherwise halves until the
/// bracket is narrower than `resolution`. Every evaluation is checked
/// against all earlier ones for monotonicity (with slack `mono_tol`).
pub fn bisect<F>(mut f: F, target: f64, lo: f64, hi: f64, eps: f64, resolution: f64, mono_tol: f64) -> Result<Bisection>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) || !(resolution > 0.0) || !(eps > 0.0) {
        return Err(Error::Invalid(format!(
            "bisection needs lo < hi and positive tolerances (lo={lo}, hi={hi}, eps={eps}, res={resolution})"
        )));
    }
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut eval = |x: f64, trace: &mut Vec<TracePoint>| -> Result<f64> {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(Error::Invalid(format!("metric at {x} is not finite")));
        }
        for p in trace.iter() {
            let (a, b) = if p.x <= x { (*p, TracePoint { x, value: v }) } else { (TracePoint { x, value: v }, *p) };
            if a.x < b.x && a.value > b.value + mono_tol {
                return Err(Error::NonMonotone {
                    a: a.x,
                    ra: a.value,
                    b: b.x,
                    rb: b.value,
                });
            }
        }
        trace.push(TracePoint { x, value: v });
        Ok(v)
    };

    let f_lo = eval(lo, &mut trace)?;
    let f_hi = eval(hi, &mut trace)?;
    if f_lo - target > eps || f_hi - target <= 0.0 {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: f_lo - target,
            f_hi: f_hi - target,
        });
    }

    // A point matching the target is accepted only if one resolution step
    // further on the metric is already above it; on a plateau the search
    // continues to the right.
    let probe = |x: f64, eval: &mut dyn FnMut(f64, &mut Vec<TracePoint>) -> Result<f64>, trace: &mut Vec<TracePoint>| -> Result<bool> {
        let right = x + resolution;
        if right >= hi {
            return Ok(false);
        }
        let v = eval(right, trace)?;
        Ok(v - target >= eps)
    };

    let (mut a, mut b) = (lo, hi);
    let mut fa = f_lo;
    if (f_lo - target).abs() < eps && probe(lo, &mut eval, &mut trace)? {
        return Ok(Bisection {
            x: lo,
            value: f_lo,
            stop: Stop::Tolerance,
            iterations: 0,
            trace,
        });
    }
    let mut iterations = 0;
    while b - a > resolution {
        let mid = 0.5 * (a + b);
        let fm = eval(mid, &mut trace)?;
        iterations += 1;
        if fm - target <= 0.0 || (fm - target).abs() < eps {
            a = mid;
            fa = fm;
            if (fm - target).abs() < eps && probe(mid, &mut eval, &mut trace)? {
                return Ok(Bisection {
                    x: mid,
                    value: fm,
                    stop: Stop::Tolerance,
                    iterations,
                    trace,
                });
            }
        } else {
            b = mid;
        }
    }
    Ok(Bisection {
        x: a,
        value: fa,
        stop: Stop::Resolution,
        iterations,
        trace,
    })
}

fn default_eps() -> f64 {
    1e-6
}

fn default_resolution() -> f64 {
    0.01
}

/// An accreditation request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElccStudy {
    pub addition: Vec<Resource>,
    #[serde(default)]
    pub metric: Metric,
    /// Metric tolerance for declaring a match.
    #[serde(default = "default_eps")]
    pub tolerance: f64,
    pub delta_lo_mw: f64,
    pub delta_hi_mw: f64,
    #[serde(default = "default_resolution")]
    pub delta_resolution_mw: f64,
    #[serde(default)]
    pub benchmark: Benchmark,
    /// Reliability level to match instead of the baseline's own.
    #[serde(default)]
    pub target_metric: Option<f64>,
    /// Also evaluate the metric on an evenly spaced grid of this many
    /// points across the search bounds and require it to be monotone.
    #[serde(default)]
    pub monotonicity_grid: Option<usize>,
}

impl ElccStudy {
    pub fn load_increase(addition: Vec<Resource>, delta_lo_mw: f64, delta_hi_mw: f64) -> Self {
        Self {
            addition,
            metric: Metric::Eue,
            tolerance: default_eps(),
            delta_lo_mw,
            delta_hi_mw,
            delta_resolution_mw: default_resolution(),
            benchmark: Benchmark::LoadIncrease,
            target_metric: None,
            monotonicity_grid: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.tolerance > 0.0) {
            v.push(format!("tolerance must be > 0 (got {})", self.tolerance));
        }
        if !(self.delta_lo_mw < self.delta_hi_mw) {
            v.push(format!("delta bounds [{}, {}] are not ordered", self.delta_lo_mw, self.delta_hi_mw));
        }
        if !(self.delta_resolution_mw > 0.0) {
            v.push("delta_resolution_mw must be > 0".into());
        }
        if let Benchmark::ReferenceUnit { efor, mean_repair_hours } = self.benchmark {
            if !(0.0..=1.0).contains(&efor) || !(mean_repair_hours > 0.0) {
                v.push("reference unit needs 0 <= efor <= 1 and mean_repair_hours > 0".into());
            }
        }
        if let Some(n) = self.monotonicity_grid {
            if n < 2 {
                v.push("monotonicity_grid needs at least 2 points".into());
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElccResult {
    /// Accredited capacity, MW.
    pub delta_mw: f64,
    pub benchmark: Benchmark,
    pub metric: Metric,
    /// Reliability level matched.
    pub target: f64,
    /// Metric of the fleet the addition is measured on, before scaling.
    pub baseline: f64,
    /// Metric at the accredited point.
    pub matched: f64,
    pub residual: f64,
    pub stop: Stop,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub trace: Vec<TracePoint>,
    /// Load shift that brings the baseline fleet to an explicit target.
    pub baseline_shift_mw: Option<f64>,
    /// Halvings used to find the baseline shift.
    pub baseline_shift_iterations: Option<usize>,
    pub per_scenario_baseline: Vec<f64>,
    pub per_scenario_matched: Vec<f64>,
    pub grid: Vec<TracePoint>,
    pub scenario_fingerprint: String,
    pub nameplate_mw: f64,
}

/// Fixed inputs of a study.
#[derive(Clone, Copy)]
pub struct StudyInputs<'a> {
    pub resources: &'a SystemResources,
    pub load: &'a LoadModel,
    pub traces: &'a TraceStore,
    pub scenarios: &'a ScenarioSet,
}

fn mono_tol(eval: &Evaluator<'_>) -> f64 {
    match eval.metric {
        Metric::Eue => 10.0 * eval.solver.opt_tol,
        Metric::Lole => 1e-9,
    }
}

/// Runs an accreditation study in its benchmark mode.
pub fn elcc_benchmark(inputs: StudyInputs<'_>, study: &ElccStudy, eval: &Evaluator<'_>) -> Result<ElccResult> {
    study.validate()?;
    let base_set = inputs.scenarios;
    base_set.check_consistent(inputs.resources)?;
    let root = base_set.root_fingerprint().to_string();
    let aug_resources = inputs.resources.augment(&study.addition)?;
    let aug_set = base_set.extend_with(&study.addition, inputs.traces)?;
    if aug_set.root_fingerprint() != root {
        return Err(Error::ScenarioMismatch {
            expected: root,
            found: aug_set.root_fingerprint().to_string(),
        });
    }
    let nameplate = study.addition.iter().map(Resource::nameplate_mw).sum();
    let res = study.delta_resolution_mw;
    let tol = mono_tol(eval);

    match study.benchmark {
        Benchmark::LoadIncrease => {
            let base_eval = eval.expected_reliability(inputs.resources, inputs.load, base_set, None)?;
            let (target, shift, shift_iterations) = match study.target_metric {
                None => (base_eval.mean, None, None),
                Some(target) => {
                    let warm = WarmCache::new(base_set.len());
                    let b = bisect(
                        |d| Ok(eval.expected_reliability(inputs.resources, &inputs.load.scale(d)?, base_set, Some(&warm))?.mean),
                        target,
                        study.delta_lo_mw,
                        study.delta_hi_mw,
                        study.tolerance,
                        res,
                        tol,
                    )?;
                    (target, Some(b.x), Some(b.iterations))
                }
            };
            let warm = WarmCache::new(aug_set.len());
            let metric_at = |d: f64| -> Result<Evaluation> {
                eval.expected_reliability(&aug_resources, &inputs.load.scale(d)?, &aug_set, Some(&warm))
            };
            let b = bisect(
                |d| Ok(metric_at(d)?.mean),
                target,
                study.delta_lo_mw,
                study.delta_hi_mw,
                study.tolerance,
                res,
                tol,
            )?;
            let matched = metric_at(b.x)?;
            let grid = match study.monotonicity_grid {
                Some(n) => monotone_grid(|d| Ok(metric_at(d)?.mean), study.delta_lo_mw, study.delta_hi_mw, n, tol)?,
                None => Vec::new(),
            };
            Ok(ElccResult {
                delta_mw: b.x - shift.unwrap_or(0.0),
                benchmark: study.benchmark,
                metric: eval.metric,
                target,
                baseline: base_eval.mean,
                residual: matched.mean - target,
                matched: matched.mean,
                stop: b.stop,
                iterations: b.iterations,
                iteration_bound: iteration_bound(study.delta_hi_mw - study.delta_lo_mw, res),
                trace: b.trace,
                baseline_shift_mw: shift,
                baseline_shift_iterations: shift_iterations,
                per_scenario_baseline: base_eval.per_scenario,
                per_scenario_matched: matched.per_scenario,
                grid,
                scenario_fingerprint: root,
                nameplate_mw: nameplate,
            })
        }
        Benchmark::PerfectGenerator | Benchmark::ReferenceUnit { .. } => {
            let (efor, repair) = match study.benchmark {
                Benchmark::ReferenceUnit { efor, mean_repair_hours } => (efor, mean_repair_hours),
                _ => (0.0, 24.0),
            };
            let aug_eval = eval.expected_reliability(&aug_resources, inputs.load, &aug_set, None)?;
            let target = study.target_metric.unwrap_or(aug_eval.mean);
            let reference = |q: f64| UnlimitedUnit {
                id: BENCHMARK_UNIT_ID.into(),
                capacity_mw: q.max(0.0),
                efor,
                mean_repair_hours: repair,
            };
            let warm = WarmCache::new(base_set.len());
            let metric_at = |q: f64| -> Result<Evaluation> {
                let add = [Resource::Unlimited(reference(q))];
                let res_q = inputs.resources.augment(&add)?;
                let set_q = base_set.extend_with(&add, inputs.traces)?;
                eval.expected_reliability(&res_q, inputs.load, &set_q, Some(&warm))
            };
            // Metric falls with capacity; search over x = -q.
            let lo = study.delta_lo_mw.max(0.0);
            let hi = study.delta_hi_mw;
            let b = bisect(|x| Ok(metric_at(-x)?.mean), target, -hi, -lo, study.tolerance, res, tol)?;
            let q = -b.x;
            let matched = metric_at(q)?;
            let grid = match study.monotonicity_grid {
                Some(n) => monotone_grid(|x| Ok(metric_at(-x)?.mean), -hi, -lo, n, tol)?
                    .into_iter()
                    .map(|p| TracePoint { x: -p.x, value: p.value })
                    .collect(),
                None => Vec::new(),
            };
            Ok(ElccResult {
                delta_mw: q,
                benchmark: study.benchmark,
                metric: eval.metric,
                target,
                baseline: aug_eval.mean,
                residual: matched.mean - target,
                matched: matched.mean,
                stop: b.stop,
                iterations: b.iterations,
                iteration_bound: iteration_bound(hi - lo, res),
                trace: b
                    .trace
                    .into_iter()
                    .map(|p| TracePoint { x: -p.x, value: p.value })
                    .collect(),
                baseline_shift_mw: None,
                baseline_shift_iterations: None,
                per_scenario_baseline: aug_eval.per_scenario,
                per_scenario_matched: matched.per_scenario,
                grid,
                scenario_fingerprint: root,
                nameplate_mw: nameplate,
            })
        }
    }
}

/// Load-increase ELCC of `study.addition`.
pub fn find_delta(inputs: StudyInputs<'_>, study: &ElccStudy, eval: &Evaluator<'_>) -> Result<ElccResult> {
    let study = ElccStudy {
        benchmark: Benchmark::LoadIncrease,
        ..study.clone()
    };
    elcc_benchmark(inputs, &study, eval)
}

/// Evaluates `f` on `n` evenly spaced points of `[lo, hi]` and fails if the
/// values ever decrease by more than `tol`.
pub fn monotone_grid<F>(mut f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Result<Vec<TracePoint>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut out: Vec<TracePoint> = Vec::with_capacity(n);
    for k in 0..n {
        let x = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
        let value = f(x)?;
        if let Some(prev) = out.last() {
            if value < prev.value - tol {
                return Err(Error::NonMonotone {
                    a: prev.x,
                    ra: prev.value,
                    b: x,
                    rb: value,
                });
            }
        }
        out.push(TracePoint { x, value });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_kink_of_piecewise_linear() {
        let f = |x: f64| Ok((x - 2.5).max(0.0) + 4.0);
        let b = bisect(f, 4.0, 0.0, 5.0, 1e-9, 0.01, 1e-9).unwrap();
        assert_eq!(b.x, 2.5);
        assert_eq!(b.stop, Stop::Tolerance);
        assert!(b.iterations <= iteration_bound(5.0, 0.01));
    }

    #[test]
    fn bisection_walks_off_plateau() {
        // Zero up to 1.3, then rising: the match is the right end.
        let f = |x: f64| Ok((x - 1.3).max(0.0));
        let b = bisect(f, 0.0, 0.0, 4.0, 1e-9, 0.01, 1e-9).unwrap();
        assert!((b.x - 1.3).abs() <= 0.01, "{}", b.x);
        assert!(b.x <= 1.3);
    }

    #[test]
    fn bisection_respects_iteration_bound() {
        let f = |x: f64| Ok(x * x);
        let b = bisect(f, 2.0, 0.0, 3.0, 1e-15, 1e-3, 0.0).unwrap();
        assert!(b.iterations <= iteration_bound(3.0, 1e-3));
        assert!((b.x - 2f64.sqrt()).abs() <= 1e-3);
    }

    #[test]
    fn bracket_violation_reports_both_ends() {
        let err = bisect(Ok, 10.0, 0.0, 1.0, 1e-6, 0.01, 0.0).unwrap_err();
        match err {
            Error::Bracket { f_lo, f_hi, .. } => {
                assert_eq!(f_lo, -10.0);
                assert_eq!(f_hi, -9.0);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn non_monotone_sequence_aborts() {
        let err = bisect(|x: f64| Ok(if (x - 2.0).abs() < 1e-12 { 100.0 } else { x }), 3.0, 0.0, 4.0, 1e-9, 0.01, 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::NonMonotone { .. }));
    }

    #[test]
    fn zero_match_at_lower_end() {
        let f = |x: f64| Ok(5.0 + x);
        let b = bisect(f, 5.0, 0.0, 2.0, 1e-9, 0.01, 0.0).unwrap();
        assert_eq!(b.x, 0.0);
        assert_eq!(b.iterations, 0);
    }

    #[test]
    fn grid_detects_decrease() {
        assert!(monotone_grid(Ok, 0.0, 1.0, 10, 0.0).is_ok());
        assert!(monotone_grid(|x| Ok(-x), 0.0, 1.0, 10, 0.0).is_err());
    }

    #[test]
    fn iteration_bound_values() {
        assert_eq!(iteration_bound(5.0, 0.01), 9);
        assert_eq!(iteration_bound(0.005, 0.01), 0);
    }
}
