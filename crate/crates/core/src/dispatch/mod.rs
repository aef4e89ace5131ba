//! Per-scenario dispatch of flexible resources and the reliability metrics
//! of the resulting trajectories.
//!
//! Both dispatchers work on the same reduced view of a scenario: storage
//! grouped into classes, flexible demand summed, and the shortage-gated
//! demand reductions resolved in closed form from the shortfall.

mod heuristic;
mod optimal;

use serde::{Deserialize, Serialize};

pub use heuristic::{dispatch_heuristic, PriorityConfig, StorageOrder};
pub use optimal::{build_lp, dispatch_optimal, dispatch_optimal_warm, postprocess_storage, DispatchLp, LpLayout};

use crate::colocated::{gated_reductions, ColDecision};
use crate::error::{Error, Result};
use crate::lp::Engine;
use crate::model::{merge_storage, storage_classes, HydrogenPortfolio, StorageUnit, SystemResources};
use crate::scenario::Scenario;

/// Unserved power above which a step counts as a loss-of-load event.
pub const LOLE_EPS_MW: f64 = 1e-4;

/// Which dispatcher produced a result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispatcher {
    #[default]
    Optimal,
    Heuristic,
}

impl std::str::FromStr for Dispatcher {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Self::Optimal),
            "heuristic" => Ok(Self::Heuristic),
            other => Err(Error::Invalid(format!("unknown dispatcher `{other}`"))),
        }
    }
}

impl std::fmt::Display for Dispatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::Heuristic => "heuristic",
        })
    }
}

/// Net shortfall at step `t`: load plus flexible and colocated baselines,
/// minus conventional and variable supply.
pub fn shortfall(scenario: &Scenario, load: &[f64], t: usize) -> f64 {
    let flex: f64 = scenario.flex_baselines.iter().map(|b| b[t]).sum();
    let col: f64 = scenario.col_realizations.iter().map(|c| c.baseline_mw[t]).sum();
    load[t] + flex + col - scenario.p_u[t] - scenario.p_v[t]
}

/// Realized aggregate flexible-demand consumption at step `t`: the full
/// baseline unless there is a shortfall, in which case consumption drops by
/// the shortfall up to the reduction cap.
pub fn aggregate_flex(scenario: &Scenario, load: &[f64], t: usize) -> f64 {
    let base: f64 = scenario.flex_baselines.iter().map(|b| b[t]).sum();
    let cap: f64 = scenario.flex_caps.iter().map(|c| c[t]).sum();
    flex_consumption(base, cap, shortfall(scenario, load, t))
}

/// Closed form behind [`aggregate_flex`].
pub fn flex_consumption(baseline_mw: f64, cap_mw: f64, shortfall_mw: f64) -> f64 {
    if shortfall_mw <= 0.0 {
        baseline_mw
    } else {
        baseline_mw - cap_mw.min(shortfall_mw)
    }
}

/// A storage class as dispatched: the merged unit and its members.
#[derive(Clone, Debug, PartialEq)]
pub struct StorageClass {
    pub unit: StorageUnit,
    pub initial_mwh: f64,
    pub members: Vec<String>,
}

/// Scenario data reduced to what the dispatchers consume.
#[derive(Clone, Debug)]
pub struct Prepared<'a> {
    pub steps: usize,
    pub step_hours: f64,
    pub load: Vec<f64>,
    /// Conventional plus variable supply.
    pub supply: Vec<f64>,
    pub shortfall: Vec<f64>,
    pub flex_baseline: Vec<f64>,
    pub flex_cap: Vec<f64>,
    pub classes: Vec<StorageClass>,
    pub portfolios: &'a [HydrogenPortfolio],
    pub col_wind: Vec<Vec<f64>>,
    pub col_baseline: Vec<Vec<f64>>,
    /// Closed-form flexible-demand reduction per step.
    pub flex_reduction: Vec<f64>,
    /// Closed-form electrolyzer reduction per portfolio and step.
    pub col_reduction: Vec<Vec<f64>>,
}

impl<'a> Prepared<'a> {
    pub fn new(resources: &'a SystemResources, scenario: &Scenario, load: &[f64]) -> Result<Self> {
        let steps = resources.horizon.steps;
        let dim = |what: &str, got: usize, want: usize| -> Result<()> {
            if got != want {
                return Err(Error::Dimension(format!(
                    "scenario {}: {what} has {got} entries, expected {want}",
                    scenario.scenario_id
                )));
            }
            Ok(())
        };
        dim("load", load.len(), steps)?;
        dim("conventional supply", scenario.p_u.len(), steps)?;
        dim("variable supply", scenario.p_v.len(), steps)?;
        dim("storage initial states", scenario.storage_initials.len(), resources.storage.len())?;
        dim("flexible baselines", scenario.flex_baselines.len(), resources.flexible.len())?;
        dim("flexible caps", scenario.flex_caps.len(), resources.flexible.len())?;
        dim("colocated realizations", scenario.col_realizations.len(), resources.colocated.len())?;
        for series in scenario.flex_baselines.iter().chain(&scenario.flex_caps) {
            dim("flexible series", series.len(), steps)?;
        }
        for c in &scenario.col_realizations {
            dim("colocated wind", c.wind_mw.len(), steps)?;
            dim("colocated baseline", c.baseline_mw.len(), steps)?;
        }

        let shortfall: Vec<f64> = (0..steps).map(|t| self::shortfall(scenario, load, t)).collect();
        let sum_rows = |rows: &[Vec<f64>]| -> Vec<f64> { (0..steps).map(|t| rows.iter().map(|r| r[t]).sum()).collect() };
        let flex_baseline = sum_rows(&scenario.flex_baselines);
        let flex_cap = sum_rows(&scenario.flex_caps);

        let classes = storage_classes(&resources.storage, &scenario.storage_initials)
            .into_iter()
            .map(|members| {
                let units: Vec<&StorageUnit> = members.iter().map(|&i| &resources.storage[i]).collect();
                let socs: Vec<f64> = members.iter().map(|&i| scenario.storage_initials[i]).collect();
                let ids: Vec<String> = units.iter().map(|u| u.id.clone()).collect();
                let (unit, initial) = if units.len() == 1 {
                    (units[0].clone(), socs[0])
                } else {
                    merge_storage(&units, &socs, ids.join("+"))
                };
                StorageClass {
                    unit,
                    initial_mwh: initial,
                    members: ids,
                }
            })
            .collect();

        let dr_caps: Vec<f64> = resources.colocated.iter().map(|p| p.dr_cap_mw()).collect();
        let mut flex_reduction = vec![0.0; steps];
        let mut col_reduction = vec![vec![0.0; steps]; resources.colocated.len()];
        for t in 0..steps {
            let (f, c) = gated_reductions(shortfall[t], flex_cap[t], &dr_caps);
            flex_reduction[t] = f;
            for (r, v) in c.into_iter().enumerate() {
                col_reduction[r][t] = v;
            }
        }

        Ok(Self {
            steps,
            step_hours: resources.horizon.step_hours,
            load: load.to_vec(),
            supply: (0..steps).map(|t| scenario.p_u[t] + scenario.p_v[t]).collect(),
            shortfall,
            flex_baseline,
            flex_cap,
            classes,
            portfolios: &resources.colocated,
            col_wind: scenario.col_realizations.iter().map(|c| c.wind_mw.clone()).collect(),
            col_baseline: scenario.col_realizations.iter().map(|c| c.baseline_mw.clone()).collect(),
            flex_reduction,
            col_reduction,
        })
    }
}

/// Charge, discharge and state of charge of one storage class.
/// `soc_mwh` has one more entry than the step count.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StorageTrajectory {
    pub members: Vec<String>,
    pub eta_charge: f64,
    pub charge_mw: Vec<f64>,
    pub discharge_mw: Vec<f64>,
    pub soc_mwh: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColTrajectory {
    pub id: String,
    pub decisions: Vec<ColDecision>,
    pub tank_final_mwh_h2: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub eue_mwh: f64,
    pub lole_steps: usize,
    pub peak_shortfall_mw: f64,
}

impl Metrics {
    pub fn from_unserved(unserved_mw: &[f64], step_hours: f64) -> Self {
        Self {
            eue_mwh: unserved_mw.iter().sum::<f64>() * step_hours,
            lole_steps: unserved_mw.iter().filter(|&&u| u > LOLE_EPS_MW).count(),
            peak_shortfall_mw: unserved_mw.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// LP bookkeeping attached to optimal dispatches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub engine: Engine,
    pub iterations: usize,
    /// Objective of the program before post-processing.
    pub raw_objective_mwh: f64,
}

/// Trajectories and metrics of one scenario dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub scenario_id: usize,
    pub dispatcher: Dispatcher,
    pub step_hours: f64,
    pub load_mw: Vec<f64>,
    pub shortfall_mw: Vec<f64>,
    pub flex_consumption_mw: Vec<f64>,
    pub flex_reduction_mw: Vec<f64>,
    pub storage: Vec<StorageTrajectory>,
    pub colocated: Vec<ColTrajectory>,
    pub curtailment_mw: Vec<f64>,
    pub unserved_mw: Vec<f64>,
    pub metrics: Metrics,
    pub solve: Option<SolveInfo>,
}

impl DispatchResult {
    pub fn steps(&self) -> usize {
        self.unserved_mw.len()
    }

    /// Supply minus demand at step `t`, counting unserved energy as supply
    /// and curtailment as demand. Zero for a balanced dispatch.
    pub fn balance_residual(&self, prep: &Prepared<'_>, t: usize) -> f64 {
        let (supply, demand) = self.sides(prep, t);
        supply + self.unserved_mw[t] - demand - self.curtailment_mw[t]
    }

    /// Physical supply and demand at `t`, excluding the two slacks.
    fn sides(&self, prep: &Prepared<'_>, t: usize) -> (f64, f64) {
        let mut supply = prep.supply[t];
        let mut demand = prep.load[t] + self.flex_consumption_mw[t];
        for s in &self.storage {
            supply += s.discharge_mw[t];
            demand += s.charge_mw[t];
        }
        for c in &self.colocated {
            let d = &c.decisions[t];
            supply += crate::colocated::col_generation(d);
            demand += crate::colocated::col_consumption(d);
        }
        (supply, demand)
    }

    /// Recomputes unserved energy and curtailment from the balance so they
    /// close it exactly and are never both positive, then refreshes the
    /// metrics.
    pub(crate) fn settle_balance(&mut self, prep: &Prepared<'_>) {
        for t in 0..self.steps() {
            let (supply, demand) = self.sides(prep, t);
            let gap = demand - supply;
            self.unserved_mw[t] = gap.max(0.0);
            self.curtailment_mw[t] = (-gap).max(0.0);
        }
        self.metrics = Metrics::from_unserved(&self.unserved_mw, self.step_hours);
    }
}

/// Checks a dispatch against every operating constraint. Returns the list
/// of violations, empty when the dispatch is feasible within `tol`.
pub fn check_feasibility(result: &DispatchResult, prep: &Prepared<'_>, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let steps = prep.steps;
    let h = prep.step_hours;
    let mut bad = |msg: String| out.push(msg);
    if result.steps() != steps || result.curtailment_mw.len() != steps {
        bad(format!("trajectory length {} for {steps} steps", result.steps()));
        return out;
    }
    if result.storage.len() != prep.classes.len() || result.colocated.len() != prep.portfolios.len() {
        bad("resource count mismatch".into());
        return out;
    }
    for t in 0..steps {
        let r = result.balance_residual(prep, t);
        if r.abs() > tol {
            bad(format!("step {t}: balance residual {r:e}"));
        }
        if result.unserved_mw[t] < -tol || result.curtailment_mw[t] < -tol {
            bad(format!("step {t}: negative slack"));
        }
        let red = result.flex_reduction_mw[t];
        if red < -tol || red > prep.flex_cap[t] + tol {
            bad(format!("step {t}: flexible reduction {red} outside [0, {}]", prep.flex_cap[t]));
        }
        if (result.flex_consumption_mw[t] - (prep.flex_baseline[t] - red)).abs() > tol {
            bad(format!("step {t}: flexible consumption inconsistent with reduction"));
        }
        let col_red: f64 = result
            .colocated
            .iter()
            .zip(prep.col_baseline.iter())
            .map(|(c, b)| b[t] - c.decisions[t].ely_draw_mw)
            .sum();
        if red + col_red > prep.shortfall[t].max(0.0) + tol {
            bad(format!("step {t}: demand reduced by {} without matching shortfall", red + col_red));
        }
    }
    for (k, (class, traj)) in prep.classes.iter().zip(&result.storage).enumerate() {
        let u = &class.unit;
        if (traj.soc_mwh[0] - class.initial_mwh).abs() > tol {
            bad(format!("storage {k}: initial state differs"));
        }
        for t in 0..steps {
            let (c, d) = (traj.charge_mw[t], traj.discharge_mw[t]);
            if c < -tol || c > u.p_charge_max_mw + tol || d < -tol || d > u.p_discharge_max_mw + tol {
                bad(format!("storage {k} step {t}: power out of range ({c}, {d})"));
            }
            if c > 0.0 && d > 0.0 {
                bad(format!("storage {k} step {t}: simultaneous charge and discharge"));
            }
            let e = traj.soc_mwh[t + 1];
            if e < u.e_min_mwh - tol || e > u.e_max_mwh + tol {
                bad(format!("storage {k} step {t}: state of charge {e} out of range"));
            }
            let expect = traj.soc_mwh[t] + (u.eta_charge * c - d) * h;
            if (e - expect).abs() > tol {
                bad(format!("storage {k} step {t}: state of charge dynamics off by {:e}", e - expect));
            }
        }
    }
    for (r, (p, traj)) in prep.portfolios.iter().zip(&result.colocated).enumerate() {
        if (traj.decisions.first().map_or(p.tank_initial_mwh_h2, |d| d.tank_mwh_h2) - p.tank_initial_mwh_h2).abs() > tol {
            bad(format!("portfolio {r}: initial tank differs"));
        }
        for t in 0..steps {
            let d = &traj.decisions[t];
            let next = if t + 1 < steps {
                traj.decisions[t + 1].tank_mwh_h2
            } else {
                traj.tank_final_mwh_h2
            };
            let expect = crate::colocated::tank_next(p, d, h);
            if (next - expect).abs() > tol {
                bad(format!("portfolio {r} step {t}: tank dynamics off by {:e}", next - expect));
            }
            if next < -tol || next > p.tank_max_mwh_h2 + tol {
                bad(format!("portfolio {r} step {t}: tank {next} out of range"));
            }
            if d.fc_out_mw < -tol || d.fc_out_mw > p.fc_max_mw + tol {
                bad(format!("portfolio {r} step {t}: fuel cell {} out of range", d.fc_out_mw));
            }
            let wind = prep.col_wind[r][t];
            if d.wind_to_grid_mw < -tol || d.wind_spill_mw < -tol || (d.wind_to_grid_mw + d.wind_spill_mw - wind).abs() > tol {
                bad(format!("portfolio {r} step {t}: wind split does not match {wind}"));
            }
            let base = prep.col_baseline[r][t];
            if d.ely_draw_mw > base + tol || d.ely_draw_mw < base - prep.col_reduction[r][t] - tol {
                bad(format!("portfolio {r} step {t}: electrolyzer draw {} outside its band", d.ely_draw_mw));
            }
            let head = crate::colocated::recharge_headroom(p, d.ely_draw_mw);
            if d.ely_to_tank_mw < -tol || d.ely_to_tank_mw > head + tol {
                bad(format!("portfolio {r} step {t}: tank recharge {} above headroom {head}", d.ely_to_tank_mw));
            }
        }
    }
    out
}

/// Dispatches one scenario with the chosen method.
pub fn dispatch(
    method: Dispatcher,
    resources: &SystemResources,
    scenario: &Scenario,
    load: &[f64],
    solver: &crate::lp::SolverOptions,
    rules: &PriorityConfig,
) -> Result<DispatchResult> {
    match method {
        Dispatcher::Optimal => dispatch_optimal(resources, scenario, load, solver),
        Dispatcher::Heuristic => dispatch_heuristic(resources, scenario, load, rules),
    }
}
