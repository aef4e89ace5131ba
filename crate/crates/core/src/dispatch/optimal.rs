//! Risk-minimizing dispatch: one linear program per scenario minimizing
//! unserved energy over the whole horizon.

use crate::colocated::{col_constraints, recharge_headroom, ColDecision, ColVars, TankLevel};
use crate::error::{Error, Result};
use crate::lp::{solve_with_hint, Basis, LinearProgram, SolverOptions};
use crate::model::SystemResources;
use crate::scenario::Scenario;

use super::{ColTrajectory, DispatchResult, Dispatcher, Metrics, Prepared, SolveInfo, StorageTrajectory};

/// Column and row indices of a dispatch program.
#[derive(Clone, Debug, Default)]
pub struct LpLayout {
    /// `[class][t]`
    pub charge: Vec<Vec<usize>>,
    pub discharge: Vec<Vec<usize>>,
    /// State of charge at the end of step `t`.
    pub soc: Vec<Vec<usize>>,
    /// `[portfolio][t]`
    pub col: Vec<Vec<ColVars>>,
    pub unserved: Vec<usize>,
    pub curtail: Vec<usize>,
    pub balance_rows: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DispatchLp {
    pub lp: LinearProgram,
    pub layout: LpLayout,
}

/// Builds the dispatch program for one scenario at the given realized load.
pub fn build_lp(resources: &SystemResources, scenario: &Scenario, load: &[f64]) -> Result<DispatchLp> {
    let prep = Prepared::new(resources, scenario, load)?;
    Ok(build_prepared(&prep))
}

pub(crate) fn build_prepared(prep: &Prepared<'_>) -> DispatchLp {
    let h = prep.step_hours;
    let nk = prep.classes.len();
    let nr = prep.portfolios.len();
    let mut lp = LinearProgram::new();
    let mut lay = LpLayout {
        charge: vec![Vec::with_capacity(prep.steps); nk],
        discharge: vec![Vec::with_capacity(prep.steps); nk],
        soc: vec![Vec::with_capacity(prep.steps); nk],
        col: vec![Vec::with_capacity(prep.steps); nr],
        ..LpLayout::default()
    };
    for t in 0..prep.steps {
        let mut balance: Vec<(usize, f64)> = Vec::with_capacity(2 * nk + 2 * nr + 2);
        for (k, class) in prep.classes.iter().enumerate() {
            let u = &class.unit;
            let ch = lp.add_named_var(format!("ch_{k}_{t}"), 0.0, u.p_charge_max_mw, 0.0);
            let dis = lp.add_named_var(format!("dis_{k}_{t}"), 0.0, u.p_discharge_max_mw, 0.0);
            let e = lp.add_named_var(format!("e_{k}_{}", t + 1), u.e_min_mwh, u.e_max_mwh, 0.0);
            let mut row = vec![(e, 1.0), (ch, -u.eta_charge * h), (dis, h)];
            let rhs = if t == 0 {
                class.initial_mwh
            } else {
                row.push((lay.soc[k][t - 1], -1.0));
                0.0
            };
            lp.add_eq(row, rhs);
            balance.push((dis, 1.0));
            balance.push((ch, -1.0));
            lay.charge[k].push(ch);
            lay.discharge[k].push(dis);
            lay.soc[k].push(e);
        }
        let mut col_draw = 0.0;
        for (r, p) in prep.portfolios.iter().enumerate() {
            let (base, red) = (prep.col_baseline[r][t], prep.col_reduction[r][t]);
            col_draw += base - red;
            let tank = if t == 0 {
                TankLevel::Initial(p.tank_initial_mwh_h2)
            } else {
                TankLevel::Var(lay.col[r][t - 1].tank_next)
            };
            let v = col_constraints(&mut lp, p, t, prep.col_wind[r][t], base, red, tank, h);
            balance.push((v.fc, 1.0));
            balance.push((v.wind_to_grid, 1.0));
            if let Some(u) = v.restored {
                balance.push((u, -1.0));
            }
            lay.col[r].push(v);
        }
        let ue = lp.add_named_var(format!("ue_{t}"), 0.0, f64::INFINITY, h);
        let cur = lp.add_named_var(format!("cur_{t}"), 0.0, f64::INFINITY, 0.0);
        balance.push((ue, 1.0));
        balance.push((cur, -1.0));
        let flex = prep.flex_baseline[t] - prep.flex_reduction[t];
        let rhs = prep.load[t] + flex + col_draw - prep.supply[t];
        lay.balance_rows.push(lp.add_eq(balance, rhs));
        lay.unserved.push(ue);
        lay.curtail.push(cur);
    }
    DispatchLp { lp, layout: lay }
}

/// Optimal dispatch of one scenario.
pub fn dispatch_optimal(
    resources: &SystemResources,
    scenario: &Scenario,
    load: &[f64],
    options: &SolverOptions,
) -> Result<DispatchResult> {
    dispatch_optimal_warm(resources, scenario, load, options, None).map(|(r, _)| r)
}

/// Like [`dispatch_optimal`], starting the simplex from `hint` and
/// returning the final basis for the next solve of a similar program.
pub fn dispatch_optimal_warm(
    resources: &SystemResources,
    scenario: &Scenario,
    load: &[f64],
    options: &SolverOptions,
    hint: Option<&Basis>,
) -> Result<(DispatchResult, Option<Basis>)> {
    let prep = Prepared::new(resources, scenario, load)?;
    let dlp = build_prepared(&prep);
    let sol = solve_with_hint(&dlp.lp, options, hint);
    if !sol.is_optimal() {
        return Err(Error::DispatchFault {
            scenario: scenario.scenario_id,
            message: format!(
                "solver returned {:?} after {} iterations ({} variables, {} rows)",
                sol.status,
                sol.iterations,
                dlp.lp.num_vars(),
                dlp.lp.num_rows()
            ),
        });
    }
    let mut raw = extract(&prep, &dlp.layout, &sol.x, scenario.scenario_id);
    raw.solve = Some(SolveInfo {
        engine: sol.engine,
        iterations: sol.iterations,
        raw_objective_mwh: sol.objective,
    });
    Ok((postprocess_storage(&raw, &prep), sol.basis))
}

fn extract(prep: &Prepared<'_>, lay: &LpLayout, x: &[f64], scenario_id: usize) -> DispatchResult {
    let steps = prep.steps;
    let pick = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&j| x[j]).collect() };
    let storage = prep
        .classes
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut soc = Vec::with_capacity(steps + 1);
            soc.push(c.initial_mwh);
            soc.extend(pick(&lay.soc[k]));
            StorageTrajectory {
                members: c.members.clone(),
                eta_charge: c.unit.eta_charge,
                charge_mw: pick(&lay.charge[k]),
                discharge_mw: pick(&lay.discharge[k]),
                soc_mwh: soc,
            }
        })
        .collect();
    let colocated = prep
        .portfolios
        .iter()
        .enumerate()
        .map(|(r, p)| {
            let mut tank = p.tank_initial_mwh_h2;
            let decisions = (0..steps)
                .map(|t| {
                    let v = &lay.col[r][t];
                    let d = ColDecision {
                        ely_draw_mw: prep.col_baseline[r][t] - prep.col_reduction[r][t]
                            + v.restored.map_or(0.0, |j| x[j]),
                        ely_to_tank_mw: v.to_tank.map_or(0.0, |j| x[j]),
                        fc_out_mw: x[v.fc],
                        tank_mwh_h2: tank,
                        wind_to_grid_mw: x[v.wind_to_grid],
                        wind_spill_mw: x[v.spill],
                    };
                    tank = x[v.tank_next];
                    d
                })
                .collect();
            ColTrajectory {
                id: p.id.clone(),
                decisions,
                tank_final_mwh_h2: tank,
            }
        })
        .collect();
    let unserved = pick(&lay.unserved);
    DispatchResult {
        scenario_id,
        dispatcher: Dispatcher::Optimal,
        step_hours: prep.step_hours,
        load_mw: prep.load.clone(),
        shortfall_mw: prep.shortfall.clone(),
        flex_consumption_mw: (0..steps).map(|t| prep.flex_baseline[t] - prep.flex_reduction[t]).collect(),
        flex_reduction_mw: prep.flex_reduction.clone(),
        storage,
        colocated,
        curtailment_mw: pick(&lay.curtail),
        metrics: Metrics::from_unserved(&unserved, prep.step_hours),
        unserved_mw: unserved,
        solve: None,
    }
}

/// Removes simultaneous charging and discharging by replacing each pair
/// with the net flow that produces the same state-of-charge change. Power
/// freed this way first reduces unserved energy, then becomes curtailment.
/// Solver noise is clipped into bounds.
pub fn postprocess_storage(raw: &DispatchResult, prep: &Prepared<'_>) -> DispatchResult {
    let mut out = raw.clone();
    for (traj, class) in out.storage.iter_mut().zip(&prep.classes) {
        let u = &class.unit;
        let eta = u.eta_charge;
        for t in 0..prep.steps {
            let mut c = clean(traj.charge_mw[t]).min(u.p_charge_max_mw);
            let mut d = clean(traj.discharge_mw[t]).min(u.p_discharge_max_mw);
            if c > 0.0 && d > 0.0 {
                if eta * c >= d {
                    c -= d / eta;
                    d = 0.0;
                } else {
                    d -= eta * c;
                    c = 0.0;
                }
                c = clean(c);
                d = clean(d);
            }
            traj.charge_mw[t] = c;
            traj.discharge_mw[t] = d;
            traj.soc_mwh[t + 1] = traj.soc_mwh[t + 1].clamp(u.e_min_mwh, u.e_max_mwh);
        }
    }
    for (traj, (r, p)) in out.colocated.iter_mut().zip(prep.portfolios.iter().enumerate()) {
        for (t, d) in traj.decisions.iter_mut().enumerate() {
            let wind = prep.col_wind[r][t].max(0.0);
            d.fc_out_mw = clean(d.fc_out_mw).min(p.fc_max_mw);
            d.wind_to_grid_mw = clean(d.wind_to_grid_mw).min(wind);
            d.wind_spill_mw = wind - d.wind_to_grid_mw;
            let base = prep.col_baseline[r][t];
            d.ely_draw_mw = d.ely_draw_mw.clamp(base - prep.col_reduction[r][t], base);
            d.ely_to_tank_mw = clean(d.ely_to_tank_mw).min(recharge_headroom(p, d.ely_draw_mw));
            d.tank_mwh_h2 = d.tank_mwh_h2.clamp(0.0, p.tank_max_mwh_h2);
        }
        traj.tank_final_mwh_h2 = traj.tank_final_mwh_h2.clamp(0.0, p.tank_max_mwh_h2);
    }
    out.settle_balance(prep);
    out
}

fn clean(v: f64) -> f64 {
    if v > 1e-12 {
        v
    } else {
        0.0
    }
}
