//! Batch studies built from the pieces: fleet assessment over a scenario
//! set and the heuristic/optimal accreditation comparison across capacity
//! scaling factors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::{dispatch, Dispatcher, Metrics, PriorityConfig};
use crate::elcc::{elcc_benchmark, ElccResult, ElccStudy, Evaluator, Metric, StudyInputs};
use crate::error::Result;
use crate::lp::SolverOptions;
use crate::model::{LoadModel, Resource, SystemResources};
use crate::scenario::{ScenarioSet, TraceStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario_id: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub dispatcher: Dispatcher,
    pub eue_mwh: f64,
    pub lole_steps: f64,
    pub per_scenario: Vec<ScenarioMetrics>,
}

/// Dispatches every scenario and averages EUE and LOLE.
pub fn assess(
    resources: &SystemResources,
    load: &LoadModel,
    set: &ScenarioSet,
    dispatcher: Dispatcher,
    solver: &SolverOptions,
    rules: &PriorityConfig,
) -> Result<Assessment> {
    set.check_consistent(resources)?;
    let per_scenario = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let r = dispatch(dispatcher, resources, set.get(i), &set.load_for(i, load), solver, rules)?;
            Ok(ScenarioMetrics {
                scenario_id: r.scenario_id,
                metrics: r.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_scenario.len().max(1) as f64;
    Ok(Assessment {
        dispatcher,
        eue_mwh: per_scenario.iter().map(|s| s.metrics.eue_mwh).sum::<f64>() / n,
        lole_steps: per_scenario.iter().map(|s| s.metrics.lole_steps as f64).sum::<f64>() / n,
        per_scenario,
    })
}

/// One row of a comparison: the addition scaled by `scaling_factor`,
/// accredited under both dispatchers on the same scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub scaling_factor: f64,
    pub installed_mw: f64,
    pub heuristic: ElccResult,
    pub optimal: ElccResult,
    /// Optimal credit at least the heuristic one, up to the resolution.
    pub dominance_holds: bool,
}

impl CompareRow {
    pub fn fraction(&self, dispatcher: Dispatcher) -> f64 {
        let d = match dispatcher {
            Dispatcher::Heuristic => self.heuristic.delta_mw,
            Dispatcher::Optimal => self.optimal.delta_mw,
        };
        if self.installed_mw > 0.0 {
            d / self.installed_mw
        } else {
            0.0
        }
    }
}

/// Settings shared by every row of a comparison.
pub struct CompareSpec<'a> {
    pub addition: &'a [Resource],
    pub factors: &'a [f64],
    pub metric: Metric,
    pub solver: &'a SolverOptions,
    pub rules: &'a PriorityConfig,
    /// Builds the accreditation request for a scaled addition.
    pub study: &'a (dyn Fn(Vec<Resource>) -> ElccStudy + Sync),
}

/// Accredits the scaled addition with both dispatchers for every factor.
pub fn compare(
    resources: &SystemResources,
    load: &LoadModel,
    traces: &TraceStore,
    set: &ScenarioSet,
    spec: &CompareSpec<'_>,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::with_capacity(spec.factors.len());
    for &factor in spec.factors {
        let mut local = traces.clone();
        let scaled = spec
            .addition
            .iter()
            .map(|r| r.scaled(factor, &mut local))
            .collect::<Result<Vec<_>>>()?;
        let installed = scaled.iter().map(Resource::nameplate_mw).sum();
        let study = (spec.study)(scaled);
        let inputs = StudyInputs {
            resources,
            load,
            traces: &local,
            scenarios: set,
        };
        let run = |dispatcher| {
            let eval = Evaluator {
                dispatcher,
                metric: spec.metric,
                solver: spec.solver,
                rules: spec.rules,
            };
            elcc_benchmark(inputs, &study, &eval)
        };
        let heuristic = run(Dispatcher::Heuristic)?;
        let optimal = run(Dispatcher::Optimal)?;
        let dominance_holds = optimal.delta_mw >= heuristic.delta_mw - study.delta_resolution_mw;
        if !dominance_holds {
            log::warn!(
                "factor {factor}: optimal credit {:.4} MW below heuristic credit {:.4} MW",
                optimal.delta_mw,
                heuristic.delta_mw
            );
        }
        rows.push(CompareRow {
            scaling_factor: factor,
            installed_mw: installed,
            heuristic,
            optimal,
            dominance_holds,
        });
    }
    Ok(rows)
}
