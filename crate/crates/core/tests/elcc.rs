use std::path::Path;

use adequacy::dispatch::{Dispatcher, PriorityConfig};
use adequacy::elcc::{elcc_benchmark, find_delta, Benchmark, ElccStudy, Evaluator, Metric, StudyInputs};
use adequacy::lp::SolverOptions;
use adequacy::model::{Horizon, LoadModel, Resource, SystemResources, UnlimitedUnit};
use adequacy::oracle::{load_fig2_fixture, Fig2Case};
use adequacy::scenario::{generate, ScenarioOptions, ScenarioSet, TraceStore};
use adequacy::Error;

const RES: f64 = 0.01;

struct Flat {
    res: SystemResources,
    load: LoadModel,
    traces: TraceStore,
    set: ScenarioSet,
}

/// Four steps of 10 MW load against 8 MW of perfect supply.
fn flat() -> Flat {
    let mut traces = TraceStore::for_step_hours(1.0);
    traces.insert_constant("flat", 1.0, 4).unwrap();
    let mut res = SystemResources::empty(Horizon::hourly(4));
    res.unlimited.push(UnlimitedUnit::perfect("firm", 8.0));
    let load = LoadModel {
        peak_mw: 10.0,
        load_trace_id: "flat".into(),
    };
    let set = generate(&res, &load, &traces, 1, 0, &ScenarioOptions::fixed_profiles()).unwrap();
    Flat { res, load, traces, set }
}

impl Flat {
    fn inputs(&self) -> StudyInputs<'_> {
        StudyInputs {
            resources: &self.res,
            load: &self.load,
            traces: &self.traces,
            scenarios: &self.set,
        }
    }
}

fn run(f: &Flat, study: &ElccStudy) -> adequacy::Result<adequacy::elcc::ElccResult> {
    let solver = SolverOptions::default();
    let rules = PriorityConfig::default();
    let eval = Evaluator {
        dispatcher: Dispatcher::Optimal,
        metric: Metric::Eue,
        solver: &solver,
        rules: &rules,
    };
    elcc_benchmark(f.inputs(), study, &eval)
}

fn perfect(q: f64) -> Vec<Resource> {
    vec![Resource::Unlimited(UnlimitedUnit::perfect("new", q))]
}

fn study(addition: Vec<Resource>, lo: f64, hi: f64) -> ElccStudy {
    let mut s = ElccStudy::load_increase(addition, lo, hi);
    s.delta_resolution_mw = RES;
    s
}

#[test]
fn zero_capacity_addition_earns_nothing() {
    let f = flat();
    let r = run(&f, &study(perfect(0.0), -1.0, 3.0)).unwrap();
    assert!(r.delta_mw.abs() <= RES, "{}", r.delta_mw);
    assert_eq!(r.baseline, 8.0);
}

#[test]
fn perfect_megawatt_on_flat_system_earns_one() {
    let f = flat();
    let r = run(&f, &study(perfect(1.0), 0.0, 3.0)).unwrap();
    assert!((r.delta_mw - 1.0).abs() <= RES, "{}", r.delta_mw);
    assert!(r.iterations <= r.iteration_bound);
    assert!(r.trace.iter().all(|p| (0.0..=3.0).contains(&p.x)));
    assert_eq!(r.scenario_fingerprint, f.set.fingerprint());
}

#[test]
fn perfect_generator_mode_is_a_fixed_point() {
    let f = flat();
    let mut s = study(perfect(1.5), 0.0, 4.0);
    s.benchmark = Benchmark::PerfectGenerator;
    let r = run(&f, &s).unwrap();
    assert!((r.delta_mw - 1.5).abs() <= RES, "{}", r.delta_mw);
}

#[test]
fn reference_unit_without_outages_matches_perfect_generator() {
    let f = flat();
    let mut s = study(perfect(1.5), 0.0, 4.0);
    s.benchmark = Benchmark::PerfectGenerator;
    let a = run(&f, &s).unwrap();
    s.benchmark = Benchmark::ReferenceUnit {
        efor: 0.0,
        mean_repair_hours: 24.0,
    };
    let b = run(&f, &s).unwrap();
    assert_eq!(a.delta_mw, b.delta_mw);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn bracket_violation_is_reported() {
    let f = flat();
    // Even 0.5 MW of extra load leaves EUE above baseline after adding 0.1 MW.
    let err = run(&f, &study(perfect(0.1), 0.5, 3.0)).unwrap_err();
    assert!(matches!(err, Error::Bracket { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn mean_over_two_scenarios() {
    // Two days: one with a 4 MW shortfall hour, one with 6 MW.
    let mut load = vec![0.5; 48];
    load[0] = 14.0 / 16.0;
    load[24] = 1.0;
    let mut traces = TraceStore::for_step_hours(1.0);
    traces.insert("load", load).unwrap();
    let mut res = SystemResources::empty(Horizon::hourly(24));
    res.unlimited.push(UnlimitedUnit::perfect("firm", 10.0));
    let lm = LoadModel {
        peak_mw: 16.0,
        load_trace_id: "load".into(),
    };
    let solver = SolverOptions::default();
    let rules = PriorityConfig::default();
    let eval = Evaluator {
        dispatcher: Dispatcher::Optimal,
        metric: Metric::Eue,
        solver: &solver,
        rules: &rules,
    };
    let (set, e) = (0..64)
        .map(|seed| {
            let set = generate(&res, &lm, &traces, 2, seed, &ScenarioOptions::default()).unwrap();
            let e = eval.expected_reliability(&res, &lm, &set, None).unwrap();
            (set, e)
        })
        .find(|(_, e)| {
            let mut v = e.per_scenario.clone();
            v.sort_by(f64::total_cmp);
            (v[0] - 4.0).abs() < 1e-9 && (v[1] - 6.0).abs() < 1e-9
        })
        .expect("a seed that draws both days");
    assert_eq!(set.len(), 2);
    assert!((e.mean - 5.0).abs() < 1e-9);
}

fn fixture() -> (Fig2Case, Fig2Case) {
    load_fig2_fixture(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fig2_v1.csv")).unwrap()
}

#[test]
fn toy_fixture_credits_through_the_pipeline() {
    let opts = SolverOptions::default();
    let (top, bottom) = fixture();
    let colocated = || vec![Fig2Case::wind_resource(), Fig2Case::storage_resource()];
    let mut sums = Vec::new();
    for (case, wind_expected) in [(&top, 2.0), (&bottom, 0.0)] {
        assert_eq!(case.baseline_ue(), 4.0);
        let wind = case.pipeline_elcc(vec![Fig2Case::wind_resource()], RES, &opts).unwrap().delta_mw;
        let storage = case.pipeline_elcc(vec![Fig2Case::storage_resource()], RES, &opts).unwrap().delta_mw;
        let both = case.pipeline_elcc(colocated(), RES, &opts).unwrap().delta_mw;
        assert!((wind - wind_expected).abs() <= RES, "wind {wind}");
        assert!((storage - 1.0).abs() <= RES, "storage {storage}");
        assert!((both - 2.5).abs() <= RES, "colocated {both}");
        sums.push((both, wind + storage));
    }
    // Colocation is worth less than the parts on top and more on bottom.
    assert!(sums[0].0 < sums[0].1 - 2.0 * RES);
    assert!(sums[1].0 > sums[1].1 + 2.0 * RES);
}

#[test]
fn toy_colocated_load_increase_keeps_baseline_ue() {
    let opts = SolverOptions::default();
    let (top, _) = fixture();
    let (res, load, traces) = top.study_inputs().unwrap();
    let set = generate(&res, &load, &traces, 1, 0, &ScenarioOptions::fixed_profiles()).unwrap();
    let aug = res.augment(&[Fig2Case::wind_resource(), Fig2Case::storage_resource()]).unwrap();
    let aug_set = set
        .extend_with(&[Fig2Case::wind_resource(), Fig2Case::storage_resource()], &traces)
        .unwrap();
    let shifted = load.scale(2.5).unwrap();
    let r = adequacy::dispatch::dispatch_optimal(&aug, aug_set.get(0), &aug_set.load_for(0, &shifted), &opts).unwrap();
    assert!((r.metrics.eue_mwh - 4.0).abs() < 1e-6, "{}", r.metrics.eue_mwh);
}

#[test]
fn heuristic_credit_never_exceeds_optimal_on_toys() {
    let (top, bottom) = fixture();
    let solver = SolverOptions::default();
    let rules = PriorityConfig::default();
    for case in [&top, &bottom] {
        let (res, load, traces) = case.study_inputs().unwrap();
        let set = generate(&res, &load, &traces, 1, 0, &ScenarioOptions::fixed_profiles()).unwrap();
        let inputs = StudyInputs {
            resources: &res,
            load: &load,
            traces: &traces,
            scenarios: &set,
        };
        let s = study(vec![Fig2Case::wind_resource(), Fig2Case::storage_resource()], 0.0, 8.0);
        let credit = |dispatcher| {
            let eval = Evaluator {
                dispatcher,
                metric: Metric::Eue,
                solver: &solver,
                rules: &rules,
            };
            find_delta(inputs, &s, &eval).unwrap().delta_mw
        };
        let (h, o) = (credit(Dispatcher::Heuristic), credit(Dispatcher::Optimal));
        assert!(o >= h - RES, "optimal {o} heuristic {h}");
    }
}
