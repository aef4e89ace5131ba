//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any hard criterion fails. A8 is a soft performance target
//! and is reported without affecting the exit status.
//!
//! Set `ADEQUACY_FULL_A8=1` to dispatch all 500 full-year scenarios instead
//! of timing a sample.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adequacy::dispatch::{dispatch_optimal, flex_consumption, Dispatcher, PriorityConfig};
use adequacy::elcc::{ElccResult, ElccStudy, Evaluator, Metric};
use adequacy::lp::SolverOptions;
use adequacy::model::Resource;
use adequacy::oracle::{
    brute_force_eue, brute_force_flex, load_fig2_fixture, random_instance, reconstruct_fig2, Fig2Case, ToyInstance,
    ToyStorage,
};
use adequacy::scenario::{generate, ScenarioOptions};
use adequacy::study::{compare, CompareRow, CompareSpec};
use adequacy::synthetic::{
    distinct_storage_classes, portfolio_resource, small_portfolio, small_system, synthetic_traces,
};

const A3_SCENARIOS: usize = 500;
const A3_SEED: u64 = 2024;
const A3_FACTORS: [f64; 6] = [1.0, 1.2, 1.4, 1.6, 1.8, 2.0];
const A3_RESOLUTION: f64 = 0.001;
const A4_BAND: f64 = 0.005;

struct Outcome {
    id: &'static str,
    pass: bool,
    soft: bool,
    detail: String,
}

fn report(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        pass,
        soft: false,
        detail,
    }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn a1() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let b = brute_force_eue(&inst).expect("brute force");
        let l = inst.lp_eue(&opts()).expect("lp");
        let slack = inst.steps() as f64 * inst.resolution_mw + 1e-6;
        worst = worst.max((b - l).abs());
        if l > b + 1e-6 || b - l > slack {
            bad.push(seed);
        }
    }
    let el = t0.elapsed();
    report(
        "A1",
        bad.is_empty() && el < Duration::from_secs(120),
        format!("200 instances, worst |brute - lp| {worst:.2e} MWh, failing seeds {bad:?}, {}", secs(el)),
    )
}

struct Fig2Run {
    case: &'static str,
    wind: ElccResult,
    storage: ElccResult,
    colocated: ElccResult,
}

fn a2(fixture: &Path) -> (Outcome, Vec<Fig2Run>) {
    let t0 = Instant::now();
    let (top, bottom) = load_fig2_fixture(fixture).expect("fixture");
    let found = reconstruct_fig2(&opts()).expect("reconstruction");
    let search = t0.elapsed();
    let mut ok = found == (top.clone(), bottom.clone());
    let mut detail = vec![format!("search reproduces fixture: {ok} ({})", secs(search))];
    let t1 = Instant::now();
    let mut runs = Vec::new();
    for (name, case, wind_expected) in [("top", &top, 2.0), ("bottom", &bottom, 0.0)] {
        let run = |add: Vec<Resource>| case.pipeline_elcc(add, 0.01, &opts()).expect("pipeline");
        let r = Fig2Run {
            case: name,
            wind: run(vec![Fig2Case::wind_resource()]),
            storage: run(vec![Fig2Case::storage_resource()]),
            colocated: run(vec![Fig2Case::wind_resource(), Fig2Case::storage_resource()]),
        };
        for (label, got, want) in [
            ("wind", r.wind.delta_mw, wind_expected),
            ("storage", r.storage.delta_mw, 1.0),
            ("colocated", r.colocated.delta_mw, 2.5),
        ] {
            let hit = (got - want).abs() <= 0.01 + 1e-9;
            ok &= hit;
            detail.push(format!("{name} {label} {got:.4} (want {want})"));
        }
        runs.push(r);
    }
    let pipeline = t1.elapsed();
    ok &= pipeline < Duration::from_secs(60);
    detail.push(format!("pipeline {}", secs(pipeline)));
    (report("A2", ok, detail.join(", ")), runs)
}

fn a3_rows() -> (Vec<CompareRow>, Duration) {
    let t0 = Instant::now();
    let traces = synthetic_traces(56, 11);
    let (res, load) = small_system(168);
    let set = generate(&res, &load, &traces, A3_SCENARIOS, A3_SEED, &ScenarioOptions::default()).expect("scenarios");
    let addition = [portfolio_resource()];
    let make = |a: Vec<Resource>| {
        let mut s = ElccStudy::load_increase(a, -2.0, 30.0);
        s.target_metric = Some(2.0);
        s.tolerance = 1e-3;
        s.delta_resolution_mw = A3_RESOLUTION;
        s.monotonicity_grid = Some(10);
        s
    };
    let solver = opts();
    let rules = PriorityConfig::default();
    let spec = CompareSpec {
        addition: &addition,
        factors: &A3_FACTORS,
        metric: Metric::Eue,
        solver: &solver,
        rules: &rules,
        study: &make,
    };
    let rows = compare(&res, &load, &traces, &set, &spec).expect("compare");
    (rows, t0.elapsed())
}

fn a3(rows: &[CompareRow], el: Duration) -> Outcome {
    let dominated: Vec<String> = rows
        .iter()
        .filter(|r| r.optimal.delta_mw < r.heuristic.delta_mw - A3_RESOLUTION)
        .map(|r| r.scaling_factor.to_string())
        .collect();
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}: h {:.3} o {:.3}", r.scaling_factor, r.heuristic.delta_mw, r.optimal.delta_mw))
        .collect();
    report(
        "A3",
        rows.len() == A3_FACTORS.len() && dominated.is_empty() && el < Duration::from_secs(1800),
        format!(
            "{} rows on {A3_SCENARIOS} scenarios [{}], violations {dominated:?}, {}",
            rows.len(),
            table.join("; "),
            secs(el)
        ),
    )
}

fn a4(rows: &[CompareRow]) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [Dispatcher::Heuristic, Dispatcher::Optimal] {
        let f: Vec<f64> = rows.iter().map(|r| r.fraction(d)).collect();
        let worst = f.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
        ok &= worst <= A4_BAND;
        let shown: Vec<String> = f.iter().map(|x| format!("{:.2}%", 100.0 * x)).collect();
        detail.push(format!("{d} [{}] largest rise {:.2} pp", shown.join(", "), 100.0 * worst));
    }
    report("A4", ok, format!("{} (band {:.1} pp)", detail.join("; "), 100.0 * A4_BAND))
}

fn random_storage_instance(rng: &mut ChaCha8Rng) -> ToyInstance {
    let steps = rng.gen_range(1..=6);
    let units = rng.gen_range(1..=2);
    ToyInstance {
        deficit_mw: (0..steps).map(|_| rng.gen_range(-20..=20) as f64 / 10.0).collect(),
        wind_mw: None,
        storage: (0..units)
            .map(|_| {
                let e_max = rng.gen_range(2..=15) as f64 / 10.0;
                ToyStorage {
                    p_charge_mw: rng.gen_range(1..=8) as f64 / 10.0,
                    p_discharge_mw: rng.gen_range(1..=8) as f64 / 10.0,
                    e_max_mwh: e_max,
                    eta_charge: [0.8, 0.9, 1.0][rng.gen_range(0..3)],
                    initial_mwh: e_max * rng.gen_range(0..=100) as f64 / 100.0,
                }
            })
            .collect(),
        flex: None,
        resolution_mw: 0.1,
    }
}

fn a5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut overlaps = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (res, sc, load) = random_storage_instance(&mut rng).to_system();
        let r = dispatch_optimal(&res, &sc, &load, &opts()).expect("dispatch");
        for s in &r.storage {
            overlaps += (0..r.steps()).filter(|&t| s.charge_mw[t] != 0.0 && s.discharge_mw[t] != 0.0).count();
        }
        let raw = r.solve.expect("lp info").raw_objective_mwh;
        worst = worst.max((r.metrics.eue_mwh - raw).abs());
    }
    report(
        "A5",
        overlaps == 0 && worst <= 1e-6,
        format!("200 instances, simultaneous charge/discharge steps {overlaps}, worst EUE change {worst:.2e} MWh"),
    )
}

fn a6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let res = 0.1;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..100 {
        let baselines: Vec<f64> = (0..2).map(|_| rng.gen_range(0..=30) as f64 / 10.0).collect();
        let caps: Vec<f64> = baselines.iter().map(|b| b * rng.gen_range(0..=100) as f64 / 100.0).collect();
        let s = rng.gen_range(-30..=60) as f64 / 10.0;
        let brute = brute_force_flex(&baselines, &caps, s, res).expect("enumeration");
        let closed = flex_consumption(baselines.iter().sum(), caps.iter().sum(), s);
        worst = worst.max((brute - closed).abs());
        ok &= closed <= brute + 1e-6 && brute - closed <= 2.0 * res + 1e-6;
    }
    report("A6", ok, format!("100 two-unit instances, worst |closed - enumerated| {worst:.2e} MW"))
}

fn cli_run(bin: &Path, sample: &Path, out: &Path) -> Vec<(String, Vec<u8>)> {
    let text = fs::read_to_string(sample.join("study.json")).expect("sample config");
    let mut cfg: serde_json::Value = serde_json::from_str(&text).expect("json");
    cfg["paths"]["traces"] = serde_json::json!([sample.join("traces.csv")]);
    cfg["paths"]["output_dir"] = serde_json::json!(out);
    fs::create_dir_all(out).expect("out dir");
    let path = out.join("study.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).expect("json")).expect("write config");
    for cmd in ["gen-scenarios", "assess", "elcc", "compare"] {
        let st = Command::new(bin)
            .args([cmd, "--config"])
            .arg(&path)
            .arg("--emit-plot-data")
            .output()
            .expect("run cli");
        assert!(st.status.success(), "{cmd}: {}", String::from_utf8_lossy(&st.stderr));
    }
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out)
        .expect("list")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != "study.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("read")))
        .collect();
    files.sort();
    files
}

fn a7(fig2: &[Fig2Run], rows: &[CompareRow], sample: &Path) -> Outcome {
    let mut studies: Vec<(String, &ElccResult)> = Vec::new();
    for r in fig2 {
        for (label, e) in [("wind", &r.wind), ("storage", &r.storage), ("colocated", &r.colocated)] {
            studies.push((format!("fig2 {} {label}", r.case), e));
        }
    }
    for r in rows {
        studies.push((format!("factor {} heuristic", r.scaling_factor), &r.heuristic));
        studies.push((format!("factor {} optimal", r.scaling_factor), &r.optimal));
    }
    let mut over = Vec::new();
    let mut non_monotone = Vec::new();
    for (name, e) in &studies {
        let within = e.iterations <= e.iteration_bound
            && e.baseline_shift_iterations.is_none_or(|k| k <= e.iteration_bound);
        if !within {
            over.push(name.clone());
        }
        let monotone = e.grid.len() == 10 && e.grid.windows(2).all(|w| w[1].value >= w[0].value - 1e-5);
        if !monotone {
            non_monotone.push(name.clone());
        }
    }
    let dir = tempfile::tempdir().expect("temp dir");
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_adequacy"));
    let first = cli_run(&bin, sample, dir.path());
    let second = cli_run(&bin, sample, dir.path());
    let identical = first == second;
    report(
        "A7",
        over.is_empty() && non_monotone.is_empty() && identical,
        format!(
            "{} studies, over iteration bound {over:?}, non-monotone grids {non_monotone:?}, \
             {} CLI outputs byte-identical across two runs: {identical}",
            studies.len(),
            first.len()
        ),
    )
}

fn a8() -> Outcome {
    let traces = synthetic_traces(365, 5);
    let (mut res, mut load) = small_system(8760);
    load.peak_mw = 75.0;
    res.storage = distinct_storage_classes();
    let res = res.augment(&[Resource::Colocated(small_portfolio())]).expect("augment");
    let full = std::env::var("ADEQUACY_FULL_A8").is_ok_and(|v| v == "1");
    let n = if full { 500 } else { 5 };
    let set = generate(&res, &load, &traces, n, 1, &ScenarioOptions::default()).expect("scenarios");
    let workers = rayon::current_num_threads();
    let mut slowest = Duration::ZERO;
    let mut total = Duration::ZERO;
    for i in 0..n.min(5) {
        let t0 = Instant::now();
        dispatch_optimal(&res, set.get(i), &set.load_for(i, &load), &opts()).expect("dispatch");
        let el = t0.elapsed();
        slowest = slowest.max(el);
        total += el;
    }
    let single_ok = slowest < Duration::from_secs(5);
    let (batch, label) = if full {
        let solver = opts();
        let rules = PriorityConfig::default();
        let eval = Evaluator {
            dispatcher: Dispatcher::Optimal,
            metric: Metric::Eue,
            solver: &solver,
            rules: &rules,
        };
        let t0 = Instant::now();
        eval.expected_reliability(&res, &load, &set, None).expect("batch");
        (t0.elapsed(), format!("measured on {workers} worker(s)"))
    } else {
        let mean = total.as_secs_f64() / n.min(5) as f64;
        (
            Duration::from_secs_f64(mean * 500.0 / 8.0),
            format!("projected for 8 workers from a {}-scenario sample on {workers} worker(s)", n.min(5)),
        )
    };
    Outcome {
        id: "A8",
        pass: single_ok && batch < Duration::from_secs(900),
        soft: true,
        detail: format!(
            "T=8760, 5 storage classes + 1 portfolio: slowest dispatch {}, 500 scenarios {} ({label})",
            secs(slowest),
            secs(batch)
        ),
    }
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let mut out = vec![a1()];
    let (o2, fig2) = a2(&root.join("tests/fixtures/fig2_v1.csv"));
    out.push(o2);
    let (rows, el) = a3_rows();
    out.push(a3(&rows, el));
    out.push(a4(&rows));
    out.push(a5());
    out.push(a6());
    out.push(a7(&fig2, &rows, &root.join("sample")));
    out.push(a8());
    let mut failed = 0;
    for o in &out {
        let tag = match (o.pass, o.soft) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "MISS",
        };
        println!("{} {tag} {}", o.id, o.detail);
        if !o.pass && !o.soft {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
