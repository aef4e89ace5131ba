use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use adequacy::scenario::read_cache;
use adequacy::synthetic::{portfolio_resource, small_system, synthetic_traces, write_trace_csv};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adequacy"))
}

fn base_config(dir: &Path) -> Value {
    let traces = dir.join("traces.csv");
    write_trace_csv(fs::File::create(&traces).unwrap(), &synthetic_traces(14, 2), 1.0).unwrap();
    let (system, load) = small_system(48);
    json!({
        "system": system,
        "load": load,
        "scenarios": { "count": 6, "seed": 9 },
        "study": {
            "addition": [portfolio_resource()],
            "delta_lo_mw": -2.0,
            "delta_hi_mw": 30.0,
            "delta_resolution_mw": 0.05,
            "target_metric": 1.0,
            "scaling_factors": [1.0, 2.0]
        },
        "paths": { "traces": [traces], "output_dir": dir.join("out") }
    })
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let path = dir.join("study.json");
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fingerprint(stdout: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("fingerprint "))
        .expect("fingerprint line")
        .to_string()
}

/// Data rows of an output CSV, without the provenance comment and header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# adequacy "));
    lines.skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn fixed_seed_gives_the_same_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base_config(dir.path()));
    let a = fingerprint(&ok(&run(&["gen-scenarios"], &cfg)));
    let b = fingerprint(&ok(&run(&["gen-scenarios"], &cfg)));
    assert_eq!(a, b);
    let c = fingerprint(&ok(&run(&["gen-scenarios", "--seed", "10"], &cfg)));
    assert_ne!(a, c);
}

#[test]
fn scenario_count_is_validated_and_honored() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["scenarios"]["count"] = json!(0);
    let path = write_config(dir.path(), &cfg);
    assert_eq!(run(&["gen-scenarios"], &path).status.code(), Some(1));

    cfg["scenarios"]["count"] = json!(10);
    let path = write_config(dir.path(), &cfg);
    ok(&run(&["gen-scenarios"], &path));
    let cache = read_cache(&dir.path().join("out/scenarios.bin")).unwrap();
    assert_eq!(cache.set.len(), 10);
}

#[test]
fn abundant_system_has_no_unserved_energy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["load"]["peak_mw"] = json!(5.0);
    let path = write_config(dir.path(), &cfg);
    ok(&run(&["gen-scenarios"], &path));
    for d in ["optimal", "heuristic"] {
        ok(&run(&["assess", "--dispatcher", d], &path));
        let report: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("out/assess_{d}.json"))).unwrap()).unwrap();
        assert_eq!(report["eue_mwh"], json!(0.0));
        assert_eq!(rows(&dir.path().join(format!("out/assess_{d}_scenarios.csv"))).len(), 6);
    }
}

#[test]
fn assessment_is_ordered_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["load"]["peak_mw"] = json!(90.0);
    let path = write_config(dir.path(), &cfg);
    ok(&run(&["gen-scenarios"], &path));
    let eue = |d: &str| -> f64 {
        ok(&run(&["assess", "--dispatcher", d], &path));
        let text = fs::read_to_string(dir.path().join(format!("out/assess_{d}.json"))).unwrap();
        serde_json::from_str::<Value>(&text).unwrap()["eue_mwh"].as_f64().unwrap()
    };
    let (o, h) = (eue("optimal"), eue("heuristic"));
    assert!(o > 0.0);
    assert!(o <= h + 1e-6, "optimal {o} heuristic {h}");
    let first = fs::read(dir.path().join("out/assess_optimal.json")).unwrap();
    let first_csv = fs::read(dir.path().join("out/assess_optimal_scenarios.csv")).unwrap();
    eue("optimal");
    assert_eq!(first, fs::read(dir.path().join("out/assess_optimal.json")).unwrap());
    assert_eq!(first_csv, fs::read(dir.path().join("out/assess_optimal_scenarios.csv")).unwrap());
    let report: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["provenance"]["scenario_count"], json!(6));
    assert!(report["config"]["system"].is_object());
}

#[test]
fn compare_rows_match_standalone_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &base_config(dir.path()));
    ok(&run(&["gen-scenarios"], &path));
    ok(&run(&["compare", "--emit-plot-data"], &path));
    let table = rows(&dir.path().join("out/compare.csv"));
    assert_eq!(table.len(), 2);
    assert!(table.iter().all(|r| r.len() == 3));
    for r in &table {
        let (h, o): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(o >= h - 0.05, "{r:?}");
    }
    for (d, col) in [("heuristic", 1), ("optimal", 2)] {
        ok(&run(&["elcc", "--dispatcher", d], &path));
        let single = rows(&dir.path().join(format!("out/elcc_{d}.csv")));
        assert_eq!(single[0][1], table[0][col], "{d}");
    }
    let plot = rows(&dir.path().join("out/compare_plot.csv"));
    assert_eq!(plot.len(), 4);
}

#[test]
fn stale_cache_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    let path = write_config(dir.path(), &cfg);
    ok(&run(&["gen-scenarios"], &path));
    cfg["load"]["peak_mw"] = json!(70.0);
    let path = write_config(dir.path(), &cfg);
    let out = run(&["assess"], &path);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["unexpected"] = json!(1);
    let path = write_config(dir.path(), &cfg);
    assert_eq!(run(&["gen-scenarios"], &path).status.code(), Some(1));

    let cfg = base_config(dir.path());
    let path = write_config(dir.path(), &cfg);
    let missing = dir.path().join("nowhere.bin");
    let out = bin()
        .args(["assess", "--config"])
        .arg(&path)
        .arg("--scenarios")
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let mut cfg = base_config(dir.path());
    cfg["paths"]["traces"] = json!([dir.path().join("absent.csv")]);
    let path = write_config(dir.path(), &cfg);
    assert_eq!(run(&["gen-scenarios"], &path).status.code(), Some(3));

    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn bracket_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg["study"]["delta_lo_mw"] = json!(20.0);
    let path = write_config(dir.path(), &cfg);
    ok(&run(&["gen-scenarios"], &path));
    assert_eq!(run(&["elcc"], &path).status.code(), Some(2));
}

#[test]
fn lp_export_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &base_config(dir.path()));
    ok(&run(&["gen-scenarios"], &path));
    let lp = dir.path().join("first.lp");
    let out = bin()
        .args(["assess", "--config"])
        .arg(&path)
        .arg("--export-lp")
        .arg(&lp)
        .output()
        .unwrap();
    ok(&out);
    let text = fs::read_to_string(lp).unwrap();
    assert!(text.starts_with("Minimize") || text.contains("Subject To"), "{}", &text[..text.len().min(200)]);
}
