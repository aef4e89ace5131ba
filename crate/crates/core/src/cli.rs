//! Command line front end: `gen-scenarios`, `assess`, `elcc`, `compare`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{Provenance, StudyConfig};
use crate::dispatch::{build_lp, Dispatcher};
use crate::elcc::{elcc_benchmark, ElccResult, Evaluator, StudyInputs};
use crate::error::{Error, Result};
use crate::lp::write_lp_format;
use crate::model::Resource;
use crate::scenario::{generate, read_cache, write_cache, ScenarioCache, ScenarioSet, TraceStore};
use crate::study::{assess, compare, Assessment, CompareRow, CompareSpec};

#[derive(Debug, Parser)]
#[command(name = "adequacy", version, about = "Resource adequacy and ELCC studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the scenario set and write the cache.
    GenScenarios(Common),
    /// Reliability of the configured fleet.
    Assess(Common),
    /// Accredit the configured addition.
    Elcc(Common),
    /// Heuristic vs optimal accreditation across scaling factors.
    Compare(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Scenario cache to read or write instead of the configured one.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long, default_value = "optimal")]
    pub dispatcher: Dispatcher,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write long-format CSV for plotting.
    #[arg(long)]
    pub emit_plot_data: bool,
    /// Write the dispatch LP of the first scenario in CPLEX LP format.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
}

struct Context {
    cfg: StudyConfig,
    traces: TraceStore,
    args: CommonArgs,
}

struct CommonArgs {
    cache: PathBuf,
    dispatcher: Dispatcher,
    emit_plot_data: bool,
    export_lp: Option<PathBuf>,
}

fn setup(c: &Common) -> Result<Context> {
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Error::Invalid("--threads must be >= 1".into()));
        }
        // Fails only if a pool already exists, e.g. when run twice in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = StudyConfig::from_path(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.scenarios.seed = seed;
    }
    let traces = cfg.load_traces()?;
    cfg.validate(&traces)?;
    fs::create_dir_all(&cfg.paths.output_dir)?;
    let cache = c.scenarios.clone().unwrap_or_else(|| cfg.cache_path());
    Ok(Context {
        cfg,
        traces,
        args: CommonArgs {
            cache,
            dispatcher: c.dispatcher,
            emit_plot_data: c.emit_plot_data,
            export_lp: c.export_lp.clone(),
        },
    })
}

impl Context {
    fn scenario_set(&self) -> Result<ScenarioSet> {
        let cache = read_cache(&self.args.cache)?;
        let expected = self.cfg.scenario_input_hash(&self.traces);
        if cache.input_hash != expected {
            return Err(Error::ScenarioMismatch {
                expected,
                found: cache.input_hash,
            });
        }
        cache.set.check_consistent(&self.cfg.system)?;
        Ok(cache.set)
    }

    fn provenance(&self, set: &ScenarioSet) -> Provenance {
        Provenance::new(&self.cfg, set.root_fingerprint(), set.seed(), set.len())
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.paths.output_dir.join(name)
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    provenance: &'a Provenance,
    config: &'a StudyConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, prov: &Provenance, cfg: &StudyConfig, body: T) -> Result<()> {
    let report = Report {
        provenance: prov,
        config: cfg,
        body,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_writer(path: &Path, prov: &Provenance) -> Result<csv::Writer<fs::File>> {
    let mut f = fs::File::create(path)?;
    f.write_all(prov.csv_comment().as_bytes())?;
    Ok(csv::Writer::from_writer(f))
}

fn gen_scenarios(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let set = generate(
        &cfg.system,
        &cfg.load,
        &ctx.traces,
        cfg.scenarios.count,
        cfg.scenarios.seed,
        &cfg.scenarios.options,
    )?;
    if let Some(dir) = ctx.args.cache.parent() {
        fs::create_dir_all(dir)?;
    }
    write_cache(
        &ctx.args.cache,
        &ScenarioCache {
            input_hash: cfg.scenario_input_hash(&ctx.traces),
            set: set.clone(),
        },
    )?;
    println!("scenarios {} written to {}", set.len(), ctx.args.cache.display());
    println!("fingerprint {}", set.fingerprint());
    Ok(())
}

fn run_assess(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let set = ctx.scenario_set()?;
    let prov = ctx.provenance(&set);
    if let Some(path) = &ctx.args.export_lp {
        let load = set.load_for(0, &cfg.load);
        let dlp = build_lp(&cfg.system, set.get(0), &load)?;
        write_lp_format(&dlp.lp, fs::File::create(path)?)?;
    }
    let a: Assessment = assess(&cfg.system, &cfg.load, &set, ctx.args.dispatcher, &cfg.solver, &cfg.study.priority)?;
    let name = format!("assess_{}", ctx.args.dispatcher);
    let mut w = csv_writer(&ctx.out(&format!("{name}_scenarios.csv")), &prov)?;
    w.write_record(["scenario_id", "eue_mwh", "lole_steps", "peak_shortfall_mw"])?;
    for s in &a.per_scenario {
        let m = &s.metrics;
        w.write_record([
            s.scenario_id.to_string(),
            m.eue_mwh.to_string(),
            m.lole_steps.to_string(),
            m.peak_shortfall_mw.to_string(),
        ])?;
    }
    w.flush()?;
    println!("{} EUE {:.6} MWh, LOLE {:.6} steps", ctx.args.dispatcher, a.eue_mwh, a.lole_steps);
    write_json(&ctx.out(&format!("{name}.json")), &prov, cfg, a)
}

#[derive(Serialize)]
struct ElccSummary {
    dispatcher: Dispatcher,
    delta_mw: f64,
    installed_mw: f64,
    baseline: f64,
    matched: f64,
    residual: f64,
    iterations: usize,
}

fn run_elcc(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    if cfg.study.addition.is_empty() {
        return Err(Error::Validation(vec!["study.addition is empty".into()]));
    }
    let set = ctx.scenario_set()?;
    let prov = ctx.provenance(&set);
    let study = cfg.study.elcc_study(cfg.study.addition.clone());
    let eval = Evaluator {
        dispatcher: ctx.args.dispatcher,
        metric: cfg.study.metric,
        solver: &cfg.solver,
        rules: &cfg.study.priority,
    };
    let inputs = StudyInputs {
        resources: &cfg.system,
        load: &cfg.load,
        traces: &ctx.traces,
        scenarios: &set,
    };
    let r: ElccResult = elcc_benchmark(inputs, &study, &eval)?;
    let name = format!("elcc_{}", ctx.args.dispatcher);
    let mut w = csv_writer(&ctx.out(&format!("{name}.csv")), &prov)?;
    w.serialize(ElccSummary {
        dispatcher: ctx.args.dispatcher,
        delta_mw: r.delta_mw,
        installed_mw: r.nameplate_mw,
        baseline: r.baseline,
        matched: r.matched,
        residual: r.residual,
        iterations: r.iterations,
    })?;
    w.flush()?;
    if ctx.args.emit_plot_data {
        let mut w = csv_writer(&ctx.out(&format!("{name}_plot.csv")), &prov)?;
        w.write_record(["series", "x_mw", "metric"])?;
        for (series, pts) in [("trace", &r.trace), ("grid", &r.grid)] {
            for p in pts.iter() {
                w.write_record([series.to_string(), p.x.to_string(), p.value.to_string()])?;
            }
        }
        w.flush()?;
    }
    println!("ELCC {:.4} MW ({} dispatch, {} iterations)", r.delta_mw, ctx.args.dispatcher, r.iterations);
    write_json(&ctx.out(&format!("{name}.json")), &prov, cfg, r)
}

#[derive(Serialize)]
struct CompareBody<'a> {
    rows: &'a [CompareRow],
    dominance_holds: bool,
}

fn run_compare(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    if cfg.study.addition.is_empty() {
        return Err(Error::Validation(vec!["study.addition is empty".into()]));
    }
    let set = ctx.scenario_set()?;
    let prov = ctx.provenance(&set);
    let make = |a: Vec<Resource>| cfg.study.elcc_study(a);
    let spec = CompareSpec {
        addition: &cfg.study.addition,
        factors: &cfg.study.scaling_factors,
        metric: cfg.study.metric,
        solver: &cfg.solver,
        rules: &cfg.study.priority,
        study: &make,
    };
    let rows = compare(&cfg.system, &cfg.load, &ctx.traces, &set, &spec)?;
    let mut w = csv_writer(&ctx.out("compare.csv"), &prov)?;
    w.write_record(["scaling_factor", "heuristic_elcc_mw", "optimal_elcc_mw"])?;
    for r in &rows {
        w.write_record([
            r.scaling_factor.to_string(),
            r.heuristic.delta_mw.to_string(),
            r.optimal.delta_mw.to_string(),
        ])?;
        println!(
            "factor {:>5}: heuristic {:.4} MW, optimal {:.4} MW",
            r.scaling_factor, r.heuristic.delta_mw, r.optimal.delta_mw
        );
    }
    w.flush()?;
    if ctx.args.emit_plot_data {
        let mut w = csv_writer(&ctx.out("compare_plot.csv"), &prov)?;
        w.write_record(["scaling_factor", "installed_mw", "method", "elcc_mw", "elcc_fraction"])?;
        for r in &rows {
            for (d, e) in [(Dispatcher::Heuristic, &r.heuristic), (Dispatcher::Optimal, &r.optimal)] {
                w.write_record([
                    r.scaling_factor.to_string(),
                    r.installed_mw.to_string(),
                    d.to_string(),
                    e.delta_mw.to_string(),
                    r.fraction(d).to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    let dominance_holds = rows.iter().all(|r| r.dominance_holds);
    if !dominance_holds {
        eprintln!("warning: optimal credit below heuristic credit in at least one row");
    }
    write_json(
        &ctx.out("compare.json"),
        &prov,
        cfg,
        CompareBody {
            rows: &rows,
            dominance_holds,
        },
    )
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenScenarios(c) => gen_scenarios(&setup(c)?),
        Command::Assess(c) => run_assess(&setup(c)?),
        Command::Elcc(c) => run_elcc(&setup(c)?),
        Command::Compare(c) => run_compare(&setup(c)?),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
