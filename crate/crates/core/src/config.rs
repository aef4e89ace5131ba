//! Study configuration file (JSON) and the provenance block written into
//! every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispatch::PriorityConfig;
use crate::elcc::{Benchmark, ElccStudy, Metric};
use crate::error::{Error, Result};
use crate::lp::SolverOptions;
use crate::model::{validate, validate_resource, LoadModel, Resource, SystemResources};
use crate::scenario::{ScenarioOptions, TraceStore};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: ScenarioOptions,
}

fn default_eps() -> f64 {
    1e-3
}

fn default_lo() -> f64 {
    0.0
}

fn default_resolution() -> f64 {
    0.01
}

fn default_factors() -> Vec<f64> {
    vec![1.0]
}

/// Settings for `elcc` and `compare`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default)]
    pub addition: Vec<Resource>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default = "default_eps")]
    pub tolerance: f64,
    #[serde(default = "default_lo")]
    pub delta_lo_mw: f64,
    /// Upper search bound; defaults to the installed capacity of the
    /// (scaled) addition plus one resolution step.
    #[serde(default)]
    pub delta_hi_mw: Option<f64>,
    #[serde(default = "default_resolution")]
    pub delta_resolution_mw: f64,
    #[serde(default)]
    pub benchmark: Benchmark,
    #[serde(default)]
    pub target_metric: Option<f64>,
    #[serde(default)]
    pub monotonicity_grid: Option<usize>,
    #[serde(default = "default_factors")]
    pub scaling_factors: Vec<f64>,
    #[serde(default)]
    pub priority: PriorityConfig,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            addition: Vec::new(),
            metric: Metric::Eue,
            tolerance: default_eps(),
            delta_lo_mw: default_lo(),
            delta_hi_mw: None,
            delta_resolution_mw: default_resolution(),
            benchmark: Benchmark::LoadIncrease,
            target_metric: None,
            monotonicity_grid: None,
            scaling_factors: default_factors(),
            priority: PriorityConfig::default(),
        }
    }
}

impl StudySection {
    /// The accreditation request for `addition`, which may already be a
    /// scaled copy of the configured one.
    pub fn elcc_study(&self, addition: Vec<Resource>) -> ElccStudy {
        let installed: f64 = addition.iter().map(Resource::nameplate_mw).sum();
        let hi = self
            .delta_hi_mw
            .unwrap_or_else(|| (installed + self.delta_resolution_mw).max(self.delta_lo_mw + self.delta_resolution_mw));
        ElccStudy {
            addition,
            metric: self.metric,
            tolerance: self.tolerance,
            delta_lo_mw: self.delta_lo_mw,
            delta_hi_mw: hi,
            delta_resolution_mw: self.delta_resolution_mw,
            benchmark: self.benchmark,
            target_metric: self.target_metric,
            monotonicity_grid: self.monotonicity_grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    /// Trace CSV files, merged in order.
    pub traces: Vec<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scenario_cache: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub system: SystemResources,
    pub load: LoadModel,
    pub scenarios: ScenarioSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub study: StudySection,
    pub paths: PathSection,
}

impl StudyConfig {
    /// Parses a config; relative paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: StudyConfig = serde_json::from_str(text)?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        cfg.paths.traces.iter_mut().for_each(resolve);
        resolve(&mut cfg.paths.output_dir);
        if let Some(p) = cfg.paths.scenario_cache.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn load_traces(&self) -> Result<TraceStore> {
        let mut store = TraceStore::for_step_hours(self.system.horizon.step_hours);
        for p in &self.paths.traces {
            store.extend(&TraceStore::from_csv_path(p, self.system.horizon.step_hours)?);
        }
        Ok(store)
    }

    /// Structural checks plus the model invariants of fleet, load, addition
    /// and study settings.
    pub fn validate(&self, traces: &TraceStore) -> Result<()> {
        let mut v: Vec<String> = validate(&self.system, &self.load, traces)
            .iter()
            .map(ToString::to_string)
            .collect();
        for r in &self.study.addition {
            v.extend(validate_resource(r, self.system.horizon, Some(traces)).iter().map(ToString::to_string));
        }
        if self.scenarios.count == 0 {
            v.push("scenarios.count must be >= 1".into());
        }
        if !(self.solver.feas_tol > 0.0) || !(self.solver.opt_tol > 0.0) {
            v.push("solver tolerances must be > 0".into());
        }
        if self.study.scaling_factors.is_empty() || self.study.scaling_factors.iter().any(|f| !(*f >= 0.0)) {
            v.push("study.scaling_factors must be a non-empty list of non-negative numbers".into());
        }
        if let Err(Error::Validation(more)) = self.study.elcc_study(self.study.addition.clone()).validate() {
            v.extend(more);
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Hash of the parsed configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).unwrap_or_default();
        hex::encode(Sha256::digest(bytes))
    }

    /// Hash of everything that determines the scenario set: fleet, load,
    /// scenario section and trace contents.
    pub fn scenario_input_hash(&self, traces: &TraceStore) -> String {
        let mut h = Sha256::new();
        h.update(b"adequacy-scenario-inputs-v1");
        for part in [
            serde_json::to_vec(&self.system),
            serde_json::to_vec(&self.load),
            serde_json::to_vec(&self.scenarios),
            serde_json::to_vec(traces),
        ] {
            let part = part.unwrap_or_default();
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        hex::encode(h.finalize())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.paths
            .scenario_cache
            .clone()
            .unwrap_or_else(|| self.paths.output_dir.join("scenarios.bin"))
    }
}

/// What every output file records about how it was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub scenario_fingerprint: String,
    pub scenario_seed: u64,
    pub scenario_count: usize,
    pub solver: SolverOptions,
}

impl Provenance {
    pub fn new(cfg: &StudyConfig, fingerprint: &str, seed: u64, count: usize) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: cfg.hash(),
            scenario_fingerprint: fingerprint.to_string(),
            scenario_seed: seed,
            scenario_count: count,
            solver: cfg.solver,
        }
    }

    /// Leading comment lines for CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!(
            "# adequacy {} config={} scenarios={} seed={} n={} feas_tol={:e} opt_tol={:e} method={:?}\n",
            self.tool_version,
            self.config_hash,
            self.scenario_fingerprint,
            self.scenario_seed,
            self.scenario_count,
            self.solver.feas_tol,
            self.solver.opt_tol,
            self.solver.method
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {"horizon": {"steps": 24}, "unlimited": [{"id": "g", "capacity_mw": 10}]},
        "load": {"peak_mw": 8, "load_trace_id": "load_mw"},
        "scenarios": {"count": 3, "seed": 7},
        "paths": {"traces": ["t.csv"], "output_dir": "out"}
    }"#;

    #[test]
    fn parses_with_defaults_and_resolves_paths() {
        let cfg = StudyConfig::from_json(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(cfg.paths.traces, vec![PathBuf::from("/base/t.csv")]);
        assert_eq!(cfg.cache_path(), PathBuf::from("/base/out/scenarios.bin"));
        assert_eq!(cfg.study.scaling_factors, vec![1.0]);
        assert_eq!(cfg.solver, SolverOptions::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"count\": 3", "\"count\": 3, \"colour\": 1");
        assert!(matches!(StudyConfig::from_json(&bad, Path::new(".")), Err(Error::Json(_))));
        let bad = MINIMAL.replace("\"capacity_mw\": 10", "\"capacity_mw\": 10, \"size\": 2");
        assert!(StudyConfig::from_json(&bad, Path::new(".")).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = StudyConfig::from_json(MINIMAL, Path::new("/x")).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.scenarios.seed = 8;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn default_upper_bound_covers_installed_capacity() {
        let s = StudySection::default();
        let add = vec![Resource::Unlimited(crate::model::UnlimitedUnit::perfect("p", 3.0))];
        assert!((s.elcc_study(add).delta_hi_mw - 3.01).abs() < 1e-12);
    }
}
