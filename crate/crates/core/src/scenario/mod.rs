//! Scenario generation: joint realizations of conventional availability,
//! renewable output, flexible baselines and load, sampled once per study and
//! then held fixed.
//!
//! Every random draw comes from a stream keyed by `(seed, scenario, tag)`,
//! where the tag names the calendar or one unit. Adding a unit therefore
//! never perturbs the realizations of existing units, which is what lets an
//! accreditation study replay the same scenarios against an augmented fleet.

mod bootstrap;
mod outage;
mod traces;

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bootstrap::{bootstrap_blocks, common_history_days, sample_day_blocks, source_step};
pub use outage::{sample_outage_path, transition_probabilities};
pub use traces::{steps_per_day, TraceStore, LOAD_COLUMN};

use crate::error::{Error, Result};
use crate::model::{
    FlexibleDemandUnit, HydrogenPortfolio, LoadModel, Resource, StorageUnit, SystemResources,
    UnlimitedUnit, VariableUnit,
};

fn default_block_days() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// Sampling switches shared by every scenario of a set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    #[serde(default = "default_block_days")]
    pub block_days: usize,
    /// Resample load and renewable profiles by day blocks. When off, every
    /// scenario reads the first `steps` values of each trace.
    #[serde(default = "yes")]
    pub resample_profiles: bool,
    /// Draw each storage unit's initial state of charge uniformly between
    /// its energy bounds instead of using the configured value.
    #[serde(default)]
    pub randomize_initial_soc: bool,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            block_days: 1,
            resample_profiles: true,
            randomize_initial_soc: false,
        }
    }
}

impl ScenarioOptions {
    /// Deterministic profiles: no bootstrap, configured initial charge.
    pub fn fixed_profiles() -> Self {
        Self {
            resample_profiles: false,
            ..Self::default()
        }
    }
}

/// Realized colocated portfolio inputs for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColRealization {
    /// Behind-the-meter wind output (MW).
    pub wind_mw: Vec<f64>,
    /// Baseline electrolyzer draw (MW).
    pub baseline_mw: Vec<f64>,
}

/// One joint realization over the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: usize,
    /// Available conventional capacity per step.
    pub p_u: Vec<f64>,
    /// Variable generation per step.
    pub p_v: Vec<f64>,
    pub storage_initials: Vec<f64>,
    pub flex_baselines: Vec<Vec<f64>>,
    pub flex_caps: Vec<Vec<f64>>,
    pub col_realizations: Vec<ColRealization>,
    /// Load at the peak the set was generated with.
    pub load: Vec<f64>,
    /// History day read by each horizon day, shared by load and renewables.
    pub day_indices: Vec<usize>,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        self.load.len()
    }
}

/// A fixed collection of scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    seed: u64,
    steps: usize,
    step_hours: f64,
    steps_per_day: usize,
    base_peak_mw: f64,
    options: ScenarioOptions,
    scenarios: Vec<Scenario>,
    fingerprint: String,
    parent_fingerprint: Option<String>,
}

fn stream(seed: u64, scenario: usize, tag: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"adequacy-stream");
    h.update(seed.to_le_bytes());
    h.update((scenario as u64).to_le_bytes());
    h.update(tag.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

struct Realizer<'a> {
    traces: &'a TraceStore,
    seed: u64,
    steps: usize,
    step_hours: f64,
    spd: usize,
    options: &'a ScenarioOptions,
}

impl Realizer<'_> {
    fn profile(&self, id: &str, days: &[usize]) -> Result<Vec<f64>> {
        let series = self.traces.require(id)?;
        if series.len() < self.steps {
            return Err(Error::Invalid(format!(
                "trace `{id}` has {} steps, horizon needs {}",
                series.len(),
                self.steps
            )));
        }
        (0..self.steps)
            .map(|t| {
                let src = if self.options.resample_profiles {
                    source_step(days, self.spd, t)
                } else {
                    t
                };
                series.get(src).copied().ok_or_else(|| {
                    Error::Invalid(format!("trace `{id}` does not cover history step {src}"))
                })
            })
            .collect()
    }

    fn fixed(&self, id: &str) -> Result<Vec<f64>> {
        let series = self.traces.require(id)?;
        if series.len() < self.steps {
            return Err(Error::Invalid(format!("trace `{id}` shorter than horizon")));
        }
        Ok(series[..self.steps].to_vec())
    }

    fn add_unlimited(&self, sid: usize, u: &UnlimitedUnit, p_u: &mut [f64]) {
        let mut rng = stream(self.seed, sid, &format!("outage:{}", u.id));
        let path = sample_outage_path(u.efor, u.mean_repair_hours, self.steps, self.step_hours, &mut rng);
        for (acc, a) in p_u.iter_mut().zip(path) {
            *acc += u.capacity_mw * a as f64;
        }
    }

    fn add_variable(&self, u: &VariableUnit, days: &[usize], p_v: &mut [f64]) -> Result<()> {
        let cf = self.profile(&u.trace_id, days)?;
        for (acc, k) in p_v.iter_mut().zip(cf) {
            *acc += u.capacity_mw * k;
        }
        Ok(())
    }

    fn storage_initial(&self, sid: usize, u: &StorageUnit) -> f64 {
        if self.options.randomize_initial_soc {
            let mut rng = stream(self.seed, sid, &format!("soc:{}", u.id));
            u.e_min_mwh + rng.gen::<f64>() * (u.e_max_mwh - u.e_min_mwh)
        } else {
            u.initial_soc_mwh
        }
    }

    fn flex(&self, u: &FlexibleDemandUnit) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.fixed(&u.baseline_trace_id)?, self.fixed(&u.reduction_cap_trace_id)?))
    }

    fn col(&self, p: &HydrogenPortfolio, days: &[usize]) -> Result<ColRealization> {
        let wind_mw = match &p.wind_trace_id {
            Some(id) => self
                .profile(id, days)?
                .into_iter()
                .map(|k| k * p.wind_capacity_mw)
                .collect(),
            None => vec![0.0; self.steps],
        };
        Ok(ColRealization {
            wind_mw,
            baseline_mw: vec![p.ely_nominal_mw; self.steps],
        })
    }

    fn add_resources(&self, sc: &mut Scenario, addition: &[Resource]) -> Result<()> {
        for r in addition {
            match r {
                Resource::Unlimited(u) => self.add_unlimited(sc.scenario_id, u, &mut sc.p_u),
                Resource::Variable(u) => self.add_variable(u, &sc.day_indices, &mut sc.p_v)?,
                Resource::Storage(u) => sc.storage_initials.push(self.storage_initial(sc.scenario_id, u)),
                Resource::Flexible(u) => {
                    let (b, c) = self.flex(u)?;
                    sc.flex_baselines.push(b);
                    sc.flex_caps.push(c);
                }
                Resource::Colocated(p) => {
                    let col = self.col(p, &sc.day_indices)?;
                    sc.col_realizations.push(col);
                }
            }
        }
        Ok(())
    }
}

fn profile_trace_ids<'a>(resources: &'a SystemResources, load: &'a LoadModel) -> Vec<&'a str> {
    let mut ids = vec![load.load_trace_id.as_str()];
    ids.extend(resources.variable.iter().map(|u| u.trace_id.as_str()));
    ids.extend(resources.colocated.iter().filter_map(|p| p.wind_trace_id.as_deref()));
    ids
}

/// Samples `n` scenarios for the fleet and load.
pub fn generate(
    resources: &SystemResources,
    load: &LoadModel,
    traces: &TraceStore,
    n: usize,
    seed: u64,
    options: &ScenarioOptions,
) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::Invalid("scenario count must be >= 1".into()));
    }
    let steps = resources.horizon.steps;
    if steps == 0 {
        return Err(Error::Invalid("horizon must have at least one step".into()));
    }
    let spd = traces.steps_per_day();
    let history_days = common_history_days(traces, &profile_trace_ids(resources, load), steps)?;
    if options.resample_profiles && options.block_days == 0 {
        return Err(Error::Invalid("block_days must be >= 1".into()));
    }
    let realizer = Realizer {
        traces,
        seed,
        steps,
        step_hours: resources.horizon.step_hours,
        spd,
        options,
    };
    let all: Vec<Resource> = crate::model::resources_iter(resources).collect();

    let scenarios = (0..n)
        .into_par_iter()
        .map(|sid| -> Result<Scenario> {
            let day_indices = if options.resample_profiles {
                let mut rng = stream(seed, sid, "calendar");
                sample_day_blocks(history_days, steps, spd, options.block_days, &mut rng)?
            } else {
                (0..steps.div_ceil(spd)).collect()
            };
            let shape = realizer.profile(&load.load_trace_id, &day_indices)?;
            let mut sc = Scenario {
                scenario_id: sid,
                p_u: vec![0.0; steps],
                p_v: vec![0.0; steps],
                storage_initials: Vec::new(),
                flex_baselines: Vec::new(),
                flex_caps: Vec::new(),
                col_realizations: Vec::new(),
                load: load.realize(&shape),
                day_indices,
            };
            realizer.add_resources(&mut sc, &all)?;
            Ok(sc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut set = ScenarioSet {
        seed,
        steps,
        step_hours: resources.horizon.step_hours,
        steps_per_day: spd,
        base_peak_mw: load.peak_mw,
        options: options.clone(),
        scenarios,
        fingerprint: String::new(),
        parent_fingerprint: None,
    };
    set.fingerprint = set.compute_fingerprint();
    Ok(set)
}

impl ScenarioSet {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn base_peak_mw(&self) -> f64 {
        self.base_peak_mw
    }

    pub fn options(&self) -> &ScenarioOptions {
        &self.options
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn get(&self, i: usize) -> &Scenario {
        &self.scenarios[i]
    }

    /// Content hash of every series in the set.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Fingerprint of the set this one was extended from.
    pub fn parent_fingerprint(&self) -> Option<&str> {
        self.parent_fingerprint.as_deref()
    }

    /// Fingerprint of the original generated set, following extensions.
    pub fn root_fingerprint(&self) -> &str {
        self.parent_fingerprint.as_deref().unwrap_or(&self.fingerprint)
    }

    /// Load of scenario `i` under a (possibly scaled) load model.
    pub fn load_for(&self, i: usize, load: &LoadModel) -> Vec<f64> {
        let ratio = load.peak_mw / self.base_peak_mw;
        if ratio == 1.0 {
            return self.scenarios[i].load.clone();
        }
        self.scenarios[i].load.iter().map(|d| d * ratio).collect()
    }

    /// Realizes `addition` on top of every scenario. Existing series are
    /// kept bit for bit, so the result equals what [`generate`] would return
    /// for the augmented fleet with the same seed.
    pub fn extend_with(&self, addition: &[Resource], traces: &TraceStore) -> Result<ScenarioSet> {
        let realizer = Realizer {
            traces,
            seed: self.seed,
            steps: self.steps,
            step_hours: self.step_hours,
            spd: self.steps_per_day,
            options: &self.options,
        };
        let scenarios = self
            .scenarios
            .par_iter()
            .map(|sc| {
                let mut sc = sc.clone();
                realizer.add_resources(&mut sc, addition)?;
                Ok(sc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut set = ScenarioSet {
            scenarios,
            fingerprint: String::new(),
            parent_fingerprint: Some(self.root_fingerprint().to_string()),
            options: self.options.clone(),
            ..*self
        };
        set.fingerprint = set.compute_fingerprint();
        Ok(set)
    }

    /// Checks that the per-class dimensions match a fleet.
    pub fn check_consistent(&self, resources: &SystemResources) -> Result<()> {
        if resources.horizon.steps != self.steps {
            return Err(Error::Dimension(format!(
                "fleet horizon {} vs scenario horizon {}",
                resources.horizon.steps, self.steps
            )));
        }
        for sc in &self.scenarios {
            if sc.storage_initials.len() != resources.storage.len()
                || sc.flex_baselines.len() != resources.flexible.len()
                || sc.col_realizations.len() != resources.colocated.len()
            {
                return Err(Error::Dimension(format!(
                    "scenario {} was realized for a different fleet",
                    sc.scenario_id
                )));
            }
        }
        Ok(())
    }

    fn compute_fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"adequacy-scenario-set-v1");
        h.update(self.seed.to_le_bytes());
        h.update((self.scenarios.len() as u64).to_le_bytes());
        h.update((self.steps as u64).to_le_bytes());
        h.update(self.step_hours.to_le_bytes());
        h.update(self.base_peak_mw.to_le_bytes());
        let series = |h: &mut Sha256, s: &[f64]| {
            h.update((s.len() as u64).to_le_bytes());
            for v in s {
                h.update(v.to_le_bytes());
            }
        };
        for sc in &self.scenarios {
            h.update((sc.scenario_id as u64).to_le_bytes());
            series(&mut h, &sc.p_u);
            series(&mut h, &sc.p_v);
            series(&mut h, &sc.storage_initials);
            for s in sc.flex_baselines.iter().chain(&sc.flex_caps) {
                series(&mut h, s);
            }
            for c in &sc.col_realizations {
                series(&mut h, &c.wind_mw);
                series(&mut h, &c.baseline_mw);
            }
            series(&mut h, &sc.load);
            for d in &sc.day_indices {
                h.update((*d as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Recomputes the content hash and compares it with the stored one.
    pub fn verify(&self) -> bool {
        self.compute_fingerprint() == self.fingerprint
    }
}

const CACHE_MAGIC: &[u8; 8] = b"ADQSCN01";

/// Cache payload: the scenario set plus a hash of the inputs it was
/// generated from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioCache {
    pub input_hash: String,
    pub set: ScenarioSet,
}

/// Writes a scenario cache file.
pub fn write_cache(path: &Path, cache: &ScenarioCache) -> Result<()> {
    let body = bincode::serialize(cache).map_err(|e| Error::Cache(e.to_string()))?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(CACHE_MAGIC)?;
    f.write_all(&body)?;
    Ok(())
}

/// Reads and verifies a scenario cache file.
pub fn read_cache(path: &Path) -> Result<ScenarioCache> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < CACHE_MAGIC.len() || &bytes[..CACHE_MAGIC.len()] != CACHE_MAGIC {
        return Err(Error::Cache(format!("{} is not a scenario cache", path.display())));
    }
    let cache: ScenarioCache =
        bincode::deserialize(&bytes[CACHE_MAGIC.len()..]).map_err(|e| Error::Cache(e.to_string()))?;
    if !cache.set.verify() {
        return Err(Error::Cache("scenario cache content does not match its fingerprint".into()));
    }
    Ok(cache)
}
