//! Resource, load and horizon types, their validation, and the transforms an
//! accreditation study applies to them: augmentation with a new resource,
//! proportional load scaling, and class-based aggregation.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::TraceStore;

fn default_step_hours() -> f64 {
    1.0
}

/// Study horizon: `steps` periods of `step_hours` each.
///
/// Power is in MW and energy in MWh; energy accumulated over a step is
/// power times `step_hours`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub steps: usize,
    #[serde(default = "default_step_hours")]
    pub step_hours: f64,
}

impl Horizon {
    pub fn hourly(steps: usize) -> Self {
        Self {
            steps,
            step_hours: 1.0,
        }
    }
}

/// Conventional generator with a two-state forced outage process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnlimitedUnit {
    pub id: String,
    pub capacity_mw: f64,
    #[serde(default)]
    pub efor: f64,
    #[serde(default = "default_repair_hours")]
    pub mean_repair_hours: f64,
}

fn default_repair_hours() -> f64 {
    24.0
}

impl UnlimitedUnit {
    /// A unit that never fails.
    pub fn perfect(id: impl Into<String>, capacity_mw: f64) -> Self {
        Self {
            id: id.into(),
            capacity_mw,
            efor: 0.0,
            mean_repair_hours: default_repair_hours(),
        }
    }
}

/// Wind or solar plant scaled from a capacity-factor trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableUnit {
    pub id: String,
    pub capacity_mw: f64,
    pub trace_id: String,
}

/// Energy storage. `eta_charge` applies on the charging side only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageUnit {
    pub id: String,
    pub p_charge_max_mw: f64,
    pub p_discharge_max_mw: f64,
    #[serde(default)]
    pub e_min_mwh: f64,
    pub e_max_mwh: f64,
    #[serde(default = "one")]
    pub eta_charge: f64,
    #[serde(default)]
    pub initial_soc_mwh: f64,
}

fn one() -> f64 {
    1.0
}

impl StorageUnit {
    /// Energy-to-discharge-power ratio in hours; infinite for a unit that
    /// cannot discharge.
    pub fn duration_hours(&self) -> f64 {
        if self.p_discharge_max_mw > 0.0 {
            self.e_max_mwh / self.p_discharge_max_mw
        } else {
            f64::INFINITY
        }
    }
}

/// Demand that may be curtailed, only while the system is short.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlexibleDemandUnit {
    pub id: String,
    pub baseline_trace_id: String,
    pub reduction_cap_trace_id: String,
}

fn default_ely_eff() -> f64 {
    0.7
}

fn default_fc_eff() -> f64 {
    0.5
}

/// Colocated hydrogen facility: behind-the-meter wind, a flexible
/// electrolyzer, a hydrogen tank, and a fuel cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydrogenPortfolio {
    pub id: String,
    #[serde(default)]
    pub wind_capacity_mw: f64,
    #[serde(default)]
    pub wind_trace_id: Option<String>,
    pub ely_nominal_mw: f64,
    #[serde(default)]
    pub ely_dr_fraction: f64,
    #[serde(default = "default_ely_eff")]
    pub ely_eff_mwh_h2_per_mwh_e: f64,
    pub fc_max_mw: f64,
    #[serde(default = "default_fc_eff")]
    pub fc_eff_mwh_e_per_mwh_h2: f64,
    pub tank_max_mwh_h2: f64,
    pub tank_initial_mwh_h2: f64,
    /// Route electrolyzer output above the sales floor into the tank.
    #[serde(default)]
    pub allow_tank_recharge: bool,
    /// Hydrogen production committed to sales (MW of electrolyzer draw).
    /// Only consulted when recharge is enabled; defaults to zero then.
    #[serde(default)]
    pub ely_sales_floor_mw: Option<f64>,
}

impl HydrogenPortfolio {
    /// Electrolyzer draw whose hydrogen is committed to sales.
    pub fn sales_floor_mw(&self) -> f64 {
        if self.allow_tank_recharge {
            self.ely_sales_floor_mw.unwrap_or(0.0)
        } else {
            self.ely_nominal_mw
        }
    }

    /// Maximum electrolyzer reduction during shortages.
    pub fn dr_cap_mw(&self) -> f64 {
        self.ely_nominal_mw * self.ely_dr_fraction
    }

    /// Electricity the initial tank inventory can produce.
    pub fn extractable_energy_mwh(&self) -> f64 {
        self.tank_initial_mwh_h2 * self.fc_eff_mwh_e_per_mwh_h2
    }
}

/// One resource of any class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Resource {
    Unlimited(UnlimitedUnit),
    Variable(VariableUnit),
    Storage(StorageUnit),
    Flexible(FlexibleDemandUnit),
    Colocated(HydrogenPortfolio),
}

impl Resource {
    pub fn id(&self) -> &str {
        match self {
            Resource::Unlimited(u) => &u.id,
            Resource::Variable(u) => &u.id,
            Resource::Storage(u) => &u.id,
            Resource::Flexible(u) => &u.id,
            Resource::Colocated(u) => &u.id,
        }
    }

    /// Installed capacity used when reporting ELCC as a fraction.
    ///
    /// Flexible demand has no nameplate without traces and reports zero.
    pub fn nameplate_mw(&self) -> f64 {
        match self {
            Resource::Unlimited(u) => u.capacity_mw,
            Resource::Variable(u) => u.capacity_mw,
            Resource::Storage(u) => u.p_discharge_max_mw,
            Resource::Flexible(_) => 0.0,
            Resource::Colocated(p) => p.wind_capacity_mw + p.fc_max_mw + p.dr_cap_mw(),
        }
    }

    /// Scales every capacity-like quantity by `factor`. Flexible-demand
    /// traces are copied under new ids into `traces`.
    pub fn scaled(&self, factor: f64, traces: &mut TraceStore) -> Result<Resource> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::Invalid(format!("scaling factor {factor}")));
        }
        Ok(match self {
            Resource::Unlimited(u) => Resource::Unlimited(UnlimitedUnit {
                capacity_mw: u.capacity_mw * factor,
                ..u.clone()
            }),
            Resource::Variable(u) => Resource::Variable(VariableUnit {
                capacity_mw: u.capacity_mw * factor,
                ..u.clone()
            }),
            Resource::Storage(u) => Resource::Storage(StorageUnit {
                p_charge_max_mw: u.p_charge_max_mw * factor,
                p_discharge_max_mw: u.p_discharge_max_mw * factor,
                e_min_mwh: u.e_min_mwh * factor,
                e_max_mwh: u.e_max_mwh * factor,
                initial_soc_mwh: u.initial_soc_mwh * factor,
                ..u.clone()
            }),
            Resource::Flexible(u) => {
                let mut scaled_trace = |id: &str| -> Result<String> {
                    let new_id = format!("{id}@x{factor}");
                    let values = traces.require(id)?.iter().map(|v| v * factor).collect();
                    traces.insert(new_id.clone(), values)?;
                    Ok(new_id)
                };
                Resource::Flexible(FlexibleDemandUnit {
                    id: u.id.clone(),
                    baseline_trace_id: scaled_trace(&u.baseline_trace_id)?,
                    reduction_cap_trace_id: scaled_trace(&u.reduction_cap_trace_id)?,
                })
            }
            Resource::Colocated(p) => Resource::Colocated(HydrogenPortfolio {
                wind_capacity_mw: p.wind_capacity_mw * factor,
                ely_nominal_mw: p.ely_nominal_mw * factor,
                fc_max_mw: p.fc_max_mw * factor,
                tank_max_mwh_h2: p.tank_max_mwh_h2 * factor,
                tank_initial_mwh_h2: p.tank_initial_mwh_h2 * factor,
                ely_sales_floor_mw: p.ely_sales_floor_mw.map(|f| f * factor),
                ..p.clone()
            }),
        })
    }
}

/// The parameterized resource fleet across all five classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemResources {
    pub horizon: Horizon,
    #[serde(default)]
    pub unlimited: Vec<UnlimitedUnit>,
    #[serde(default)]
    pub variable: Vec<VariableUnit>,
    #[serde(default)]
    pub storage: Vec<StorageUnit>,
    #[serde(default)]
    pub flexible: Vec<FlexibleDemandUnit>,
    #[serde(default)]
    pub colocated: Vec<HydrogenPortfolio>,
}

impl SystemResources {
    pub fn empty(horizon: Horizon) -> Self {
        Self {
            horizon,
            unlimited: Vec::new(),
            variable: Vec::new(),
            storage: Vec::new(),
            flexible: Vec::new(),
            colocated: Vec::new(),
        }
    }

    pub fn unit_count(&self) -> usize {
        self.unlimited.len()
            + self.variable.len()
            + self.storage.len()
            + self.flexible.len()
            + self.colocated.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.unlimited
            .iter()
            .map(|u| u.id.as_str())
            .chain(self.variable.iter().map(|u| u.id.as_str()))
            .chain(self.storage.iter().map(|u| u.id.as_str()))
            .chain(self.flexible.iter().map(|u| u.id.as_str()))
            .chain(self.colocated.iter().map(|u| u.id.as_str()))
    }

    fn push(&mut self, resource: Resource) {
        match resource {
            Resource::Unlimited(u) => self.unlimited.push(u),
            Resource::Variable(u) => self.variable.push(u),
            Resource::Storage(u) => self.storage.push(u),
            Resource::Flexible(u) => self.flexible.push(u),
            Resource::Colocated(u) => self.colocated.push(u),
        }
    }

    /// Returns a new fleet holding every unit of `self` plus the addition.
    /// New units are appended after existing units of the same class.
    pub fn augment(&self, addition: &[Resource]) -> Result<SystemResources> {
        let mut seen: HashSet<&str> = self.ids().collect();
        for r in addition {
            if !seen.insert(r.id()) {
                return Err(Error::DuplicateId(r.id().to_string()));
            }
            let violations = validate_resource(r, self.horizon, None);
            if !violations.is_empty() {
                return Err(Error::Validation(
                    violations.iter().map(ToString::to_string).collect(),
                ));
            }
        }
        let mut out = self.clone();
        for r in addition {
            out.push(r.clone());
        }
        Ok(out)
    }
}

/// System load: an annual peak and a normalized shape trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadModel {
    pub peak_mw: f64,
    pub load_trace_id: String,
}

impl LoadModel {
    /// Raises the peak by `delta_mw` and scales the profile proportionally.
    pub fn scale(&self, delta_mw: f64) -> Result<LoadModel> {
        let peak = self.peak_mw + delta_mw;
        if !(peak > 0.0) || !peak.is_finite() {
            return Err(Error::Invalid(format!(
                "load peak {} + {} is not positive",
                self.peak_mw, delta_mw
            )));
        }
        Ok(LoadModel {
            peak_mw: peak,
            load_trace_id: self.load_trace_id.clone(),
        })
    }

    /// Realized per-step load for a sampled shape.
    pub fn realize(&self, shape: &[f64]) -> Vec<f64> {
        shape.iter().map(|k| self.peak_mw * k).collect()
    }
}

/// Free-function form of [`LoadModel::scale`].
pub fn scale_load(load: &LoadModel, delta_mw: f64) -> Result<LoadModel> {
    load.scale(delta_mw)
}

/// Free-function form of [`SystemResources::augment`].
pub fn augment(resources: &SystemResources, addition: &[Resource]) -> Result<SystemResources> {
    resources.augment(addition)
}

/// One broken invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: String,
    pub field: String,
    pub step: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.step {
            Some(t) => write!(f, "{}.{} at step {}: {}", self.subject, self.field, t, self.message),
            None => write!(f, "{}.{}: {}", self.subject, self.field, self.message),
        }
    }
}

fn violation(subject: &str, field: &str, step: Option<usize>, message: impl Into<String>) -> Violation {
    Violation {
        subject: subject.to_string(),
        field: field.to_string(),
        step,
        message: message.into(),
    }
}

struct Checker<'a> {
    subject: &'a str,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn nonneg(&mut self, field: &str, v: f64) {
        if !(v >= 0.0) || !v.is_finite() {
            self.out.push(violation(self.subject, field, None, format!("{v} must be finite and >= 0")));
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.out.push(violation(self.subject, field, None, format!("{v} must be finite and > 0")));
        }
    }

    fn within(&mut self, field: &str, v: f64, lo: f64, hi: f64) {
        if !(v >= lo && v <= hi) {
            self.out.push(violation(self.subject, field, None, format!("{v} outside [{lo}, {hi}]")));
        }
    }

    fn fraction_open(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.out.push(violation(self.subject, field, None, format!("{v} outside (0, 1]")));
        }
    }

    fn trace<'t>(
        &mut self,
        field: &str,
        id: &str,
        traces: Option<&'t TraceStore>,
        steps: usize,
    ) -> Option<&'t [f64]> {
        let traces = traces?;
        match traces.get(id) {
            None => {
                self.out.push(violation(self.subject, field, None, format!("trace `{id}` not found")));
                None
            }
            Some(s) if s.len() < steps => {
                self.out.push(violation(
                    self.subject,
                    field,
                    None,
                    format!("trace `{id}` has {} steps, horizon needs {steps}", s.len()),
                ));
                None
            }
            Some(s) => Some(s),
        }
    }

    fn unit_interval_trace(&mut self, field: &str, series: &[f64]) {
        if let Some(t) = series.iter().position(|v| !(*v >= 0.0 && *v <= 1.0)) {
            self.out.push(violation(
                self.subject,
                field,
                Some(t),
                format!("capacity factor {} outside [0, 1]", series[t]),
            ));
        }
    }
}

/// Checks one resource in isolation. Trace checks run only when a store is
/// supplied.
pub fn validate_resource(r: &Resource, horizon: Horizon, traces: Option<&TraceStore>) -> Vec<Violation> {
    let mut c = Checker {
        subject: r.id(),
        out: Vec::new(),
    };
    let steps = horizon.steps;
    match r {
        Resource::Unlimited(u) => {
            c.nonneg("capacity_mw", u.capacity_mw);
            c.within("efor", u.efor, 0.0, 1.0);
            c.positive("mean_repair_hours", u.mean_repair_hours);
        }
        Resource::Variable(u) => {
            c.nonneg("capacity_mw", u.capacity_mw);
            if let Some(s) = c.trace("trace_id", &u.trace_id, traces, steps) {
                c.unit_interval_trace("trace_id", s);
            }
        }
        Resource::Storage(u) => {
            c.nonneg("p_charge_max_mw", u.p_charge_max_mw);
            c.nonneg("p_discharge_max_mw", u.p_discharge_max_mw);
            c.nonneg("e_min_mwh", u.e_min_mwh);
            c.nonneg("e_max_mwh", u.e_max_mwh);
            c.fraction_open("eta_charge", u.eta_charge);
            if !(u.e_min_mwh <= u.initial_soc_mwh && u.initial_soc_mwh <= u.e_max_mwh) {
                c.out.push(violation(
                    r.id(),
                    "initial_soc_mwh",
                    None,
                    format!(
                        "{} outside [{}, {}]",
                        u.initial_soc_mwh, u.e_min_mwh, u.e_max_mwh
                    ),
                ));
            }
        }
        Resource::Flexible(u) => {
            let base = c.trace("baseline_trace_id", &u.baseline_trace_id, traces, steps);
            let cap = c.trace("reduction_cap_trace_id", &u.reduction_cap_trace_id, traces, steps);
            if let (Some(base), Some(cap)) = (base, cap) {
                for t in 0..steps {
                    if !(0.0 <= cap[t] && cap[t] <= base[t]) {
                        c.out.push(violation(
                            r.id(),
                            "reduction_cap_trace_id",
                            Some(t),
                            format!("reduction cap {} outside [0, baseline {}]", cap[t], base[t]),
                        ));
                        break;
                    }
                }
            }
        }
        Resource::Colocated(p) => {
            c.nonneg("wind_capacity_mw", p.wind_capacity_mw);
            c.nonneg("ely_nominal_mw", p.ely_nominal_mw);
            c.within("ely_dr_fraction", p.ely_dr_fraction, 0.0, 1.0);
            c.fraction_open("ely_eff_mwh_h2_per_mwh_e", p.ely_eff_mwh_h2_per_mwh_e);
            c.nonneg("fc_max_mw", p.fc_max_mw);
            c.fraction_open("fc_eff_mwh_e_per_mwh_h2", p.fc_eff_mwh_e_per_mwh_h2);
            c.nonneg("tank_max_mwh_h2", p.tank_max_mwh_h2);
            if !(0.0 <= p.tank_initial_mwh_h2 && p.tank_initial_mwh_h2 <= p.tank_max_mwh_h2) {
                c.out.push(violation(
                    r.id(),
                    "tank_initial_mwh_h2",
                    None,
                    format!("{} outside [0, {}]", p.tank_initial_mwh_h2, p.tank_max_mwh_h2),
                ));
            }
            if p.ely_eff_mwh_h2_per_mwh_e * p.fc_eff_mwh_e_per_mwh_h2 > 1.0 {
                c.out.push(violation(r.id(), "round_trip", None, "efficiency product exceeds 1"));
            }
            if let Some(floor) = p.ely_sales_floor_mw {
                c.nonneg("ely_sales_floor_mw", floor);
            }
            match &p.wind_trace_id {
                Some(id) => {
                    if let Some(s) = c.trace("wind_trace_id", id, traces, steps) {
                        c.unit_interval_trace("wind_trace_id", s);
                    }
                }
                None if p.wind_capacity_mw > 0.0 => c.out.push(violation(
                    r.id(),
                    "wind_trace_id",
                    None,
                    "wind capacity without a trace",
                )),
                None => {}
            }
        }
    }
    c.out
}

/// Checks every invariant of the fleet, the load model and their traces.
/// An empty list means the inputs are well formed.
pub fn validate(resources: &SystemResources, load: &LoadModel, traces: &TraceStore) -> Vec<Violation> {
    let mut out = Vec::new();
    let h = resources.horizon;
    if h.steps < 1 {
        out.push(violation("horizon", "steps", None, "must be >= 1"));
    }
    if !(h.step_hours > 0.0) || !h.step_hours.is_finite() {
        out.push(violation("horizon", "step_hours", None, "must be > 0"));
    }
    let mut seen = HashSet::new();
    for id in resources.ids() {
        if !seen.insert(id) {
            out.push(violation(id, "id", None, "duplicate id"));
        }
    }
    for r in resources_iter(resources) {
        out.extend(validate_resource(&r, h, Some(traces)));
    }

    if !(load.peak_mw > 0.0) || !load.peak_mw.is_finite() {
        out.push(violation("load", "peak_mw", None, format!("{} must be > 0", load.peak_mw)));
    }
    match traces.get(&load.load_trace_id) {
        None => out.push(violation(
            "load",
            "load_trace_id",
            None,
            format!("trace `{}` not found", load.load_trace_id),
        )),
        Some(s) => {
            if s.len() < h.steps {
                out.push(violation("load", "load_trace_id", None, "trace shorter than horizon"));
            }
            if let Some(t) = s.iter().position(|v| *v < 0.0) {
                out.push(violation("load", "load_trace_id", Some(t), "negative load shape value"));
            }
            let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if (max - 1.0).abs() > 1e-9 {
                out.push(violation(
                    "load",
                    "load_trace_id",
                    None,
                    format!("shape maximum {max} is not 1.0"),
                ));
            }
        }
    }
    out
}

/// Owned copies of every unit, class by class, in storage order.
pub fn resources_iter(resources: &SystemResources) -> impl Iterator<Item = Resource> + '_ {
    resources
        .unlimited
        .iter()
        .cloned()
        .map(Resource::Unlimited)
        .chain(resources.variable.iter().cloned().map(Resource::Variable))
        .chain(resources.storage.iter().cloned().map(Resource::Storage))
        .chain(resources.flexible.iter().cloned().map(Resource::Flexible))
        .chain(resources.colocated.iter().cloned().map(Resource::Colocated))
}

const PROPORTION_TOL: f64 = 1e-9;

/// Grouping key for storage classes.
///
/// Units merge when they share charge efficiency (3 decimals) and duration
/// (1 decimal) and are exact scalings of one another, including their
/// initial state of charge. The last condition is what makes a merged class
/// dispatch-equivalent to its members.
#[derive(Clone, Debug)]
pub struct StorageClassKey {
    eta_milli: i64,
    duration_deci: i64,
    charge_ratio: f64,
    min_fraction: f64,
    soc_fraction: f64,
}

impl StorageClassKey {
    pub fn of(unit: &StorageUnit, initial_soc_mwh: f64) -> Self {
        let duration = unit.duration_hours();
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 0.0 };
        Self {
            eta_milli: (unit.eta_charge * 1000.0).round() as i64,
            duration_deci: if duration.is_finite() {
                (duration * 10.0).round() as i64
            } else {
                i64::MAX
            },
            charge_ratio: ratio(unit.p_charge_max_mw, unit.p_discharge_max_mw),
            min_fraction: ratio(unit.e_min_mwh, unit.e_max_mwh),
            soc_fraction: ratio(initial_soc_mwh, unit.e_max_mwh),
        }
    }

    pub fn matches(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| {
            (a.is_infinite() && b.is_infinite() && a.signum() == b.signum())
                || (a - b).abs() <= PROPORTION_TOL * (1.0 + a.abs().max(b.abs()))
        };
        self.eta_milli == other.eta_milli
            && self.duration_deci == other.duration_deci
            && close(self.charge_ratio, other.charge_ratio)
            && close(self.min_fraction, other.min_fraction)
            && close(self.soc_fraction, other.soc_fraction)
    }
}

/// Partitions storage units into classes; each entry lists member indices.
pub fn storage_classes(units: &[StorageUnit], initial_socs: &[f64]) -> Vec<Vec<usize>> {
    let mut classes: Vec<(StorageClassKey, Vec<usize>)> = Vec::new();
    for (i, u) in units.iter().enumerate() {
        let key = StorageClassKey::of(u, initial_socs[i]);
        match classes.iter_mut().find(|(k, _)| k.matches(&key)) {
            Some((_, members)) => members.push(i),
            None => classes.push((key, vec![i])),
        }
    }
    classes.into_iter().map(|(_, m)| m).collect()
}

/// Sums a set of storage units into one class unit. Efficiency is the
/// charge-power weighted mean of the members.
pub fn merge_storage(units: &[&StorageUnit], initial_socs: &[f64], id: String) -> (StorageUnit, f64) {
    let sum = |f: fn(&StorageUnit) -> f64| units.iter().map(|u| f(u)).sum::<f64>();
    let pch = sum(|u| u.p_charge_max_mw);
    let eta = if pch > 0.0 {
        units.iter().map(|u| u.eta_charge * u.p_charge_max_mw).sum::<f64>() / pch
    } else {
        units[0].eta_charge
    };
    let soc: f64 = initial_socs.iter().sum();
    (
        StorageUnit {
            id,
            p_charge_max_mw: pch,
            p_discharge_max_mw: sum(|u| u.p_discharge_max_mw),
            e_min_mwh: sum(|u| u.e_min_mwh),
            e_max_mwh: sum(|u| u.e_max_mwh),
            eta_charge: eta,
            initial_soc_mwh: soc,
        },
        soc,
    )
}

/// Merges storage units by class and flexible-demand units into one
/// aggregate unit. Conventional and variable units are left as they are
/// because they are already summed when a scenario is realized; colocated
/// portfolios are never merged. Summed flexible-demand traces are written
/// into the returned store under `flex-class:*` ids.
pub fn aggregate_classes(resources: &SystemResources, traces: &TraceStore) -> Result<(SystemResources, TraceStore)> {
    let mut out = resources.clone();
    let mut store = traces.clone();

    let socs: Vec<f64> = resources.storage.iter().map(|u| u.initial_soc_mwh).collect();
    out.storage = storage_classes(&resources.storage, &socs)
        .into_iter()
        .map(|members| {
            if members.len() == 1 {
                return resources.storage[members[0]].clone();
            }
            let units: Vec<&StorageUnit> = members.iter().map(|&i| &resources.storage[i]).collect();
            let member_socs: Vec<f64> = members.iter().map(|&i| socs[i]).collect();
            let id = format!(
                "class:{}",
                units.iter().map(|u| u.id.as_str()).collect::<Vec<_>>().join("+")
            );
            merge_storage(&units, &member_socs, id).0
        })
        .collect();

    if resources.flexible.len() > 1 {
        let steps = resources.horizon.steps;
        let mut base = vec![0.0; steps];
        let mut cap = vec![0.0; steps];
        for u in &resources.flexible {
            let b = traces.require(&u.baseline_trace_id)?;
            let c = traces.require(&u.reduction_cap_trace_id)?;
            if b.len() < steps || c.len() < steps {
                return Err(Error::Dimension(format!("flexible unit `{}` trace too short", u.id)));
            }
            for t in 0..steps {
                base[t] += b[t];
                cap[t] += c[t];
            }
        }
        store.insert("flex-class:baseline", base)?;
        store.insert("flex-class:reduction-cap", cap)?;
        out.flexible = vec![FlexibleDemandUnit {
            id: "flex-class".into(),
            baseline_trace_id: "flex-class:baseline".into(),
            reduction_cap_trace_id: "flex-class:reduction-cap".into(),
        }];
    }
    Ok((out, store))
}

/// Unit counts per class, keyed by class name.
pub fn class_counts(resources: &SystemResources) -> BTreeMap<&'static str, usize> {
    BTreeMap::from([
        ("unlimited", resources.unlimited.len()),
        ("variable", resources.variable.len()),
        ("storage", resources.storage.len()),
        ("flexible", resources.flexible.len()),
        ("colocated", resources.colocated.len()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn battery(id: &str, p: f64, e: f64, eta: f64) -> StorageUnit {
        StorageUnit {
            id: id.into(),
            p_charge_max_mw: p,
            p_discharge_max_mw: p,
            e_min_mwh: 0.0,
            e_max_mwh: e,
            eta_charge: eta,
            initial_soc_mwh: 0.0,
        }
    }

    fn fixture() -> (SystemResources, LoadModel, TraceStore) {
        let mut traces = TraceStore::default();
        traces.insert("load", vec![0.5, 1.0, 0.8]).unwrap();
        traces.insert("wind", vec![0.1, 0.9, 0.3]).unwrap();
        traces.insert("fb", vec![2.0, 2.0, 2.0]).unwrap();
        traces.insert("fc", vec![1.0, 1.0, 1.0]).unwrap();
        let mut sys = SystemResources::empty(Horizon::hourly(3));
        sys.unlimited.push(UnlimitedUnit::perfect("g1", 50.0));
        sys.variable.push(VariableUnit {
            id: "w1".into(),
            capacity_mw: 10.0,
            trace_id: "wind".into(),
        });
        sys.storage.push(battery("b1", 1.0, 4.0, 0.9));
        sys.flexible.push(FlexibleDemandUnit {
            id: "f1".into(),
            baseline_trace_id: "fb".into(),
            reduction_cap_trace_id: "fc".into(),
        });
        let load = LoadModel {
            peak_mw: 650.0,
            load_trace_id: "load".into(),
        };
        (sys, load, traces)
    }

    #[test]
    fn well_formed_fixture_has_no_violations() {
        let (sys, load, traces) = fixture();
        assert!(validate(&sys, &load, &traces).is_empty());
    }

    #[test]
    fn bad_efficiency_names_unit_and_field() {
        let (mut sys, load, traces) = fixture();
        sys.storage[0].eta_charge = 1.2;
        let v = validate(&sys, &load, &traces);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].subject, "b1");
        assert_eq!(v[0].field, "eta_charge");
    }

    #[test]
    fn flex_cap_above_baseline_reports_step() {
        let (sys, load, mut traces) = fixture();
        traces.insert("fc", vec![1.0, 3.0, 1.0]).unwrap();
        let v = validate(&sys, &load, &traces);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].step, Some(1));
        assert_eq!(v[0].subject, "f1");
    }

    #[test]
    fn load_shape_must_peak_at_one() {
        let (sys, load, mut traces) = fixture();
        traces.insert("load", vec![0.5, 0.9, 0.8]).unwrap();
        assert_eq!(validate(&sys, &load, &traces).len(), 1);
    }

    #[test]
    fn augment_is_value_semantic() {
        let (sys, _, _) = fixture();
        let before = sys.clone();
        let out = sys
            .augment(&[Resource::Unlimited(UnlimitedUnit::perfect("perfect", 1.0))])
            .unwrap();
        assert_eq!(out.unit_count(), sys.unit_count() + 1);
        assert_eq!(sys, before);
        assert_eq!(&out.unlimited[..1], &sys.unlimited[..]);
    }

    #[test]
    fn augment_with_hydrogen_portfolio() {
        let (sys, _, _) = fixture();
        let p = HydrogenPortfolio {
            id: "h2".into(),
            wind_capacity_mw: 10.0,
            wind_trace_id: Some("wind".into()),
            ely_nominal_mw: 8.0,
            ely_dr_fraction: 0.5,
            ely_eff_mwh_h2_per_mwh_e: 0.7,
            fc_max_mw: 2.0,
            fc_eff_mwh_e_per_mwh_h2: 0.5,
            tank_max_mwh_h2: 10.0,
            tank_initial_mwh_h2: 10.0,
            allow_tank_recharge: false,
            ely_sales_floor_mw: None,
        };
        let out = sys.augment(&[Resource::Colocated(p)]).unwrap();
        assert_eq!(out.colocated.len(), 1);
    }

    #[test]
    fn augment_rejects_duplicate_id() {
        let (sys, _, _) = fixture();
        let err = sys
            .augment(&[Resource::Unlimited(UnlimitedUnit::perfect("g1", 1.0))])
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "g1"));
    }

    #[test]
    fn scale_load_examples() {
        let load = LoadModel {
            peak_mw: 650.0,
            load_trace_id: "load".into(),
        };
        let same = scale_load(&load, 0.0).unwrap();
        assert_eq!(same, load);
        let up = scale_load(&load, 65.0).unwrap();
        let shape = [0.5, 1.0, 0.8];
        for (a, b) in up.realize(&shape).iter().zip(load.realize(&shape)) {
            assert!((a - 1.1 * b).abs() < 1e-9);
        }
        let small = LoadModel {
            peak_mw: 100.0,
            load_trace_id: "load".into(),
        };
        assert!(scale_load(&small, -100.0).is_err());
    }

    #[test]
    fn identical_batteries_merge() {
        let mut sys = SystemResources::empty(Horizon::hourly(3));
        sys.storage = vec![battery("a", 1.0, 4.0, 0.9), battery("b", 1.0, 4.0, 0.9)];
        let (agg, _) = aggregate_classes(&sys, &TraceStore::default()).unwrap();
        assert_eq!(agg.storage.len(), 1);
        assert_eq!(agg.storage[0].p_discharge_max_mw, 2.0);
        assert_eq!(agg.storage[0].e_max_mwh, 8.0);
    }

    #[test]
    fn different_efficiency_stays_separate() {
        let mut sys = SystemResources::empty(Horizon::hourly(3));
        sys.storage = vec![battery("a", 1.0, 4.0, 0.9), battery("b", 1.0, 4.0, 0.8)];
        let (agg, _) = aggregate_classes(&sys, &TraceStore::default()).unwrap();
        assert_eq!(agg.storage.len(), 2);
    }

    #[test]
    fn flex_units_sum_into_one() {
        let mut traces = TraceStore::default();
        let mut sys = SystemResources::empty(Horizon::hourly(2));
        for (i, b) in [2.0, 3.0, 5.0].iter().enumerate() {
            traces.insert(format!("b{i}"), vec![*b; 2]).unwrap();
            traces.insert(format!("c{i}"), vec![b / 2.0; 2]).unwrap();
            sys.flexible.push(FlexibleDemandUnit {
                id: format!("f{i}"),
                baseline_trace_id: format!("b{i}"),
                reduction_cap_trace_id: format!("c{i}"),
            });
        }
        let (agg, store) = aggregate_classes(&sys, &traces).unwrap();
        assert_eq!(agg.flexible.len(), 1);
        assert_eq!(store.get(&agg.flexible[0].baseline_trace_id).unwrap(), &[10.0, 10.0]);
    }

    #[test]
    fn resource_json_rejects_unknown_keys() {
        let ok = r#"{"class":"unlimited","id":"g","capacity_mw":5,"efor":0.1,"mean_repair_hours":10}"#;
        let r: Resource = serde_json::from_str(ok).unwrap();
        assert_eq!(r.id(), "g");
        let bad = r#"{"class":"unlimited","id":"g","capacity_mw":5,"colour":"red"}"#;
        assert!(serde_json::from_str::<Resource>(bad).is_err());
    }
}
