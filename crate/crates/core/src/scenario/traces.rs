use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column that carries the system load in trace CSV files.
pub const LOAD_COLUMN: &str = "load_mw";

/// Named per-step time series plus the calendar alignment used by the
/// day-block bootstrap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStore {
    series: BTreeMap<String, Vec<f64>>,
    steps_per_day: usize,
}

impl Default for TraceStore {
    fn default() -> Self {
        Self::new(24)
    }
}

impl TraceStore {
    pub fn new(steps_per_day: usize) -> Self {
        Self {
            series: BTreeMap::new(),
            steps_per_day: steps_per_day.max(1),
        }
    }

    /// Calendar alignment for a given step length.
    pub fn for_step_hours(step_hours: f64) -> Self {
        Self::new(steps_per_day(step_hours))
    }

    pub fn insert(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let id = id.into();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "trace `{id}` has a non-finite value at step {pos}"
            )));
        }
        self.series.insert(id, values);
        Ok(())
    }

    /// Inserts a flat series of the given length.
    pub fn insert_constant(&mut self, id: impl Into<String>, value: f64, len: usize) -> Result<()> {
        self.insert(id, vec![value; len])
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.series.get(id).map(Vec::as_slice)
    }

    pub fn require(&self, id: &str) -> Result<&[f64]> {
        self.get(id).ok_or_else(|| Error::MissingTrace(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.series.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn steps_per_day(&self) -> usize {
        self.steps_per_day
    }

    /// Day index a step falls into.
    pub fn day_of(&self, step: usize) -> usize {
        step / self.steps_per_day
    }

    /// Whole days covered by a trace.
    pub fn days_in(&self, id: &str) -> Result<usize> {
        Ok(self.require(id)?.len() / self.steps_per_day)
    }

    /// Merges another store into this one; ids in `other` win.
    pub fn extend(&mut self, other: &TraceStore) {
        for (k, v) in &other.series {
            self.series.insert(k.clone(), v.clone());
        }
    }

    /// Reads the trace CSV layout: `timestamp,load_mw,wind_cf,solar_cf`
    /// followed by any number of extra named columns. The load column is
    /// normalized by its maximum so it can serve directly as a load shape.
    pub fn from_csv_reader<R: Read>(reader: R, step_hours: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let expected = ["timestamp", LOAD_COLUMN, "wind_cf", "solar_cf"];
        if headers.len() < expected.len()
            || headers.iter().zip(expected.iter()).any(|(h, e)| h != e)
        {
            return Err(Error::Invalid(format!(
                "trace header must start with `{}`, found `{}`",
                expected.join(","),
                headers.join(",")
            )));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Invalid(format!(
                    "trace row {} has {} fields, expected {}",
                    line + 2,
                    record.len(),
                    headers.len()
                )));
            }
            for (col, field) in record.iter().skip(1).enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Invalid(format!(
                        "trace row {} column `{}`: cannot parse `{}`",
                        line + 2,
                        headers[col + 1],
                        field
                    ))
                })?;
                columns[col].push(v);
            }
        }
        let mut store = Self::for_step_hours(step_hours);
        for (name, mut values) in headers.into_iter().skip(1).zip(columns) {
            if name == LOAD_COLUMN {
                let peak = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(peak > 0.0) {
                    return Err(Error::Invalid("load column has no positive value".into()));
                }
                values.iter_mut().for_each(|v| *v /= peak);
            }
            store.insert(name, values)?;
        }
        Ok(store)
    }

    pub fn from_csv_path(path: &Path, step_hours: f64) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, step_hours)
    }
}

/// Steps per calendar day; 1 when the step length does not tile a day.
pub fn steps_per_day(step_hours: f64) -> usize {
    let spd = 24.0 / step_hours;
    if spd >= 1.0 && (spd - spd.round()).abs() < 1e-9 {
        spd.round() as usize
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_load_normalization() {
        let data = "timestamp,load_mw,wind_cf,solar_cf,offshore_cf\n\
                    2023-01-01T00,50,0.5,0,0.1\n\
                    2023-01-01T01,100,0.25,0.1,0.2\n";
        let store = TraceStore::from_csv_reader(data.as_bytes(), 1.0).unwrap();
        assert_eq!(store.get("load_mw").unwrap(), &[0.5, 1.0]);
        assert_eq!(store.get("wind_cf").unwrap(), &[0.5, 0.25]);
        assert_eq!(store.get("offshore_cf").unwrap(), &[0.1, 0.2]);
        assert_eq!(store.steps_per_day(), 24);
    }

    #[test]
    fn rejects_bad_header_and_locale_decimals() {
        let bad = "time,load,wind\n1,2,3\n";
        assert!(TraceStore::from_csv_reader(bad.as_bytes(), 1.0).is_err());
        let comma = "timestamp,load_mw,wind_cf,solar_cf\nx,\"1,5\",0,0\n";
        assert!(TraceStore::from_csv_reader(comma.as_bytes(), 1.0).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let mut s = TraceStore::default();
        assert!(s.insert("x", vec![1.0, f64::NAN]).is_err());
    }
}
