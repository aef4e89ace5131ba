use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::TraceStore;

/// Day indices for a joint day-block bootstrap.
///
/// Returns one history day index per horizon day (`ceil(steps /
/// steps_per_day)` entries). Blocks of `block_days` consecutive history days
/// are drawn with replacement; the same sequence is meant to drive every
/// correlated trace.
pub fn sample_day_blocks<R: Rng + ?Sized>(
    history_days: usize,
    steps: usize,
    steps_per_day: usize,
    block_days: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if block_days == 0 {
        return Err(Error::Invalid("block_days must be >= 1".into()));
    }
    if history_days < block_days {
        return Err(Error::Invalid(format!(
            "trace history of {history_days} days is shorter than one {block_days}-day block"
        )));
    }
    let horizon_days = steps.div_ceil(steps_per_day.max(1));
    let starts = history_days - block_days + 1;
    let mut days = Vec::with_capacity(horizon_days);
    while days.len() < horizon_days {
        let start = rng.gen_range(0..starts);
        for d in start..start + block_days {
            if days.len() == horizon_days {
                break;
            }
            days.push(d);
        }
    }
    Ok(days)
}

/// Bootstrap over the common history of the given traces.
pub fn bootstrap_blocks<R: Rng + ?Sized>(
    traces: &TraceStore,
    ids: &[&str],
    steps: usize,
    block_days: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let history_days = common_history_days(traces, ids, steps)?;
    sample_day_blocks(history_days, steps, traces.steps_per_day(), block_days, rng)
}

/// Whole days shared by every listed trace.
pub fn common_history_days(traces: &TraceStore, ids: &[&str], steps: usize) -> Result<usize> {
    let mut days = usize::MAX;
    for id in ids {
        let series = traces.require(id)?;
        if series.len() < steps {
            return Err(Error::Invalid(format!(
                "trace `{id}` has {} steps, horizon needs {steps}",
                series.len()
            )));
        }
        days = days.min(series.len() / traces.steps_per_day());
    }
    Ok(if days == usize::MAX { 0 } else { days })
}

/// History step index that horizon step `t` reads under a day mapping.
pub fn source_step(day_indices: &[usize], steps_per_day: usize, t: usize) -> usize {
    day_indices[t / steps_per_day] * steps_per_day + t % steps_per_day
}
