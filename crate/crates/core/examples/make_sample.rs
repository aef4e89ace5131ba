//! Writes the sample study under `sample/`: synthetic traces and a config
//! for the small test system with the hydrogen facility as the addition.

use std::fs;
use std::path::PathBuf;

use adequacy::synthetic::{portfolio_resource, small_system, synthetic_traces, write_trace_csv};

fn main() -> adequacy::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sample".into()));
    fs::create_dir_all(&dir)?;
    let traces = synthetic_traces(56, 11);
    write_trace_csv(fs::File::create(dir.join("traces.csv"))?, &traces, 1.0)?;
    let (system, load) = small_system(168);
    let config = serde_json::json!({
        "system": system,
        "load": load,
        "scenarios": { "count": 40, "seed": 2024 },
        "study": {
            "addition": [portfolio_resource()],
            "tolerance": 1e-3,
            "delta_lo_mw": -2.0,
            "delta_hi_mw": 30.0,
            "delta_resolution_mw": 0.01,
            "target_metric": 2.0,
            "monotonicity_grid": 5,
            "scaling_factors": [1.0, 1.5, 2.0]
        },
        "paths": { "traces": ["traces.csv"], "output_dir": "out" }
    });
    let mut text = serde_json::to_string_pretty(&config)?;
    text.push('\n');
    fs::write(dir.join("study.json"), text)?;
    println!("wrote {}", dir.display());
    Ok(())
}
