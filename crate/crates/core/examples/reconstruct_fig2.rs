//! Searches for the two four-step toy systems and writes them as a fixture.

use adequacy::lp::SolverOptions;
use adequacy::oracle::{reconstruct_fig2, write_fig2_fixture};

fn main() -> adequacy::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "tests/fixtures/fig2_v1.csv".into());
    let opts = SolverOptions::default();
    let (top, bottom) = reconstruct_fig2(&opts)?;
    for (name, c) in [("top", &top), ("bottom", &bottom)] {
        println!("{name}: deficit {:?} wind {:?} credits {:?}", c.deficit_mw, c.wind_mw, c.quick_credits(&opts)?);
    }
    write_fig2_fixture(std::fs::File::create(&path)?, &top, &bottom)?;
    println!("wrote {path}");
    Ok(())
}
