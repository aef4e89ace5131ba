//! CPLEX LP text format writer, for inspecting programs in other solvers.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::{LinearProgram, Relation};

fn var_name(lp: &LinearProgram, j: usize) -> String {
    let name = lp.name(j);
    if name.is_empty() {
        format!("x{j}")
    } else {
        name.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
            .collect()
    }
}

fn write_terms(out: &mut String, lp: &LinearProgram, terms: impl Iterator<Item = (usize, f64)>) {
    let mut any = false;
    for (j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {} {}", a.abs(), var_name(lp, j));
        any = true;
    }
    if !any {
        out.push_str(" 0 x0");
    }
}

pub fn write_lp_format<W: Write>(lp: &LinearProgram, mut w: W) -> io::Result<()> {
    let mut s = String::new();
    s.push_str("\\ adequacy dispatch program\nMinimize\n obj:");
    write_terms(&mut s, lp, lp.objective().iter().copied().enumerate());
    s.push_str("\nSubject To\n");
    for (i, row) in lp.rows().iter().enumerate() {
        let _ = write!(s, " r{i}:");
        write_terms(&mut s, lp, row.coeffs.iter().copied());
        let op = match row.relation {
            Relation::LessEq => "<=",
            Relation::Equal => "=",
        };
        let _ = writeln!(s, " {op} {}", row.rhs);
    }
    s.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        let name = var_name(lp, j);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(s, " {name} free");
            }
            (true, true) if lo == hi => {
                let _ = writeln!(s, " {name} = {lo}");
            }
            (true, true) => {
                let _ = writeln!(s, " {lo} <= {name} <= {hi}");
            }
            (true, false) => {
                let _ = writeln!(s, " {name} >= {lo}");
            }
            (false, true) => {
                let _ = writeln!(s, " -inf <= {name} <= {hi}");
            }
        }
    }
    s.push_str("End\n");
    w.write_all(s.as_bytes())
}
