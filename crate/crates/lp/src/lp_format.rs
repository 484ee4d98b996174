//! Plain-text export in the CPLEX LP file format.
//!
//! Layout, one section per keyword:
//!
//! ```text
//! \ offset: <objective constant>
//! Minimize | Maximize
//!  obj: <c0> x0 + <c1> x1 ...
//! Subject To
//!  <row name>: <terms> <= | = | >= <rhs>
//! Bounds
//!  <lo> <= <var> <= <hi>        (or "<var> free")
//! General
//!  <integer vars>
//! Binary
//!  <binary vars>
//! End
//! ```
//!
//! Unnamed columns are written as `x<index>`, unnamed rows as `c<index>`.
//! Coefficients use Rust's shortest round-trip float formatting, so a reader
//! recovers every value exactly.

use std::fmt::Write;

use crate::problem::{LinearProgram, MipProblem, Relation, Sense};

fn var_name(lp: &LinearProgram, j: usize) -> String {
    lp.var_names[j].clone().unwrap_or_else(|| format!("x{j}"))
}

fn write_terms(out: &mut String, lp: &LinearProgram, terms: impl Iterator<Item = (usize, f64)>) {
    let mut first = true;
    for (j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        if first && a >= 0.0 {
            let _ = write!(out, " {} {}", a, var_name(lp, j));
        } else {
            let _ = write!(out, " {} {} {}", sign, a.abs(), var_name(lp, j));
        }
        first = false;
    }
    if first {
        out.push_str(" 0 x0");
    }
}

/// Renders `mip` (or a plain LP with empty integer sets) as LP-format text.
pub fn write_lp_format(mip: &MipProblem) -> String {
    let lp = &mip.lp;
    let mut out = String::new();
    let _ = writeln!(out, "\\ offset: {}", lp.objective_offset);
    out.push_str(match lp.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, lp, lp.objective.iter().copied().enumerate());
    out.push_str("\nSubject To\n");
    for (i, c) in lp.constraints.iter().enumerate() {
        let name = c.name.clone().unwrap_or_else(|| format!("c{i}"));
        let _ = write!(out, " {name}:");
        write_terms(&mut out, lp, c.terms.iter().copied());
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", rel, c.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let name = var_name(lp, j);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) if lo == hi => {
                let _ = writeln!(out, " {name} = {lo}");
            }
            (true, true) => {
                let _ = writeln!(out, " {lo} <= {name} <= {hi}");
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {lo}");
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {hi}");
            }
        }
    }
    if !mip.integer_vars.is_empty() {
        out.push_str("General\n");
        for &j in &mip.integer_vars {
            let _ = writeln!(out, " {}", var_name(lp, j));
        }
    }
    if !mip.binary_vars.is_empty() {
        out.push_str("Binary\n");
        for &j in &mip.binary_vars {
            let _ = writeln!(out, " {}", var_name(lp, j));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_all_sections() {
        let mut mip = MipProblem::new(LinearProgram::new(Sense::Maximize));
        let x = mip.add_named_binary("pick", 3.0);
        let y = mip.lp.add_var(-2.0, f64::NEG_INFINITY, f64::INFINITY);
        mip.lp.add_named_constraint("cap", vec![(x, 1.0), (y, -1.5)], Relation::Le, 1.0);
        let text = write_lp_format(&mip);
        assert_eq!(
            text,
            "\\ offset: 0\nMaximize\n obj: 3 pick - 2 x1\nSubject To\n cap: 1 pick - 1.5 x1 <= 1\n\
             Bounds\n 0 <= pick <= 1\n x1 free\nBinary\n pick\nEnd\n"
        );
    }
}
