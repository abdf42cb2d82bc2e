//! CPLEX LP text format export, for cross-checking with external solvers.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::LinearProgram;

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]()".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn term(out: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else if first {
        let _ = write!(out, " {} {}", coef, name);
    } else {
        let _ = write!(out, " + {} {}", coef, name);
    }
}

/// Writes the program in CPLEX LP format.
pub fn write_lp_format<W: Write>(lp: &LinearProgram, mut w: W) -> io::Result<()> {
    let names: Vec<String> = lp.vars().iter().map(|v| sanitize(&v.name)).collect();
    let mut line = String::from("obj:");
    let mut first = true;
    for (v, name) in lp.vars().iter().zip(&names) {
        if v.cost != 0.0 {
            term(&mut line, v.cost, name, first);
            first = false;
        }
    }
    if first {
        line.push_str(" 0");
    }
    writeln!(w, "\\ generated by storeplan")?;
    writeln!(w, "Minimize")?;
    writeln!(w, " {line}")?;
    writeln!(w, "Subject To")?;
    for r in lp.rows() {
        let mut line = format!(" {}:", sanitize(&r.name));
        let mut first = true;
        for &(v, a) in &r.coeffs {
            term(&mut line, a, &names[v.0], first);
            first = false;
        }
        if first {
            line.push_str(" 0");
        }
        let _ = write!(line, " {} {}", r.relation, r.rhs);
        writeln!(w, "{line}")?;
    }
    writeln!(w, "Bounds")?;
    for (v, name) in lp.vars().iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => writeln!(w, " {name} = {}", v.lower)?,
            (true, true) => writeln!(w, " {} <= {name} <= {}", v.lower, v.upper)?,
            (true, false) if v.lower == 0.0 => {}
            (true, false) => writeln!(w, " {name} >= {}", v.lower)?,
            (false, true) => writeln!(w, " -inf <= {name} <= {}", v.upper)?,
            (false, false) => writeln!(w, " {name} free")?,
        }
    }
    writeln!(w, "End")?;
    Ok(())
}

impl LinearProgram {
    /// Renders the program in CPLEX LP format.
    pub fn to_lp_string(&self) -> String {
        let mut buf = Vec::new();
        write_lp_format(self, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("LP format output is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn renders_sections_and_bounds() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x[1]", 0.0, f64::INFINITY, 2.0);
        let y = lp.add_var("y flow", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        let z = lp.add_var("z", 1.0, 4.0, 0.0);
        lp.add_row("bal", vec![(x, 1.0), (y, -1.0), (z, 0.5)], Relation::Eq, 3.0);
        let text = lp.to_lp_string();
        assert!(text.contains("Minimize\n obj: 2 x[1] - 1 y_flow\n"));
        assert!(text.contains(" bal: 1 x[1] - 1 y_flow + 0.5 z = 3\n"));
        assert!(text.contains(" y_flow free\n"));
        assert!(text.contains(" 1 <= z <= 4\n"));
        assert!(text.ends_with("End\n"));
    }
}
