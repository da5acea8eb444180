//! Free-format MPS writer for cross-checking problems with external tools.
//!
//! Layout: `NAME`, `ROWS` (`N obj`, `E e<i>` per equality, `L l<i>` per
//! inequality), `COLUMNS` (`x<j> <row> <coeff>`, column-major), `RHS`, and
//! `BOUNDS` using `FR`, `MI`, `PL`, `FX`, `LO`, `UP` as appropriate. Default
//! MPS bounds are `[0, +inf)`, so variables with exactly those bounds emit no
//! `BOUNDS` line. Numbers are written with Rust's shortest round-trip `{:e}`
//! formatting, so the dump is lossless.

use std::io::{self, Write};

use super::LpProblem;

pub fn write_mps<W: Write>(problem: &LpProblem, name: &str, mut out: W) -> io::Result<()> {
    let n = problem.num_vars();
    writeln!(out, "NAME {name}")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N obj")?;
    for i in 0..problem.num_eq() {
        writeln!(out, " E e{i}")?;
    }
    for i in 0..problem.num_ub() {
        writeln!(out, " L l{i}")?;
    }

    let mut cols: Vec<Vec<(String, f64)>> = vec![Vec::new(); n];
    for (j, &c) in problem.objective().iter().enumerate() {
        if c != 0.0 {
            cols[j].push(("obj".to_string(), c));
        }
    }
    for (i, row) in problem.eq_rows().iter().enumerate() {
        for &(j, a) in row {
            cols[j].push((format!("e{i}"), a));
        }
    }
    for (i, row) in problem.ub_rows().iter().enumerate() {
        for &(j, a) in row {
            cols[j].push((format!("l{i}"), a));
        }
    }
    writeln!(out, "COLUMNS")?;
    for (j, entries) in cols.iter().enumerate() {
        for (row, a) in entries {
            writeln!(out, " x{j} {row} {a:e}")?;
        }
    }

    writeln!(out, "RHS")?;
    for (i, b) in problem.eq_rhs().iter().enumerate() {
        if *b != 0.0 {
            writeln!(out, " rhs e{i} {b:e}")?;
        }
    }
    for (i, b) in problem.ub_rhs().iter().enumerate() {
        if *b != 0.0 {
            writeln!(out, " rhs l{i} {b:e}")?;
        }
    }

    writeln!(out, "BOUNDS")?;
    for j in 0..n {
        let (lo, hi) = (problem.lower()[j], problem.upper()[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " FR bnd x{j}")?,
            (true, true) if lo == hi => writeln!(out, " FX bnd x{j} {lo:e}")?,
            (false, true) => {
                writeln!(out, " MI bnd x{j}")?;
                writeln!(out, " UP bnd x{j} {hi:e}")?;
            }
            (true, fin_hi) => {
                if lo != 0.0 {
                    writeln!(out, " LO bnd x{j} {lo:e}")?;
                }
                if fin_hi {
                    writeln!(out, " UP bnd x{j} {hi:e}")?;
                }
            }
        }
    }
    writeln!(out, "ENDATA")
}
