//! DIMACS CNF reading and writing, restricted to 3-literal clauses.
//!
//! Writer output carries optional metadata comments:
//!
//! ```text
//! c seed 7
//! c solutions 1
//! c solution 0110100101
//! p cnf 10 30
//! 1 -4 7 0
//! ```
//!
//! The solution bitstring is written `b_n ... b_1`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::sat::{Assignment, Clause, Formula, InstanceRecord, Literal, SatError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing 'p cnf' header")]
    MissingHeader,
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("invalid formula: {0}")]
    Formula(#[from] SatError),
}

/// Metadata carried in comment lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DimacsMeta {
    pub seed: Option<u64>,
    pub solutions: Option<u64>,
    pub solution: Option<Assignment>,
}

impl From<&InstanceRecord> for DimacsMeta {
    fn from(r: &InstanceRecord) -> Self {
        DimacsMeta { seed: Some(r.seed), solutions: Some(r.solution_count), solution: r.solution }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> DimacsError {
    DimacsError::Parse { line, msg: msg.into() }
}

pub fn parse_dimacs(text: &str) -> Result<Formula, DimacsError> {
    parse_dimacs_with_meta(text).map(|(f, _)| f)
}

pub fn parse_dimacs_with_meta(text: &str) -> Result<(Formula, DimacsMeta), DimacsError> {
    let mut meta = DimacsMeta::default();
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    // literals of a clause may span lines; the terminating 0 closes it
    let mut pending: Vec<(i64, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                return Err(perr(line_no, "unexpected token"));
            }
            parse_comment(rest.trim(), line_no, &mut meta)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if header.is_some() {
                return Err(perr(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(perr(line_no, "malformed header, expected 'p cnf <vars> <clauses>'"));
            }
            let n = parts[1].parse().map_err(|_| perr(line_no, "bad variable count"))?;
            let m = parts[2].parse().map_err(|_| perr(line_no, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(perr(line_no, "clause before 'p cnf' header"));
        };
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| perr(line_no, format!("bad literal '{tok}'")))?;
            if v == 0 {
                if pending.len() != 3 {
                    return Err(perr(
                        line_no,
                        format!("clause has {} literals, expected 3", pending.len()),
                    ));
                }
                let mut lits = [Literal::pos(0); 3];
                for (slot, &(lit, ln)) in lits.iter_mut().zip(&pending) {
                    let var = lit.unsigned_abs() as usize;
                    if var > n {
                        return Err(perr(ln, format!("variable {var} out of range 1..={n}")));
                    }
                    *slot = Literal { var: var - 1, negated: lit < 0 };
                }
                clauses.push(Clause::new(lits));
                pending.clear();
            } else {
                pending.push((v, line_no));
            }
        }
    }
    if !pending.is_empty() {
        let line = pending[0].1;
        return Err(perr(line, "unterminated clause"));
    }
    let (n, m) = header.ok_or(DimacsError::MissingHeader)?;
    if clauses.len() != m {
        return Err(DimacsError::ClauseCount { declared: m, found: clauses.len() });
    }
    Ok((Formula::new(n, clauses)?, meta))
}

fn parse_comment(body: &str, line: usize, meta: &mut DimacsMeta) -> Result<(), DimacsError> {
    let mut it = body.split_whitespace();
    match (it.next(), it.next()) {
        (Some("seed"), Some(v)) => {
            meta.seed = Some(v.parse().map_err(|_| perr(line, "bad seed"))?);
        }
        (Some("solutions"), Some(v)) => {
            meta.solutions = Some(v.parse().map_err(|_| perr(line, "bad solution count"))?);
        }
        (Some("solution"), Some(v)) => {
            meta.solution = Some(Assignment::from_bitstring(v).ok_or_else(|| perr(line, "bad solution bitstring"))?);
        }
        // free-form comment
        _ => {}
    }
    Ok(())
}

pub fn serialize_dimacs(formula: &Formula, meta: &DimacsMeta) -> String {
    let mut out = String::new();
    if let Some(seed) = meta.seed {
        let _ = writeln!(out, "c seed {seed}");
    }
    if let Some(r) = meta.solutions {
        let _ = writeln!(out, "c solutions {r}");
    }
    if let Some(sol) = meta.solution {
        let _ = writeln!(out, "c solution {}", sol.to_bitstring(formula.num_vars()));
    }
    let _ = writeln!(out, "p cnf {} {}", formula.num_vars(), formula.num_clauses());
    for c in formula.clauses() {
        let [a, b, d] = c.literals();
        let _ = writeln!(out, "{} {} {} 0", a.to_dimacs(), b.to_dimacs(), d.to_dimacs());
    }
    out
}
