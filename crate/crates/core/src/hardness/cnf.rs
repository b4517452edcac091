//! 3-CNF formulas and a small DIMACS reader.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Literal: 1-based variable and negation flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// Truth value under a boolean assignment (`assignment[v - 1]`).
    pub fn holds(&self, assignment: &[bool]) -> bool {
        assignment[self.var - 1] != self.negated
    }

    fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    p: usize,
    clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(p: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        let mut out = Vec::with_capacity(clauses.len());
        for (i, c) in clauses.into_iter().enumerate() {
            let Ok(c) = <[Literal; 3]>::try_from(c.clone()) else {
                return Err(Error::Width { clause: i + 1, width: c.len() });
            };
            if let Some(l) = c.iter().find(|l| l.var == 0 || l.var > p) {
                return Err(Error::Parse(format!("clause {}: variable {} outside 1..{p}", i + 1, l.var)));
            }
            out.push(c);
        }
        Ok(CnfFormula { p, clauses: out })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    /// Parses DIMACS `p cnf V C` text. Clauses may span lines and end with `0`;
    /// `c` lines are comments and a `%` line ends the clause list.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                match parts.as_slice() {
                    ["p", "cnf", v, c] => {
                        let v = v.parse().map_err(|_| Error::Parse(format!("bad variable count {v:?}")))?;
                        let c = c.parse().map_err(|_| Error::Parse(format!("bad clause count {c:?}")))?;
                        header = Some((v, c));
                    }
                    _ => return Err(Error::Parse(format!("bad DIMACS header {line:?}"))),
                }
                continue;
            }
            if header.is_none() {
                return Err(Error::Parse("clause before the `p cnf` header".into()));
            }
            for tok in line.split_whitespace() {
                let v: i64 = tok.parse().map_err(|_| Error::Parse(format!("bad literal {tok:?}")))?;
                if v == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    let var = v.unsigned_abs() as usize;
                    current.push(Literal { var, negated: v < 0 });
                }
            }
        }
        let (p, count) = header.ok_or_else(|| Error::Parse("missing `p cnf` header".into()))?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != count {
            return Err(Error::Parse(format!("header announces {count} clauses, found {}", clauses.len())));
        }
        CnfFormula::new(p, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.p, self.clauses.len());
        for c in &self.clauses {
            let _ = writeln!(s, "{} {} {} 0", c[0].to_dimacs(), c[1].to_dimacs(), c[2].to_dimacs());
        }
        s
    }
}
