//! Canonical candidate assignments: total maps from query variables to the
//! constants of `τ` and `Q` plus fresh constants, one per class of maps that
//! differ only by a renaming of fresh constants.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::hom::{Homomorphism, Pin};
use crate::model::{Query, Tuple};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainValue {
    Const(String),
    /// The k-th fresh constant, k ≥ 1.
    Fresh(u32),
}

impl fmt::Display for DomainValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainValue::Const(c) => f.write_str(c),
            DomainValue::Fresh(k) => write!(f, "fresh({k})"),
        }
    }
}

/// A total map from variables (in a fixed order) to domain values, with fresh
/// indices numbered in order of first use.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CandidateAssignment {
    entries: Vec<(String, DomainValue)>,
}

impl CandidateAssignment {
    /// Renumbers fresh values by first use along `entries`' order.
    pub fn canonical(entries: Vec<(String, DomainValue)>) -> Self {
        let mut seen: Vec<u32> = Vec::new();
        let entries = entries
            .into_iter()
            .map(|(v, d)| match d {
                DomainValue::Fresh(k) => {
                    let idx = match seen.iter().position(|&s| s == k) {
                        Some(i) => i,
                        None => {
                            seen.push(k);
                            seen.len() - 1
                        }
                    };
                    (v, DomainValue::Fresh(idx as u32 + 1))
                }
                c => (v, c),
            })
            .collect();
        CandidateAssignment { entries }
    }

    pub fn entries(&self) -> &[(String, DomainValue)] {
        &self.entries
    }

    pub fn get(&self, var: &str) -> Option<&DomainValue> {
        self.entries.iter().find(|(v, _)| v == var).map(|(_, d)| d)
    }

    pub fn fresh_count(&self) -> u32 {
        self.entries
            .iter()
            .filter_map(|(_, d)| match d {
                DomainValue::Fresh(k) => Some(*k),
                DomainValue::Const(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Materializes fresh values as constants named by [`fresh_name`].
    pub fn to_homomorphism(&self, taken: &BTreeSet<String>) -> Homomorphism {
        self.entries
            .iter()
            .map(|(v, d)| {
                let c = match d {
                    DomainValue::Const(c) => c.clone(),
                    DomainValue::Fresh(k) => fresh_name(*k, taken),
                };
                (v.clone(), c)
            })
            .collect()
    }
}

impl fmt::Display for CandidateAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, d)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "?{v}↦{d}")?;
        }
        f.write_str("}")
    }
}

/// Name of the k-th fresh constant: `f{k}`, underscore-prefixed until it avoids `taken`.
pub fn fresh_name(k: u32, taken: &BTreeSet<String>) -> String {
    let mut name = format!("f{k}");
    while taken.contains(&name) {
        name.insert(0, '_');
    }
    name
}

/// Constants of `τ`, of the query and of the pin, sorted.
pub(crate) fn base_constants(query: &Query, tau: &Tuple, pin: &Pin) -> Vec<String> {
    let mut set: BTreeSet<String> = tau.args.iter().cloned().collect();
    set.extend(query.constants());
    set.extend(pin.iter().map(|(_, c)| c.to_string()));
    set.into_iter().collect()
}

/// Streams canonical candidates extending `pin`, with variables in first-occurrence order.
///
/// Values are tried base constants first (sorted), then the fresh constants
/// already in use, then one new fresh constant.
pub fn candidate_assignments(query: &Query, pin: &Pin, tau: &Tuple) -> Candidates {
    let vars = query.vars();
    let base = base_constants(query, tau, pin);
    let fixed = vars
        .iter()
        .map(|v| pin.get(v).map(|c| base.binary_search_by(|b| b.as_str().cmp(c)).expect("pin value in base") as u32))
        .collect::<Vec<_>>();
    let free = fixed.iter().filter(|f| f.is_none()).count();
    Candidates {
        vars,
        base,
        fixed,
        digits: vec![0; free],
        done: false,
    }
}

/// Iterator returned by [`candidate_assignments`].
#[derive(Clone, Debug)]
pub struct Candidates {
    vars: Vec<String>,
    base: Vec<String>,
    fixed: Vec<Option<u32>>,
    /// One digit per free variable: `< base.len()` is a base constant,
    /// `base.len() + k - 1` is fresh(k).
    digits: Vec<u32>,
    done: bool,
}

impl Candidates {
    fn limit(&self, pos: usize) -> u32 {
        let b = self.base.len() as u32;
        let used = self.digits[..pos].iter().filter(|&&d| d >= b).map(|&d| d - b + 1).max().unwrap_or(0);
        b + used + 1
    }

    fn current(&self) -> CandidateAssignment {
        let b = self.base.len() as u32;
        let mut free_iter = self.digits.iter();
        let entries = self
            .vars
            .iter()
            .zip(&self.fixed)
            .map(|(v, f)| {
                let d = match f {
                    Some(c) => DomainValue::Const(self.base[*c as usize].clone()),
                    None => {
                        let d = *free_iter.next().expect("one digit per free var");
                        if d < b {
                            DomainValue::Const(self.base[d as usize].clone())
                        } else {
                            DomainValue::Fresh(d - b + 1)
                        }
                    }
                };
                (v.clone(), d)
            })
            .collect();
        CandidateAssignment { entries }
    }
}

impl Iterator for Candidates {
    type Item = CandidateAssignment;

    fn next(&mut self) -> Option<CandidateAssignment> {
        if self.done {
            return None;
        }
        let out = self.current();
        // advance the restricted-growth odometer
        let mut pos = self.digits.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            if self.digits[pos] + 1 < self.limit(pos) {
                self.digits[pos] += 1;
                for d in &mut self.digits[pos + 1..] {
                    *d = 0;
                }
                break;
            }
        }
        Some(out)
    }
}
