//! ∀∃ quantified 3-CNF formulas and propositional assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::ModelError;

/// Propositional variable id, as in QDIMACS.
pub type PropVar = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: PropVar,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: PropVar) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: PropVar) -> Self {
        Literal {
            var,
            positive: false,
        }
    }

    pub fn eval(&self, value: bool) -> bool {
        value == self.positive
    }

    fn from_dimacs(lit: i64) -> Self {
        Literal {
            var: lit.unsigned_abs() as PropVar,
            positive: lit > 0,
        }
    }

    fn to_dimacs(self) -> i64 {
        if self.positive {
            i64::from(self.var)
        } else {
            -i64::from(self.var)
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = [Literal; 3];

/// `∀ universals ∃ existentials . ⋀ clauses`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QbfFormula {
    universals: Vec<PropVar>,
    existentials: Vec<PropVar>,
    clauses: Vec<Clause>,
    normalized: bool,
}

impl QbfFormula {
    pub fn new(
        universals: Vec<PropVar>,
        existentials: Vec<PropVar>,
        clauses: Vec<Clause>,
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for &v in universals.iter().chain(&existentials) {
            if v == 0 {
                return Err(ModelError::InvalidQbf("variable id 0 is reserved".into()));
            }
            if !seen.insert(v) {
                return Err(ModelError::InvalidQbf(format!(
                    "variable {v} is quantified more than once"
                )));
            }
        }
        for clause in &clauses {
            for lit in clause {
                if !seen.contains(&lit.var) {
                    return Err(ModelError::InvalidQbf(format!(
                        "variable {} is not quantified",
                        lit.var
                    )));
                }
            }
        }
        let normalized = Self::compute_normalized(&universals, &clauses);
        Ok(QbfFormula {
            universals,
            existentials,
            clauses,
            normalized,
        })
    }

    fn compute_normalized(universals: &[PropVar], clauses: &[Clause]) -> bool {
        universals.iter().all(|&u| {
            let lits = clauses.iter().flatten().filter(|l| l.var == u);
            let (mut pos, mut neg) = (false, false);
            for l in lits {
                pos |= l.positive;
                neg |= !l.positive;
            }
            pos && neg
        })
    }

    pub fn universals(&self) -> &[PropVar] {
        &self.universals
    }

    pub fn existentials(&self) -> &[PropVar] {
        &self.existentials
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Every universal variable occurs both positively and negatively.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_universal(&self, v: PropVar) -> bool {
        self.universals.contains(&v)
    }

    /// Evaluates the matrix under a total assignment.
    pub fn satisfied_by(&self, assignment: &Assignment) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|lit| {
                lit.eval(
                    assignment
                        .get(lit.var)
                        .expect("assignment covers every clause variable"),
                )
            })
        })
    }

    pub(crate) fn with_clauses(&self, clauses: Vec<Clause>) -> Self {
        let normalized = Self::compute_normalized(&self.universals, &clauses);
        QbfFormula {
            universals: self.universals.clone(),
            existentials: self.existentials.clone(),
            clauses,
            normalized,
        }
    }

    fn max_var(&self) -> PropVar {
        self.universals
            .iter()
            .chain(&self.existentials)
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Prints the QDIMACS subset accepted by [`crate::parse::parse_qbf`].
impl fmt::Display for QbfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.max_var(), self.clauses.len())?;
        if !self.universals.is_empty() {
            f.write_str("a")?;
            for u in &self.universals {
                write!(f, " {u}")?;
            }
            writeln!(f, " 0")?;
        }
        if !self.existentials.is_empty() {
            f.write_str("e")?;
            for v in &self.existentials {
                write!(f, " {v}")?;
            }
            writeln!(f, " 0")?;
        }
        for clause in &self.clauses {
            writeln!(f, "{} {} {} 0", clause[0], clause[1], clause[2])?;
        }
        Ok(())
    }
}

pub(crate) fn literal_from_dimacs(lit: i64) -> Literal {
    Literal::from_dimacs(lit)
}

/// A truth assignment to propositional variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<PropVar, bool>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    /// The assignment of `vars` whose i-th variable takes the i-th most significant bit of `bits`.
    pub fn from_bits(vars: &[PropVar], bits: u64) -> Self {
        let n = vars.len();
        Assignment(
            vars.iter()
                .enumerate()
                .map(|(i, &v)| (v, bits >> (n - 1 - i) & 1 == 1))
                .collect(),
        )
    }

    pub fn get(&self, var: PropVar) -> Option<bool> {
        self.0.get(&var).copied()
    }

    pub fn set(&mut self, var: PropVar, value: bool) {
        self.0.insert(var, value);
    }

    pub fn vars(&self) -> impl Iterator<Item = PropVar> + '_ {
        self.0.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PropVar, bool)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True iff the assignment is defined on exactly `scope`.
    pub fn is_total_over(&self, scope: &[PropVar]) -> bool {
        self.0.len() == scope.len() && scope.iter().all(|v| self.0.contains_key(v))
    }

    pub fn extended(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(&k, &v)| (k, v)));
        out
    }

    pub fn restricted(&self, scope: &[PropVar]) -> Assignment {
        Assignment(
            self.0
                .iter()
                .filter(|(k, _)| scope.contains(k))
                .map(|(&k, &v)| (k, v))
                .collect(),
        )
    }
}

impl FromIterator<(PropVar, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (PropVar, bool)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, b)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={}", if *b { "T" } else { "F" })?;
        }
        f.write_str("}")
    }
}
