//! Queries, tuples and instances.
//!
//! A query is a conjunction of atoms over variables and constants. Tuples are
//! ground atoms and an instance is a finite set of tuples. Queries keep the
//! textual order of their (deduplicated) atoms so that atoms can be addressed
//! by index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ModelError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// Checks that every predicate is used with a single arity.
fn check_arities<'a>(
    items: impl IntoIterator<Item = (&'a str, usize)>,
) -> Result<BTreeMap<String, usize>, ModelError> {
    let mut arities = BTreeMap::new();
    for (pred, arity) in items {
        match arities.get(pred) {
            Some(&known) if known != arity => {
                return Err(ModelError::ArityConflict {
                    predicate: pred.to_string(),
                    first: known,
                    second: arity,
                })
            }
            Some(_) => {}
            None => {
                arities.insert(pred.to_string(), arity);
            }
        }
    }
    Ok(arities)
}

/// A Boolean conjunctive query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    atoms: Vec<Atom>,
}

impl Query {
    /// Builds a query, collapsing duplicate atoms while keeping first occurrences in order.
    pub fn new(atoms: Vec<Atom>) -> Result<Self, ModelError> {
        if atoms.is_empty() {
            return Err(ModelError::EmptyQuery);
        }
        check_arities(atoms.iter().map(|a| (a.predicate.as_str(), a.arity())))?;
        let mut seen = BTreeSet::new();
        let atoms = atoms
            .into_iter()
            .filter(|a| seen.insert(a.clone()))
            .collect();
        Ok(Query { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> Option<&Atom> {
        self.atoms.get(index)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in self.atoms.iter().flat_map(Atom::vars) {
            if seen.insert(v) {
                out.push(v.to_string());
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.atoms
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    pub fn arities(&self) -> BTreeMap<String, usize> {
        check_arities(self.atoms.iter().map(|a| (a.predicate.as_str(), a.arity())))
            .expect("validated on construction")
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for atom in &self.atoms {
            writeln!(f, "{atom}.")?;
        }
        Ok(())
    }
}

/// A ground atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Tuple {
    pub fn new<S: Into<String>>(predicate: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        Tuple {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(
            self.predicate.clone(),
            self.args.iter().cloned().map(Term::Const).collect(),
        )
    }
}

impl TryFrom<Atom> for Tuple {
    type Error = ModelError;

    fn try_from(atom: Atom) -> Result<Self, Self::Error> {
        let mut args = Vec::with_capacity(atom.args.len());
        for t in atom.args {
            match t {
                Term::Const(c) => args.push(c),
                Term::Var(v) => return Err(ModelError::NotGround { variable: v }),
            }
        }
        Ok(Tuple {
            predicate: atom.predicate,
            args,
        })
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

/// A finite set of tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    tuples: BTreeSet<Tuple>,
}

impl Instance {
    pub fn new(tuples: impl IntoIterator<Item = Tuple>) -> Result<Self, ModelError> {
        let tuples: BTreeSet<Tuple> = tuples.into_iter().collect();
        check_arities(tuples.iter().map(|t| (t.predicate.as_str(), t.arity())))?;
        Ok(Instance { tuples })
    }

    /// Builds an instance from tuples already known to be arity-consistent.
    pub(crate) fn from_set(tuples: BTreeSet<Tuple>) -> Self {
        Instance { tuples }
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn contains(&self, tuple: &Tuple) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.tuples
            .iter()
            .flat_map(|t| t.args.iter().cloned())
            .collect()
    }

    /// `self ∖ {tuple}`.
    pub fn without(&self, tuple: &Tuple) -> Instance {
        let mut tuples = self.tuples.clone();
        tuples.remove(tuple);
        Instance { tuples }
    }

    pub fn with(&self, tuple: Tuple) -> Result<Instance, ModelError> {
        Instance::new(self.tuples.iter().cloned().chain(std::iter::once(tuple)))
    }
}

impl FromIterator<Tuple> for Instance {
    /// Panics on arity conflicts; use [`Instance::new`] for untrusted input.
    fn from_iter<T: IntoIterator<Item = Tuple>>(iter: T) -> Self {
        Instance::new(iter).expect("arity-consistent tuples")
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tuples {
            writeln!(f, "{t}.")?;
        }
        Ok(())
    }
}
