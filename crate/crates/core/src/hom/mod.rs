//! Homomorphisms from queries to instances.

mod engine;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

pub(crate) use engine::{search, CompiledAtom, CompiledQuery, IndexedInstance, Slot};
pub use engine::SearchMode;

use crate::budget::Budget;
use crate::error::HomError;
use crate::model::{Atom, Instance, Query, Term, Tuple};

/// A map from query variables to constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Homomorphism(BTreeMap<String, String>);

impl Homomorphism {
    pub fn new() -> Self {
        Homomorphism(BTreeMap::new())
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn set(&mut self, var: impl Into<String>, value: impl Into<String>) {
        self.0.insert(var.into(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Image of a term; constants map to themselves.
    pub fn term(&self, term: &Term) -> Option<String> {
        match term {
            Term::Const(c) => Some(c.clone()),
            Term::Var(v) => self.0.get(v).cloned(),
        }
    }

    /// Image of an atom, if every variable of it is mapped.
    pub fn image(&self, atom: &Atom) -> Option<Tuple> {
        let args = atom
            .args
            .iter()
            .map(|t| self.term(t))
            .collect::<Option<Vec<_>>>()?;
        Some(Tuple {
            predicate: atom.predicate.clone(),
            args,
        })
    }

    /// True iff this map agrees with `pin` on every pinned variable.
    pub fn extends(&self, pin: &Pin) -> bool {
        pin.iter().all(|(v, c)| self.get(v) == Some(c))
    }
}

impl FromIterator<(String, String)> for Homomorphism {
    fn from_iter<T: IntoIterator<Item = (String, String)>>(iter: T) -> Self {
        Homomorphism(iter.into_iter().collect())
    }
}

/// A partial binding of variables to constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Pin(BTreeMap<String, String>);

impl Pin {
    pub fn empty() -> Self {
        Pin::default()
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Adds a binding; false if the variable is already bound elsewhere.
    pub fn bind(&mut self, var: &str, value: &str) -> bool {
        match self.0.get(var) {
            Some(existing) => existing == value,
            None => {
                self.0.insert(var.to_string(), value.to_string());
                true
            }
        }
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Pin {
    /// Later bindings of the same variable overwrite earlier ones.
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Pin(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// The binding that sends `atom` onto `tuple`, if there is one.
pub fn unify_atom_tuple(atom: &Atom, tuple: &Tuple) -> Option<Pin> {
    if atom.predicate != tuple.predicate || atom.arity() != tuple.arity() {
        return None;
    }
    let mut pin = Pin::empty();
    for (term, value) in atom.args.iter().zip(&tuple.args) {
        match term {
            Term::Const(c) if c != value => return None,
            Term::Const(_) => {}
            Term::Var(v) => {
                if !pin.bind(v, value) {
                    return None;
                }
            }
        }
    }
    Some(pin)
}

/// The set of images of the query's atoms.
pub fn apply_hom(h: &Homomorphism, query: &Query) -> Result<Instance, HomError> {
    let mut out = BTreeSet::new();
    for atom in query.atoms() {
        match h.image(atom) {
            Some(t) => {
                out.insert(t);
            }
            None => {
                let missing = atom.vars().find(|v| h.get(v).is_none()).expect("unmapped var");
                return Err(HomError::NotTotal(missing.to_string()));
            }
        }
    }
    Ok(Instance::from_set(out))
}

/// True iff `h` maps every atom of the query to a tuple of the instance.
pub fn verify_hom(h: &Homomorphism, query: &Query, instance: &Instance) -> bool {
    query
        .atoms()
        .iter()
        .all(|a| h.image(a).is_some_and(|t| instance.contains(&t)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub budget: Budget,
}

impl SearchOptions {
    pub fn fast() -> Self {
        SearchOptions {
            mode: SearchMode::Fast,
            budget: Budget::UNLIMITED,
        }
    }
}

/// Predicate interning shared between a query and the instances it is checked against.
#[derive(Clone, Debug, Default)]
pub(crate) struct PredTable {
    ids: HashMap<String, u32>,
}

impl PredTable {
    pub(crate) fn id(&mut self, name: &str) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(name.to_string()).or_insert(next)
    }

    pub(crate) fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub(crate) fn len(&self) -> usize {
        self.ids.len()
    }
}

/// Compiles a query with variables numbered by position in `vars`.
/// `None` if some constant of the query has no id.
pub(crate) fn compile_query(
    query: &Query,
    vars: &[String],
    preds: &mut PredTable,
    const_id: impl Fn(&str) -> Option<u32>,
) -> Option<CompiledQuery> {
    let var_ids: HashMap<&str, u32> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i as u32))
        .collect();
    let mut atoms = Vec::with_capacity(query.len());
    for atom in query.atoms() {
        let slots = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Some(Slot::Var(var_ids[v.as_str()])),
                Term::Const(c) => const_id(c).map(Slot::Const),
            })
            .collect::<Option<Vec<_>>>()?;
        atoms.push(CompiledAtom::new(preds.id(&atom.predicate), slots));
    }
    Some(CompiledQuery::new(vars.len(), atoms))
}

/// Some homomorphism from `query` to `instance` extending `pin`: the
/// lexicographically least one under first-occurrence variable order and
/// lexicographic constant order.
pub fn find_hom(query: &Query, instance: &Instance, pin: &Pin) -> Result<Option<Homomorphism>, HomError> {
    find_hom_with(query, instance, pin, &SearchOptions::default())
}

pub fn find_hom_with(
    query: &Query,
    instance: &Instance,
    pin: &Pin,
    options: &SearchOptions,
) -> Result<Option<Homomorphism>, HomError> {
    let vars = query.vars();
    for (v, _) in pin.iter() {
        if !vars.iter().any(|q| q == v) {
            return Err(HomError::PinOutsideQuery(v.to_string()));
        }
    }
    let consts: Vec<String> = instance.constants().into_iter().collect();
    let const_id = |c: &str| consts.binary_search_by(|k| k.as_str().cmp(c)).ok().map(|i| i as u32);

    let mut preds = PredTable::default();
    let Some(compiled) = compile_query(query, &vars, &mut preds, const_id) else {
        return Ok(None);
    };
    let mut pinned = Vec::with_capacity(pin.len());
    for (v, c) in pin.iter() {
        let Some(id) = const_id(c) else {
            return Ok(None);
        };
        let var = vars.iter().position(|q| q == v).expect("checked above") as u32;
        pinned.push((var, id));
    }

    let rows: Vec<(u32, Vec<u32>)> = instance
        .tuples()
        .filter_map(|t| {
            let p = preds.get(&t.predicate)?;
            Some((p, t.args.iter().map(|a| const_id(a).expect("instance constant")).collect()))
        })
        .collect();
    let indexed = IndexedInstance::build(
        preds.len(),
        consts.len(),
        rows.iter().map(|(p, a)| (*p, a.as_slice())),
    );
    let meter = options.budget.start();
    let found = search(&compiled, &indexed, &pinned, options.mode, &meter)?;
    Ok(found.map(|values| {
        vars.iter()
            .zip(values)
            .map(|(v, c)| (v.clone(), consts[c as usize].clone()))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::BudgetExceeded;
    use crate::parse::{parse_instance, parse_query, parse_tuple};

    fn counterexample() -> Query {
        parse_query("R(?x,?y,?z,?z). R(?x,?x,?y,?y).").unwrap()
    }

    fn hom(pairs: &[(&str, &str)]) -> Homomorphism {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn unify_examples() {
        let g = parse_query("R(?z,?zp,?y,?yp)").unwrap().atoms()[0].clone();
        let pin = unify_atom_tuple(&g, &parse_tuple("R(0,0,1,2)").unwrap()).unwrap();
        assert_eq!(pin, Pin::from_iter([("z", "0"), ("zp", "0"), ("y", "1"), ("yp", "2")]));

        let xx = parse_query("R(?x,?x)").unwrap().atoms()[0].clone();
        assert_eq!(unify_atom_tuple(&xx, &parse_tuple("R(0,1)").unwrap()), None);
        assert!(unify_atom_tuple(&xx, &parse_tuple("R(1,1)").unwrap()).is_some());

        let xy = parse_query("R(?x,?y)").unwrap().atoms()[0].clone();
        assert_eq!(unify_atom_tuple(&xy, &parse_tuple("S(0,1)").unwrap()), None);
        assert_eq!(unify_atom_tuple(&xy, &parse_tuple("R(0)").unwrap()), None);

        let with_const = parse_query("R(a,?x)").unwrap().atoms()[0].clone();
        assert_eq!(unify_atom_tuple(&with_const, &parse_tuple("R(b,c)").unwrap()), None);
        assert_eq!(
            unify_atom_tuple(&with_const, &parse_tuple("R(a,c)").unwrap()),
            Some(Pin::from_iter([("x", "c")]))
        );
    }

    #[test]
    fn counterexample_homs() {
        let q = counterexample();
        let full = parse_instance("R(a,b,c,c). R(a,a,b,b).").unwrap();
        let h = find_hom(&q, &full, &Pin::empty()).unwrap().unwrap();
        assert_eq!(h, hom(&[("x", "a"), ("y", "b"), ("z", "c")]));

        let without = parse_instance("R(a,b,c,c).").unwrap();
        assert_eq!(find_hom(&q, &without, &Pin::empty()).unwrap(), None);

        let pin = unify_atom_tuple(&q.atoms()[0], &parse_tuple("R(a,a,b,b)").unwrap()).unwrap();
        assert_eq!(pin, Pin::from_iter([("x", "a"), ("y", "a"), ("z", "b")]));
        assert_eq!(find_hom(&q, &full, &pin).unwrap(), None);
    }

    #[test]
    fn apply_and_verify() {
        let q = counterexample();
        let h = hom(&[("x", "a"), ("y", "b"), ("z", "c")]);
        let image = apply_hom(&h, &q).unwrap();
        assert_eq!(image, parse_instance("R(a,b,c,c). R(a,a,b,b).").unwrap());
        assert!(verify_hom(&h, &q, &image));
        assert!(!verify_hom(&h, &q, &image.without(&parse_tuple("R(a,a,b,b)").unwrap())));

        let ground = parse_query("S(a,b). T(c).").unwrap();
        assert_eq!(
            apply_hom(&Homomorphism::new(), &ground).unwrap(),
            parse_instance("S(a,b). T(c).").unwrap()
        );

        let e = parse_query("E(?x,?y)").unwrap();
        let collapse = hom(&[("x", "c"), ("y", "c")]);
        assert_eq!(apply_hom(&collapse, &e).unwrap(), parse_instance("E(c,c)").unwrap());

        assert_eq!(
            apply_hom(&hom(&[("x", "c")]), &e),
            Err(HomError::NotTotal("y".into()))
        );
        assert!(!verify_hom(&hom(&[("x", "c")]), &e, &parse_instance("E(c,c)").unwrap()));
    }

    #[test]
    fn constants_and_missing_predicates() {
        let q = parse_query("R(a,?x). S(?x)").unwrap();
        let i = parse_instance("R(a,b). R(c,d). S(d).").unwrap();
        assert_eq!(find_hom(&q, &i, &Pin::empty()).unwrap(), None);
        let i2 = i.with(parse_tuple("S(b)").unwrap()).unwrap();
        assert_eq!(find_hom(&q, &i2, &Pin::empty()).unwrap(), Some(hom(&[("x", "b")])));
        // constant absent from the instance
        let q2 = parse_query("R(z,?x)").unwrap();
        assert_eq!(find_hom(&q2, &i, &Pin::empty()).unwrap(), None);
        // predicate absent
        let q3 = parse_query("T(?x)").unwrap();
        assert_eq!(find_hom(&q3, &i, &Pin::empty()).unwrap(), None);
    }

    #[test]
    fn pins() {
        let q = parse_query("E(?x,?y)").unwrap();
        let i = parse_instance("E(a,b). E(b,c).").unwrap();
        let h = find_hom(&q, &i, &Pin::from_iter([("x", "b")])).unwrap().unwrap();
        assert_eq!(h, hom(&[("x", "b"), ("y", "c")]));
        assert_eq!(find_hom(&q, &i, &Pin::from_iter([("x", "zz")])).unwrap(), None);
        assert_eq!(
            find_hom(&q, &i, &Pin::from_iter([("w", "a")])),
            Err(HomError::PinOutsideQuery("w".into()))
        );
    }

    #[test]
    fn lex_least_witness() {
        let q = parse_query("E(?x,?y). E(?y,?z).").unwrap();
        let i = parse_instance("E(c,a). E(a,b). E(b,a). E(a,a).").unwrap();
        let h = find_hom(&q, &i, &Pin::empty()).unwrap().unwrap();
        assert_eq!(h, hom(&[("x", "a"), ("y", "a"), ("z", "a")]));
        let fast = find_hom_with(&q, &i, &Pin::empty(), &SearchOptions::fast()).unwrap().unwrap();
        assert!(verify_hom(&fast, &q, &i));
    }

    #[test]
    fn budget_is_reported_distinctly() {
        // 2-colouring a triangle: no solution, but the search must branch.
        let q = parse_query("E(?a,?b). E(?b,?c). E(?c,?a).").unwrap();
        let i = parse_instance("E(r,g). E(g,r).").unwrap();
        assert_eq!(find_hom(&q, &i, &Pin::empty()).unwrap(), None);
        let tight = SearchOptions {
            mode: SearchMode::LexLeast,
            budget: Budget::nodes(1),
        };
        assert_eq!(
            find_hom_with(&q, &i, &Pin::empty(), &tight),
            Err(HomError::Budget(BudgetExceeded::Nodes))
        );
    }
}
