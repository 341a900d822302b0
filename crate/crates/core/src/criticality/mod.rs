//! Deciders for (relative) criticality of a tuple.
//!
//! A witness for criticality can always be taken to be an image `h(Q)`: if
//! `I` witnesses through `h`, then `h(Q) ⊆ I` contains `τ` and
//! `h(Q) ∖ {τ} ⊆ I ∖ {τ}` still admits no homomorphism. The decider
//! therefore enumerates canonical assignments `h` extending the unifier of
//! the designated atom with `τ`, with values drawn from the constants of `τ`
//! and `Q` plus fresh constants, and asks whether `Q` maps into
//! `h(Q) ∖ {τ}`.
//!
//! Assignments are built one variable at a time, most general value first. Whenever the set `J` of
//! fully-instantiated atom images grows, a budgeted homomorphism check on
//! `J ∖ {τ}` runs; if it succeeds, every extension also escapes and the
//! subtree is skipped.

mod brute;
mod candidates;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

pub use brute::brute_force_critical;
pub use candidates::{candidate_assignments, fresh_name, CandidateAssignment, Candidates, DomainValue};

use crate::budget::{Budget, BudgetExceeded, Meter};
use crate::error::CriticalityError;
use crate::hom::{
    apply_hom, compile_query, find_hom, search, unify_atom_tuple, verify_hom, CompiledQuery, Homomorphism,
    IndexedInstance, Pin, PredTable, SearchMode, Slot,
};
use crate::model::{Instance, Query, Tuple};

const UNSET: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeciderOptions {
    /// Overall limit; node counts refer to candidate-construction steps.
    pub budget: Budget,
    /// Skip subtrees whose partial image already admits an escape.
    pub prune: bool,
    /// Node limit of each pruning check. Exceeding it only skips that prune.
    pub prune_budget: u64,
    /// Explore the candidate tree on the rayon pool.
    pub parallel: bool,
}

impl Default for DeciderOptions {
    fn default() -> Self {
        DeciderOptions {
            budget: Budget::UNLIMITED,
            prune: true,
            prune_budget: 20_000,
            parallel: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    WitnessFound,
    Exhausted,
    PinUnsatisfiable,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: u64,
    pub hom_checks: u64,
    pub pruned: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl Stats {
    fn add(&mut self, other: &Stats) {
        self.nodes += other.nodes;
        self.hom_checks += other.hom_checks;
        self.pruned += other.pruned;
        self.wall_time += other.wall_time;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub assignment: CandidateAssignment,
    pub homomorphism: Homomorphism,
    #[serde(serialize_with = "serialize_instance")]
    pub instance: Instance,
}

fn serialize_instance<S: serde::Serializer>(inst: &Instance, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(inst.tuples().map(ToString::to_string))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub critical: bool,
    pub witness: Option<Witness>,
    pub via_atom: Option<usize>,
    pub reason: Reason,
    pub stats: Stats,
}

/// Facts of the partial image, stored flat.
#[derive(Clone, Debug, Default)]
struct Facts {
    preds: Vec<u32>,
    ends: Vec<usize>,
    data: Vec<u32>,
    per_pred: Vec<u32>,
}

impl Facts {
    fn new(n_preds: usize) -> Self {
        Facts {
            per_pred: vec![0; n_preds],
            ..Default::default()
        }
    }

    fn len(&self) -> usize {
        self.preds.len()
    }

    fn get(&self, i: usize) -> (u32, &[u32]) {
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        (self.preds[i], &self.data[start..self.ends[i]])
    }

    fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        (0..self.len()).map(|i| self.get(i))
    }

    fn contains(&self, pred: u32, args: &[u32]) -> bool {
        self.iter().any(|(p, a)| p == pred && a == args)
    }

    fn push(&mut self, pred: u32, args: &[u32]) {
        self.preds.push(pred);
        self.data.extend_from_slice(args);
        self.ends.push(self.data.len());
        self.per_pred[pred as usize] += 1;
    }

    fn truncate(&mut self, len: usize) {
        while self.preds.len() > len {
            let p = self.preds.pop().expect("nonempty");
            self.per_pred[p as usize] -= 1;
            self.ends.pop();
        }
        self.data.truncate(self.ends.last().copied().unwrap_or(0));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Check {
    /// `J ∖ {τ}` is known to admit no homomorphism from the query.
    Absent,
    Unknown,
}

#[derive(Clone, Debug)]
struct State {
    assign: Vec<u32>,
    fresh: u32,
    facts: Facts,
    last: Check,
}

enum Walk<'a> {
    Solve,
    Collect { depth: usize, out: &'a mut Vec<State> },
}

/// Variable order for incremental construction: repeatedly take the variable
/// that completes the most atoms, then the one occurring in the most atoms,
/// then the earliest.
fn construction_order(query: &CompiledQuery, pinned: &[bool]) -> Vec<u32> {
    let mut assigned = pinned.to_vec();
    let occurrences: Vec<usize> = (0..query.n_vars as u32).map(|v| query.var_atoms(v).len()).collect();
    let mut order = Vec::new();
    while let Some(v) = (0..query.n_vars as u32)
        .filter(|&v| !assigned[v as usize])
        .max_by_key(|&v| {
            let completes = query
                .var_atoms(v)
                .iter()
                .filter(|&&a| query.atoms[a].vars().iter().all(|&w| w == v || assigned[w as usize]))
                .count();
            (completes, occurrences[v as usize], std::cmp::Reverse(v))
        })
    {
        assigned[v as usize] = true;
        order.push(v);
    }
    order
}

struct RelativeSearch<'q> {
    query: &'q Query,
    vars: Vec<String>,
    base: Vec<String>,
    pin: Pin,
    compiled: CompiledQuery,
    n_preds: usize,
    tau_pred: u32,
    tau_args: Vec<u32>,
    query_preds: Vec<u32>,
    pinned: Vec<(u32, u32)>,
    order: Vec<u32>,
    initial: Vec<usize>,
    completes_at: Vec<Vec<usize>>,
    options: DeciderOptions,
    meter: Meter,
    hom_checks: AtomicU64,
    pruned: AtomicU64,
}

impl<'q> RelativeSearch<'q> {
    fn new(query: &'q Query, tau: &Tuple, pin: Pin, options: DeciderOptions) -> Self {
        let vars = query.vars();
        let base = candidates::base_constants(query, tau, &pin);
        let const_id = |c: &str| base.binary_search_by(|b| b.as_str().cmp(c)).ok().map(|i| i as u32);
        let mut preds = PredTable::default();
        let compiled = compile_query(query, &vars, &mut preds, const_id).expect("base holds query constants");
        let tau_pred = preds.id(&tau.predicate);
        let tau_args = tau.args.iter().map(|c| const_id(c).expect("base holds τ")).collect();
        let pinned: Vec<(u32, u32)> = pin
            .iter()
            .map(|(v, c)| {
                (
                    vars.iter().position(|x| x == v).expect("pin var in query") as u32,
                    const_id(c).expect("base holds pin"),
                )
            })
            .collect();
        let mut is_pinned = vec![false; vars.len()];
        for &(v, _) in &pinned {
            is_pinned[v as usize] = true;
        }
        let order = construction_order(&compiled, &is_pinned);
        let mut depth_of = vec![None; vars.len()];
        for (d, &v) in order.iter().enumerate() {
            depth_of[v as usize] = Some(d);
        }
        let mut initial = Vec::new();
        let mut completes_at = vec![Vec::new(); order.len()];
        for (i, atom) in compiled.atoms.iter().enumerate() {
            match atom.vars().iter().filter_map(|&v| depth_of[v as usize]).max() {
                Some(d) => completes_at[d].push(i),
                None => initial.push(i),
            }
        }
        let query_preds: BTreeSet<u32> = compiled.atoms.iter().map(|a| a.pred).collect();
        RelativeSearch {
            query,
            vars,
            base,
            pin,
            n_preds: preds.len(),
            compiled,
            tau_pred,
            tau_args,
            query_preds: query_preds.into_iter().collect(),
            pinned,
            order,
            initial,
            completes_at,
            meter: options.budget.start(),
            options,
            hom_checks: AtomicU64::new(0),
            pruned: AtomicU64::new(0),
        }
    }

    /// Adds the images of `atoms`; true if the fact set changed.
    fn add_images(&self, st: &mut State, atoms: &[usize]) -> bool {
        let mut grew = false;
        let mut buf = Vec::new();
        for &a in atoms {
            let atom = &self.compiled.atoms[a];
            buf.clear();
            buf.extend(atom.slots.iter().map(|s| match *s {
                Slot::Const(c) => c,
                Slot::Var(v) => st.assign[v as usize],
            }));
            if atom.pred == self.tau_pred && buf == self.tau_args {
                continue;
            }
            if !st.facts.contains(atom.pred, &buf) {
                st.facts.push(atom.pred, &buf);
                grew = true;
            }
        }
        grew
    }

    /// Is there a homomorphism from the query into the current `J ∖ {τ}`?
    fn escapes(&self, st: &State, meter: &Meter) -> Result<bool, BudgetExceeded> {
        self.hom_checks.fetch_add(1, Ordering::Relaxed);
        if self.query_preds.iter().any(|&p| st.facts.per_pred[p as usize] == 0) {
            return Ok(false);
        }
        let n_consts = self.base.len() + st.fresh as usize;
        let inst = IndexedInstance::build(self.n_preds, n_consts, st.facts.iter());
        Ok(search(&self.compiled, &inst, &[], SearchMode::Fast, meter)?.is_some())
    }

    /// Runs after the fact set grew. Returns whether the subtree should be explored.
    fn after_growth(&self, st: &mut State, next_depth: usize) -> Result<bool, BudgetExceeded> {
        st.last = Check::Unknown;
        if next_depth == self.order.len() {
            let escaped = self.escapes(st, &self.meter.child(None))?;
            if !escaped {
                st.last = Check::Absent;
            }
            return Ok(!escaped);
        }
        if !self.options.prune {
            return Ok(true);
        }
        match self.escapes(st, &self.meter.child(Some(self.options.prune_budget))) {
            Ok(true) => {
                self.pruned.fetch_add(1, Ordering::Relaxed);
                Ok(false)
            }
            Ok(false) => {
                st.last = Check::Absent;
                Ok(true)
            }
            Err(BudgetExceeded::Nodes) => Ok(true),
            Err(e) => Err(e),
        }
    }

    fn at_leaf(&self, st: &State) -> Result<Option<Vec<u32>>, BudgetExceeded> {
        let witness = match st.last {
            Check::Absent => true,
            Check::Unknown => !self.escapes(st, &self.meter.child(None))?,
        };
        Ok(witness.then(|| st.assign.clone()))
    }

    fn walk(&self, st: &mut State, depth: usize, mode: &mut Walk) -> Result<Option<Vec<u32>>, BudgetExceeded> {
        if let Walk::Collect { depth: stop, out } = mode {
            if depth == *stop {
                out.push(st.clone());
                return Ok(None);
            }
        }
        if depth == self.order.len() {
            return self.at_leaf(st);
        }
        let var = self.order[depth] as usize;
        let b = self.base.len() as u32;
        // Most general value first: a new fresh constant, then fresh constants
        // already in use, then the named constants.
        let fresh_before = st.fresh;
        for slot in 0..b + fresh_before + 1 {
            self.meter.tick()?;
            let (fresh, len, last) = (st.fresh, st.facts.len(), st.last);
            let value = match slot {
                0 => {
                    st.fresh += 1;
                    b + fresh_before
                }
                k if k <= fresh_before => b + k - 1,
                k => k - fresh_before - 1,
            };
            st.assign[var] = value;
            let keep = if self.add_images(st, &self.completes_at[depth]) {
                self.after_growth(st, depth + 1)?
            } else {
                true
            };
            if keep {
                if let Some(w) = self.walk(st, depth + 1, mode)? {
                    return Ok(Some(w));
                }
            }
            st.facts.truncate(len);
            st.fresh = fresh;
            st.last = last;
        }
        st.assign[var] = UNSET;
        Ok(None)
    }

    fn root(&self) -> Result<Option<State>, BudgetExceeded> {
        let mut st = State {
            assign: vec![UNSET; self.vars.len()],
            fresh: 0,
            facts: Facts::new(self.n_preds),
            last: Check::Unknown,
        };
        for &(v, c) in &self.pinned {
            st.assign[v as usize] = c;
        }
        self.add_images(&mut st, &self.initial);
        Ok(self.after_growth(&mut st, 0)?.then_some(st))
    }

    fn run(&self) -> Result<Option<Vec<u32>>, BudgetExceeded> {
        let Some(mut root) = self.root()? else {
            return Ok(None);
        };
        if !self.options.parallel || self.order.is_empty() {
            return self.walk(&mut root, 0, &mut Walk::Solve);
        }
        let want = 8 * rayon::current_num_threads();
        let mut frontier = Vec::new();
        let mut split = 0;
        while split < self.order.len() {
            split += 1;
            frontier.clear();
            let mut st = root.clone();
            if let Some(w) = self.walk(&mut st, 0, &mut Walk::Collect { depth: split, out: &mut frontier })? {
                return Ok(Some(w));
            }
            if frontier.len() >= want {
                break;
            }
        }
        let found = frontier
            .into_par_iter()
            .map(|mut st| self.walk(&mut st, split, &mut Walk::Solve))
            .find_first(|r| !matches!(r, Ok(None)));
        found.unwrap_or(Ok(None))
    }

    fn stats(&self, started: Instant) -> Stats {
        Stats {
            nodes: self.meter.nodes(),
            hom_checks: self.hom_checks.load(Ordering::Relaxed),
            pruned: self.pruned.load(Ordering::Relaxed),
            wall_time: started.elapsed(),
        }
    }

    fn witness(&self, tau: &Tuple, assign: &[u32]) -> Result<Witness, CriticalityError> {
        let b = self.base.len() as u32;
        let entries = self
            .vars
            .iter()
            .zip(assign)
            .map(|(v, &c)| {
                let d = if c < b {
                    DomainValue::Const(self.base[c as usize].clone())
                } else {
                    DomainValue::Fresh(c - b + 1)
                };
                (v.clone(), d)
            })
            .collect();
        let assignment = CandidateAssignment::canonical(entries);
        let taken: BTreeSet<String> = self.base.iter().cloned().collect();
        let homomorphism = assignment.to_homomorphism(&taken);
        let instance = apply_hom(&homomorphism, self.query).map_err(|e| CriticalityError::Internal(e.to_string()))?;
        reverify(self.query, tau, &self.pin, &homomorphism, &instance)?;
        Ok(Witness {
            assignment,
            homomorphism,
            instance,
        })
    }
}

/// Second, independent check of a witness: `h` is a homomorphism into `I`
/// extending the pin, `τ ∈ I`, and the default-mode engine finds no
/// homomorphism into `I ∖ {τ}`.
fn reverify(query: &Query, tau: &Tuple, pin: &Pin, h: &Homomorphism, instance: &Instance) -> Result<(), CriticalityError> {
    let fail = |what: &str| Err(CriticalityError::Internal(format!("witness re-verification failed: {what}")));
    if !verify_hom(h, query, instance) {
        return fail("not a homomorphism into the witness instance");
    }
    if !h.extends(pin) {
        return fail("does not extend the pin");
    }
    if !instance.contains(tau) {
        return fail("tuple missing from the witness instance");
    }
    match find_hom(query, &instance.without(tau), &Pin::empty()) {
        Ok(None) => Ok(()),
        Ok(Some(_)) => fail("an escape homomorphism exists"),
        Err(e) => Err(CriticalityError::Internal(e.to_string())),
    }
}

/// Decides whether `tau` is critical for `query` relative to the atom at `g_index`.
pub fn is_critical_relative(
    tau: &Tuple,
    query: &Query,
    g_index: usize,
    options: &DeciderOptions,
) -> Result<Verdict, CriticalityError> {
    let started = Instant::now();
    let g = query.atom(g_index).ok_or(CriticalityError::AtomIndex {
        index: g_index,
        len: query.len(),
    })?;
    let Some(pin) = unify_atom_tuple(g, tau) else {
        return Ok(Verdict {
            critical: false,
            witness: None,
            via_atom: None,
            reason: Reason::PinUnsatisfiable,
            stats: Stats {
                wall_time: started.elapsed(),
                ..Stats::default()
            },
        });
    };
    let search = RelativeSearch::new(query, tau, pin, *options);
    let outcome = search.run();
    let stats = search.stats(started);
    match outcome {
        Ok(Some(assign)) => Ok(Verdict {
            critical: true,
            witness: Some(search.witness(tau, &assign)?),
            via_atom: None,
            reason: Reason::WitnessFound,
            stats,
        }),
        Ok(None) => Ok(Verdict {
            critical: false,
            witness: None,
            via_atom: None,
            reason: Reason::Exhausted,
            stats,
        }),
        Err(exceeded) => Err(CriticalityError::Budget {
            exceeded,
            nodes: stats.nodes,
            hom_checks: stats.hom_checks,
        }),
    }
}

/// Decides whether `tau` is critical for `query`: the disjunction of the
/// relative problems over all atoms, since any witnessing homomorphism sends
/// some atom onto `tau`.
pub fn is_critical(tau: &Tuple, query: &Query, options: &DeciderOptions) -> Result<Verdict, CriticalityError> {
    let started = Instant::now();
    let mut stats = Stats::default();
    let mut any_unifies = false;
    for g in 0..query.len() {
        let v = is_critical_relative(tau, query, g, options)?;
        stats.add(&v.stats);
        if v.reason != Reason::PinUnsatisfiable {
            any_unifies = true;
        }
        if v.critical {
            stats.wall_time = started.elapsed();
            return Ok(Verdict {
                via_atom: Some(g),
                stats,
                ..v
            });
        }
    }
    stats.wall_time = started.elapsed();
    Ok(Verdict {
        critical: false,
        witness: None,
        via_atom: None,
        reason: if any_unifies {
            Reason::Exhausted
        } else {
            Reason::PinUnsatisfiable
        },
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_instance, parse_query, parse_tuple};

    fn counterexample() -> (Query, Tuple) {
        (
            parse_query("R(?x,?y,?z,?z). R(?x,?x,?y,?y).").unwrap(),
            parse_tuple("R(a,a,b,b)").unwrap(),
        )
    }

    fn all_options() -> Vec<DeciderOptions> {
        let base = DeciderOptions::default();
        vec![
            base,
            DeciderOptions { prune: false, ..base },
            DeciderOptions { parallel: true, ..base },
            DeciderOptions { prune_budget: 1, ..base },
        ]
    }

    #[test]
    fn counterexample_verdicts() {
        let (q, tau) = counterexample();
        for opts in all_options() {
            let first = is_critical_relative(&tau, &q, 0, &opts).unwrap();
            assert!(!first.critical);
            assert_eq!(first.reason, Reason::Exhausted);
            assert!(first.witness.is_none());

            let second = is_critical_relative(&tau, &q, 1, &opts).unwrap();
            assert!(second.critical);
            let w = second.witness.unwrap();
            // {R(a,b,c,c), R(a,a,b,b)} with c fresh
            let expected = parse_instance(&format!("R(a,b,{f},{f}). R(a,a,b,b).", f = w.homomorphism.get("z").unwrap())).unwrap();
            assert_eq!(w.instance, expected);
            assert_eq!(w.assignment.get("z"), Some(&DomainValue::Fresh(1)));

            let overall = is_critical(&tau, &q, &opts).unwrap();
            assert!(overall.critical);
            assert_eq!(overall.via_atom, Some(1));
        }
    }

    #[test]
    fn single_atom_query() {
        let q = parse_query("R(?x)").unwrap();
        let tau = parse_tuple("R(0)").unwrap();
        let v = is_critical_relative(&tau, &q, 0, &DeciderOptions::default()).unwrap();
        assert!(v.critical);
        assert_eq!(v.witness.unwrap().instance, parse_instance("R(0)").unwrap());
        assert!(is_critical(&tau, &q, &DeciderOptions::default()).unwrap().critical);
    }

    #[test]
    fn nothing_unifies() {
        let q = parse_query("R(?x,?x)").unwrap();
        let tau = parse_tuple("R(0,1)").unwrap();
        let v = is_critical(&tau, &q, &DeciderOptions::default()).unwrap();
        assert!(!v.critical);
        assert_eq!(v.reason, Reason::PinUnsatisfiable);
        let other_pred = is_critical(&parse_tuple("S(0,0)").unwrap(), &q, &DeciderOptions::default()).unwrap();
        assert_eq!(other_pred.reason, Reason::PinUnsatisfiable);
    }

    #[test]
    fn bad_atom_index() {
        let (q, tau) = counterexample();
        assert_eq!(
            is_critical_relative(&tau, &q, 2, &DeciderOptions::default()),
            Err(CriticalityError::AtomIndex { index: 2, len: 2 })
        );
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let q = parse_query("R(?x,?y). R(?y,?z). R(?z,?w).").unwrap();
        let tau = parse_tuple("R(0,1)").unwrap();
        assert!(is_critical_relative(&tau, &q, 0, &DeciderOptions::default()).unwrap().critical);
        let opts = DeciderOptions {
            budget: Budget::nodes(1),
            ..DeciderOptions::default()
        };
        assert!(matches!(
            is_critical_relative(&tau, &q, 0, &opts),
            Err(CriticalityError::Budget { exceeded: BudgetExceeded::Nodes, .. })
        ));
    }

    #[test]
    fn fully_pinned_and_ground_queries() {
        // every variable pinned by the designated atom
        let q = parse_query("R(?x,?y). R(?y,?x).").unwrap();
        let v = is_critical_relative(&parse_tuple("R(0,1)").unwrap(), &q, 0, &DeciderOptions::default()).unwrap();
        assert!(v.critical);
        assert_eq!(v.witness.unwrap().instance, parse_instance("R(0,1). R(1,0).").unwrap());
        let sym = is_critical_relative(&parse_tuple("R(0,0)").unwrap(), &q, 0, &DeciderOptions::default()).unwrap();
        assert!(sym.critical);

        let ground = parse_query("R(a). S(b).").unwrap();
        assert!(is_critical(&parse_tuple("R(a)").unwrap(), &ground, &DeciderOptions::default()).unwrap().critical);
        assert!(!is_critical(&parse_tuple("R(b)").unwrap(), &ground, &DeciderOptions::default()).unwrap().critical);
    }

    #[test]
    fn query_constants_are_in_the_domain() {
        // the escape must reuse the constant k
        let q = parse_query("R(?x,k). R(k,?y).").unwrap();
        let tau = parse_tuple("R(k,k)").unwrap();
        for opts in all_options() {
            let v = is_critical(&tau, &q, &opts).unwrap();
            assert_eq!(v.critical, brute_force_critical(&tau, &q, None).unwrap());
        }
    }
}
