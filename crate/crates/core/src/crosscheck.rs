//! Batch cross-validation of the reductions against the oracles.
//!
//! Each instance gets the constructive checks (witness map, then escape map
//! or an exhaustive search for an escape) and, when a decider budget is
//! given, a full decider run compared with the oracle verdict.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::budget::Budget;
use crate::criticality::{is_critical, is_critical_relative, DeciderOptions};
use crate::digraph::Digraph;
use crate::error::CriticalityError;
use crate::hom::{find_hom_with, verify_hom, Pin, SearchOptions};
use crate::oracles::{eval_qbf, graph_hom_oracle};
use crate::qbf::{Clause, Literal, PropVar, QbfFormula};
use crate::reductions::{
    graph_escape_map, graph_witness_map, normalize_qbf, qbf_escape_map, qbf_witness_map, reduce_graphhom, reduce_qbf,
};

#[derive(Debug, Error)]
pub enum CrosscheckError {
    #[error("time budget exhausted after {done} of {total} instances")]
    Budget { done: usize, total: usize },
    #[error("{0}")]
    Setup(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseRecord {
    pub label: String,
    /// Criticality predicted by the oracle.
    pub expected_critical: bool,
    pub constructive_ok: bool,
    /// `None` when the decider was not run or ran out of budget.
    pub decider_critical: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub label: String,
    /// Input text in the usual file formats, enough to replay the case.
    pub input: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    pub kind: String,
    pub seed: Option<u64>,
    pub instances: usize,
    pub constructive_checks: usize,
    pub constructive_passed: usize,
    pub decider_runs: usize,
    pub decider_agreements: usize,
    pub decider_skipped: usize,
    pub cases: Vec<CaseRecord>,
    pub counterexamples: Vec<Counterexample>,
}

impl CrosscheckReport {
    pub fn all_agree(&self) -> bool {
        self.counterexamples.is_empty()
            && self.constructive_passed == self.constructive_checks
            && self.decider_agreements == self.decider_runs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// Every instance within the size bounds.
    Exhaustive,
    /// `count` instances drawn from a ChaCha8 stream.
    Random { seed: u64, count: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct QbfCrosscheck {
    pub max_universals: usize,
    pub max_existentials: usize,
    pub max_clauses: usize,
    pub source: Source,
    /// Per-instance decider limit; `None` skips decider runs.
    pub decider_budget: Option<Budget>,
    /// Limit for the whole run.
    pub time_limit: Option<Duration>,
}

#[derive(Clone, Copy, Debug)]
pub struct GraphCrosscheck {
    /// Cycle lengths (exhaustive) or node counts (random) range over `2..=max_nodes`.
    pub max_nodes: usize,
    pub source: Source,
    pub decider_budget: Option<Budget>,
    pub time_limit: Option<Duration>,
}

fn literals(vars: &[PropVar]) -> Vec<Literal> {
    vars.iter().flat_map(|&v| [Literal::pos(v), Literal::neg(v)]).collect()
}

/// Clauses as sorted literal multisets.
fn all_clauses(lits: &[Literal]) -> Vec<Clause> {
    let n = lits.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                out.push([lits[i], lits[j], lits[k]]);
            }
        }
    }
    out
}

/// Nondecreasing index sequences of length `len` over `0..k`.
fn nondecreasing(k: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in nondecreasing(k, len - 1) {
        let from = rest.last().copied().unwrap_or(0);
        for i in from..k {
            let mut seq = rest.clone();
            seq.push(i);
            out.push(seq);
        }
    }
    out
}

/// All formulas with universals `1..=u`, existentials after them,
/// `u ≤ max_universals`, `e ≤ max_existentials` and at most `max_clauses`
/// clauses. Clauses are literal multisets and the clause list is a multiset,
/// so formulas differing only in literal or clause order appear once.
pub fn enumerate_formulas(max_universals: usize, max_existentials: usize, max_clauses: usize) -> Vec<QbfFormula> {
    let mut out = Vec::new();
    for nu in 0..=max_universals {
        for ne in 0..=max_existentials {
            let us: Vec<PropVar> = (1..=nu as PropVar).collect();
            let es: Vec<PropVar> = (nu as PropVar + 1..=(nu + ne) as PropVar).collect();
            let vars: Vec<PropVar> = us.iter().chain(&es).copied().collect();
            let clauses = all_clauses(&literals(&vars));
            for m in 0..=max_clauses {
                for idx in nondecreasing(clauses.len(), m) {
                    let chosen: Vec<Clause> = idx.iter().map(|&i| clauses[i]).collect();
                    out.push(QbfFormula::new(us.clone(), es.clone(), chosen).expect("well-formed"));
                }
            }
        }
    }
    out
}

/// The normalized members of [`enumerate_formulas`].
pub fn enumerate_qbf(max_universals: usize, max_existentials: usize, max_clauses: usize) -> Vec<QbfFormula> {
    enumerate_formulas(max_universals, max_existentials, max_clauses)
        .into_iter()
        .filter(QbfFormula::is_normalized)
        .collect()
}

/// A random formula with sizes drawn up to the bounds, normalized afterwards.
pub fn random_qbf(rng: &mut impl Rng, max_universals: usize, max_existentials: usize, max_clauses: usize) -> QbfFormula {
    let nu = rng.gen_range(0..=max_universals);
    let ne = rng.gen_range(0..=max_existentials);
    let m = rng.gen_range(1..=max_clauses.max(1));
    random_qbf_sized(rng, nu, ne, m)
}

/// A random formula with exactly `nu` universals, `ne` existentials and `m`
/// clauses (fewer if there are no variables), normalized afterwards.
pub fn random_qbf_sized(rng: &mut impl Rng, nu: usize, ne: usize, m: usize) -> QbfFormula {
    let us: Vec<PropVar> = (1..=nu as PropVar).collect();
    let es: Vec<PropVar> = (nu as PropVar + 1..=(nu + ne) as PropVar).collect();
    let lits = literals(&us.iter().chain(&es).copied().collect::<Vec<_>>());
    let m = if lits.is_empty() { 0 } else { m };
    let clauses = (0..m)
        .map(|_| [0; 3].map(|_: i32| lits[rng.gen_range(0..lits.len())]))
        .collect();
    normalize_qbf(&QbfFormula::new(us, es, clauses).expect("well-formed"))
}

/// A random weakly connected digraph on `n` nodes `{prefix}0..`: a random
/// spanning tree with random orientations plus extra random edges.
pub fn random_connected_digraph(rng: &mut impl Rng, n: usize, prefix: &str) -> Digraph {
    let name = |i: usize| format!("{prefix}{i}");
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        if rng.gen_bool(0.5) {
            edges.push((name(i), name(j)));
        } else {
            edges.push((name(j), name(i)));
        }
    }
    for _ in 0..rng.gen_range(0..=n) {
        edges.push((name(rng.gen_range(0..n)), name(rng.gen_range(0..n))));
    }
    Digraph::new((0..n).map(name), edges).expect("endpoints are declared")
}

struct Clock {
    start: Instant,
    limit: Option<Duration>,
}

impl Clock {
    fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }
}

fn decider_options(budget: Budget, clock: &Clock) -> DeciderOptions {
    let mut budget = budget;
    if let Some(limit) = clock.limit {
        let left = limit.saturating_sub(clock.start.elapsed());
        budget.max_time = Some(budget.max_time.map_or(left, |t| t.min(left)));
    }
    DeciderOptions {
        budget,
        ..DeciderOptions::default()
    }
}

fn one_line(formula: &QbfFormula) -> String {
    formula.to_string().trim_end().replace('\n', " | ")
}

pub fn crosscheck_qbf(config: &QbfCrosscheck) -> Result<CrosscheckReport, CrosscheckError> {
    let (formulas, seed) = match config.source {
        Source::Exhaustive => (
            enumerate_qbf(config.max_universals, config.max_existentials, config.max_clauses),
            None,
        ),
        Source::Random { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fs = (0..count)
                .map(|_| random_qbf(&mut rng, config.max_universals, config.max_existentials, config.max_clauses))
                .collect();
            (fs, Some(seed))
        }
    };
    crosscheck_qbf_formulas(&formulas, seed, config.decider_budget, config.time_limit)
}

/// Cross-validates an explicit list of normalized formulas.
pub fn crosscheck_qbf_formulas(
    formulas: &[QbfFormula],
    seed: Option<u64>,
    decider_budget: Option<Budget>,
    time_limit: Option<Duration>,
) -> Result<CrosscheckReport, CrosscheckError> {
    let clock = Clock {
        start: Instant::now(),
        limit: time_limit,
    };
    if formulas.iter().any(|f| f.universals().len() + f.existentials().len() > 20) {
        return Err(CrosscheckError::Setup("formulas exceed the oracle size guard".into()));
    }
    let mut report = CrosscheckReport {
        kind: "qbf".into(),
        seed,
        instances: formulas.len(),
        ..CrosscheckReport::default()
    };

    let total = formulas.len();
    let mut pending_decider = Vec::new();
    for (i, f) in formulas.iter().enumerate() {
        if clock.expired() {
            return Err(CrosscheckError::Budget { done: i, total });
        }
        let label = one_line(f);
        let eval = eval_qbf(f).map_err(|e| CrosscheckError::Setup(e.to_string()))?;
        let out = reduce_qbf(f).map_err(|e| CrosscheckError::Setup(e.to_string()))?;
        let mut ok = true;
        let mut fail = |detail: String, report: &mut CrosscheckReport| {
            ok = false;
            report.counterexamples.push(Counterexample {
                label: label.clone(),
                input: f.to_string(),
                detail,
            });
        };
        for case in &eval.cases {
            report.constructive_checks += 1;
            let (h, inst) = match qbf_witness_map(&out, &case.sigma) {
                Ok(x) => x,
                Err(e) => {
                    fail(format!("witness map for {}: {e}", case.sigma), &mut report);
                    continue;
                }
            };
            let passed = match &case.extension {
                Some(ext) => match qbf_escape_map(&out, &h, &case.sigma.extended(ext)) {
                    Ok(_) => true,
                    Err(e) => {
                        fail(format!("escape map for {}: {e}", case.sigma), &mut report);
                        false
                    }
                },
                None => {
                    let rest = inst.without(&out.tau);
                    match find_hom_with(&out.query, &rest, &Pin::empty(), &SearchOptions::fast()) {
                        Ok(None) => true,
                        Ok(Some(esc)) => {
                            let detail = if verify_hom(&esc, &out.query, &rest) {
                                format!("escape exists for failing {}", case.sigma)
                            } else {
                                format!("engine returned an invalid homomorphism for {}", case.sigma)
                            };
                            fail(detail, &mut report);
                            false
                        }
                        Err(e) => {
                            fail(format!("hom search: {e}"), &mut report);
                            false
                        }
                    }
                }
            };
            report.constructive_passed += passed as usize;
        }
        report.cases.push(CaseRecord {
            label,
            expected_critical: !eval.valid,
            constructive_ok: ok,
            decider_critical: None,
        });
        pending_decider.push(out);
    }

    if let Some(budget) = decider_budget {
        for (record, out) in report.cases.iter_mut().zip(&pending_decider) {
            if clock.expired() {
                report.decider_skipped += 1;
                continue;
            }
            match is_critical_relative(&out.tau, &out.query, out.g_index, &decider_options(budget, &clock)) {
                Ok(v) => {
                    report.decider_runs += 1;
                    record.decider_critical = Some(v.critical);
                    if v.critical == record.expected_critical {
                        report.decider_agreements += 1;
                    } else {
                        report.counterexamples.push(Counterexample {
                            label: record.label.clone(),
                            input: out.formula.to_string(),
                            detail: format!("decider says critical = {}", v.critical),
                        });
                    }
                }
                Err(CriticalityError::Budget { .. }) => report.decider_skipped += 1,
                Err(e) => return Err(CrosscheckError::Setup(e.to_string())),
            }
        }
    }
    Ok(report)
}

pub fn crosscheck_graph(config: &GraphCrosscheck) -> Result<CrosscheckReport, CrosscheckError> {
    let clock = Clock {
        start: Instant::now(),
        limit: config.time_limit,
    };
    let (pairs, seed): (Vec<(String, Digraph, Digraph)>, _) = match config.source {
        Source::Exhaustive => {
            let mut v = Vec::new();
            for n in 2..=config.max_nodes {
                for m in 2..=config.max_nodes {
                    v.push((format!("C{n} -> C{m}"), Digraph::cycle(n, "a"), Digraph::cycle(m, "b")));
                }
            }
            (v, None)
        }
        Source::Random { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let top = config.max_nodes.max(1);
            let v = (0..count)
                .map(|i| {
                    let n1 = rng.gen_range(1..=top);
                    let n2 = rng.gen_range(1..=top);
                    let g1 = random_connected_digraph(&mut rng, n1, "a");
                    let g2 = random_connected_digraph(&mut rng, n2, "b");
                    (format!("random #{i}"), g1, g2)
                })
                .collect();
            (v, Some(seed))
        }
    };
    let mut report = CrosscheckReport {
        kind: "graphhom".into(),
        seed,
        instances: pairs.len(),
        ..CrosscheckReport::default()
    };
    let total = pairs.len();
    let mut outs = Vec::new();
    for (i, (label, g1, g2)) in pairs.iter().enumerate() {
        if clock.expired() {
            return Err(CrosscheckError::Budget { done: i, total });
        }
        let input = format!("# G1\n{g1}# G2\n{g2}");
        let oracle = graph_hom_oracle(g1, g2).map_err(|e| CrosscheckError::Setup(e.to_string()))?;
        let out = reduce_graphhom(g1, g2).map_err(|e| CrosscheckError::Setup(e.to_string()))?;
        report.constructive_checks += 1;
        let result: Result<(), String> = graph_witness_map(&out)
            .map_err(|e| e.to_string())
            .and_then(|(h, inst)| match &oracle {
                Some(map) => graph_escape_map(&out, &h, map).map(|_| ()).map_err(|e| e.to_string()),
                None => {
                    match find_hom_with(&out.query, &inst.without(&out.tau), &Pin::empty(), &SearchOptions::fast()) {
                        Ok(None) => Ok(()),
                        Ok(Some(_)) => Err("escape exists although no graph homomorphism does".into()),
                        Err(e) => Err(e.to_string()),
                    }
                }
            });
        let ok = result.is_ok();
        if let Err(detail) = result {
            report.counterexamples.push(Counterexample {
                label: label.clone(),
                input: input.clone(),
                detail,
            });
        }
        report.constructive_passed += ok as usize;
        report.cases.push(CaseRecord {
            label: label.clone(),
            expected_critical: oracle.is_none(),
            constructive_ok: ok,
            decider_critical: None,
        });
        outs.push((out, input));
    }
    if let Some(budget) = config.decider_budget {
        for (record, (out, input)) in report.cases.iter_mut().zip(&outs) {
            if clock.expired() {
                report.decider_skipped += 1;
                continue;
            }
            match is_critical(&out.tau, &out.query, &decider_options(budget, &clock)) {
                Ok(v) => {
                    report.decider_runs += 1;
                    record.decider_critical = Some(v.critical);
                    if v.critical == record.expected_critical {
                        report.decider_agreements += 1;
                    } else {
                        report.counterexamples.push(Counterexample {
                            label: record.label.clone(),
                            input: input.clone(),
                            detail: format!("decider says critical = {}", v.critical),
                        });
                    }
                }
                Err(CriticalityError::Budget { .. }) => report.decider_skipped += 1,
                Err(e) => return Err(CrosscheckError::Setup(e.to_string())),
            }
        }
    }
    Ok(report)
}

/// Agreement matrix of a cycle run: `(n, m) → decider verdict`.
pub fn cycle_matrix(report: &CrosscheckReport) -> BTreeMap<(usize, usize), Option<bool>> {
    report
        .cases
        .iter()
        .filter_map(|c| {
            let (a, b) = c.label.split_once(" -> ")?;
            let n = a.strip_prefix('C')?.parse().ok()?;
            let m = b.strip_prefix('C')?.parse().ok()?;
            Some(((n, m), c.decider_critical))
        })
        .collect()
}
