//! Brute-force ground truth for the reduction sources. Deliberately naive and
//! independent of the homomorphism engine.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::digraph::Digraph;
use crate::error::OracleError;
use crate::qbf::{Assignment, QbfFormula};

const MAX_QBF_VARS: usize = 20;
const MAX_GRAPH_MAPS: f64 = 1e7;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniversalCase {
    pub sigma: Assignment,
    /// Lexicographically least satisfying assignment of the existentials, if any.
    pub extension: Option<Assignment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QbfEvaluation {
    pub valid: bool,
    /// Lexicographically least assignment of the universals with no satisfying extension.
    pub failing: Option<Assignment>,
    /// One entry per assignment of the universals, in lexicographic order.
    pub cases: Vec<UniversalCase>,
}

impl QbfEvaluation {
    pub fn extension_of(&self, sigma: &Assignment) -> Option<&Assignment> {
        self.cases
            .iter()
            .find(|c| &c.sigma == sigma)
            .and_then(|c| c.extension.as_ref())
    }
}

/// Truth-table evaluation of `∀ū ∃v̄ ψ`. Assignments are ordered with the
/// first declared variable most significant and false before true.
pub fn eval_qbf(formula: &QbfFormula) -> Result<QbfEvaluation, OracleError> {
    let us = formula.universals();
    let vs = formula.existentials();
    if us.len() + vs.len() > MAX_QBF_VARS {
        return Err(OracleError(format!(
            "{} variables exceed the limit of {MAX_QBF_VARS}",
            us.len() + vs.len()
        )));
    }
    let cases: Vec<UniversalCase> = (0..1u64 << us.len())
        .map(|outer| {
            let sigma = Assignment::from_bits(us, outer);
            let extension = (0..1u64 << vs.len())
                .map(|inner| Assignment::from_bits(vs, inner))
                .find(|ext| formula.satisfied_by(&sigma.extended(ext)));
            UniversalCase { sigma, extension }
        })
        .collect();
    let failing = cases
        .iter()
        .find(|c| c.extension.is_none())
        .map(|c| c.sigma.clone());
    Ok(QbfEvaluation {
        valid: failing.is_none(),
        failing,
        cases,
    })
}

/// Exhaustive search for an edge-preserving node map, lexicographically least
/// in sorted node order.
pub fn graph_hom_oracle(g1: &Digraph, g2: &Digraph) -> Result<Option<BTreeMap<String, String>>, OracleError> {
    let from: Vec<&String> = g1.nodes().iter().collect();
    let to: Vec<&String> = g2.nodes().iter().collect();
    if (to.len() as f64).powi(from.len() as i32) > MAX_GRAPH_MAPS {
        return Err(OracleError(format!(
            "{}^{} maps exceed the limit",
            to.len(),
            from.len()
        )));
    }
    let mut image: Vec<usize> = Vec::with_capacity(from.len());

    fn consistent(g1: &Digraph, g2: &Digraph, from: &[&String], to: &[&String], image: &[usize]) -> bool {
        let last = image.len() - 1;
        (0..=last).all(|j| {
            let (a, b) = (from[last], from[j]);
            (!g1.has_edge(a, b) || g2.has_edge(to[image[last]], to[image[j]]))
                && (!g1.has_edge(b, a) || g2.has_edge(to[image[j]], to[image[last]]))
        })
    }

    fn go(g1: &Digraph, g2: &Digraph, from: &[&String], to: &[&String], image: &mut Vec<usize>) -> bool {
        if image.len() == from.len() {
            return true;
        }
        for t in 0..to.len() {
            image.push(t);
            if consistent(g1, g2, from, to, image) && go(g1, g2, from, to, image) {
                return true;
            }
            image.pop();
        }
        false
    }

    Ok(go(g1, g2, &from, &to, &mut image).then(|| {
        from.iter()
            .zip(&image)
            .map(|(a, &t)| ((*a).clone(), to[t].clone()))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_qbf;

    #[test]
    fn valid_formula_with_extensions() {
        // ∀u ∃v: (u∨v∨v) ∧ (¬u∨¬v∨¬v)
        let f = parse_qbf("p cnf 2 2\na 1 0\ne 2 0\n1 2 2 0\n-1 -2 -2 0\n").unwrap();
        let e = eval_qbf(&f).unwrap();
        assert!(e.valid);
        assert_eq!(e.failing, None);
        let f_case: Assignment = [(1, false)].into_iter().collect();
        let t_case: Assignment = [(1, true)].into_iter().collect();
        assert_eq!(e.extension_of(&f_case), Some(&[(2, true)].into_iter().collect()));
        assert_eq!(e.extension_of(&t_case), Some(&[(2, false)].into_iter().collect()));
    }

    #[test]
    fn tautological_clause() {
        let f = parse_qbf("p cnf 1 1\na 1 0\n1 1 -1 0\n").unwrap();
        assert!(eval_qbf(&f).unwrap().valid);
    }

    #[test]
    fn invalid_formula_reports_least_failure() {
        // ∀u ∃v: (u∨v∨v) ∧ (u∨¬v∨¬v)
        let f = parse_qbf("p cnf 2 2\na 1 0\ne 2 0\n1 2 2 0\n1 -2 -2 0\n").unwrap();
        let e = eval_qbf(&f).unwrap();
        assert!(!e.valid);
        assert_eq!(e.failing, Some([(1, false)].into_iter().collect()));
    }

    #[test]
    fn size_guard() {
        let us: Vec<u32> = (1..=21).collect();
        let f = QbfFormula::new(us, vec![], vec![]).unwrap();
        assert!(eval_qbf(&f).is_err());
    }

    #[test]
    fn cycles() {
        let c3 = Digraph::cycle(3, "a");
        let c3b = Digraph::cycle(3, "b");
        let id = graph_hom_oracle(&c3, &c3b).unwrap().unwrap();
        assert_eq!(id["a0"], "b0");
        assert_eq!(id["a1"], "b1");
        assert_eq!(id["a2"], "b2");
        assert_eq!(graph_hom_oracle(&c3, &Digraph::cycle(2, "b")).unwrap(), None);
        let wrap = graph_hom_oracle(&Digraph::cycle(6, "a"), &c3b).unwrap().unwrap();
        assert!(Digraph::cycle(6, "a").is_homomorphism(&c3b, &wrap));
    }

    #[test]
    fn self_loops_and_empty_graphs() {
        let lp = Digraph::from_edges([("x", "x")]);
        assert!(graph_hom_oracle(&Digraph::cycle(5, "a"), &lp).unwrap().is_some());
        assert_eq!(graph_hom_oracle(&lp, &Digraph::cycle(2, "b")).unwrap(), None);
        assert_eq!(graph_hom_oracle(&lp, &Digraph::default()).unwrap(), None);
        assert_eq!(graph_hom_oracle(&Digraph::default(), &lp).unwrap(), Some(BTreeMap::new()));
    }

    #[test]
    fn graph_guard() {
        let big = Digraph::cycle(12, "a");
        assert!(graph_hom_oracle(&big, &Digraph::cycle(5, "b")).is_err());
    }
}
