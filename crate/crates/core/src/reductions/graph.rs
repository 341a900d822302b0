use std::collections::BTreeMap;

use crate::digraph::Digraph;
use crate::error::ReductionError;
use crate::hom::{apply_hom, verify_hom, Homomorphism};
use crate::model::{Atom, Instance, Query, Term, Tuple};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphReductionOutput {
    pub g1: Digraph,
    pub g2: Digraph,
    pub tau: Tuple,
    pub query: Query,
    /// The node of `G1` whose variable heads the `R(x_{v*}, x)` atom.
    pub vstar: String,
    /// Variable names without `?`.
    pub g1_vars: BTreeMap<String, String>,
    pub g2_vars: BTreeMap<String, String>,
    pub x: String,
}

/// Builds `τ = R(0,1)` and `Q`: the edges of both graphs as `E` atoms,
/// `R(x_{v*}, x)` for the least node `v*` of `G1`, and `R(x_v, x_v)` for
/// every node of `G2`.
///
/// Nodes become `?x{node}` when the node sets are disjoint, and
/// `?x1_{node}` / `?x2_{node}` otherwise.
pub fn reduce_graphhom(g1: &Digraph, g2: &Digraph) -> Result<GraphReductionOutput, ReductionError> {
    if g1.is_empty() {
        return Err(ReductionError::EmptyGraph);
    }
    if !g1.is_weakly_connected() {
        return Err(ReductionError::NotWeaklyConnected);
    }
    let disjoint = g1.nodes().is_disjoint(g2.nodes());
    let names = |g: &Digraph, tag: &str| -> BTreeMap<String, String> {
        g.nodes()
            .iter()
            .map(|n| {
                let var = if disjoint { format!("x{n}") } else { format!("x{tag}_{n}") };
                (n.clone(), var)
            })
            .collect()
    };
    let g1_vars = names(g1, "1");
    let g2_vars = names(g2, "2");
    let x = "x".to_string();
    let vstar = g1.nodes().iter().next().expect("nonempty").clone();

    let var = |v: &str| Term::var(v);
    let mut atoms = Vec::new();
    for (g, vars) in [(g1, &g1_vars), (g2, &g2_vars)] {
        for (a, b) in g.edges() {
            atoms.push(Atom::new("E", vec![var(&vars[a]), var(&vars[b])]));
        }
    }
    atoms.push(Atom::new("R", vec![var(&g1_vars[&vstar]), var(&x)]));
    for v in g2_vars.values() {
        atoms.push(Atom::new("R", vec![var(v), var(v)]));
    }

    Ok(GraphReductionOutput {
        g1: g1.clone(),
        g2: g2.clone(),
        tau: Tuple::new("R", ["0", "1"]),
        query: Query::new(atoms).expect("construction is well-formed"),
        vstar,
        g1_vars,
        g2_vars,
        x,
    })
}

/// `x_{v*} ↦ 0`, `x ↦ 1`, every other variable to a fresh constant named
/// after it. Returns `(h, h(Q))`.
pub fn graph_witness_map(out: &GraphReductionOutput) -> Result<(Homomorphism, Instance), ReductionError> {
    let mut h: Homomorphism = out.query.vars().into_iter().map(|v| (v.clone(), v)).collect();
    h.set(out.g1_vars[&out.vstar].as_str(), "0");
    h.set(out.x.as_str(), "1");
    let instance = apply_hom(&h, &out.query).map_err(|e| ReductionError::Verification(e.to_string()))?;
    if !instance.contains(&out.tau) {
        return Err(ReductionError::Verification("τ is not in h(Q)".into()));
    }
    Ok((h, instance))
}

/// Given any `h: Q → I` and a graph homomorphism `G1 → G2`, folds the `G1`
/// variables onto their images in `G2`; the result lands in `h(Q) ∖ {τ}`.
pub fn graph_escape_map(
    out: &GraphReductionOutput,
    h: &Homomorphism,
    h_graph: &BTreeMap<String, String>,
) -> Result<Homomorphism, ReductionError> {
    if !out.g1.is_homomorphism(&out.g2, h_graph) {
        return Err(ReductionError::NotGraphHomomorphism);
    }
    let instance = apply_hom(h, &out.query).map_err(|e| ReductionError::Precondition(e.to_string()))?;
    let image_of = |node: &str| {
        let target = &out.g2_vars[&h_graph[node]];
        h.get(target).expect("h is total").to_string()
    };
    let mut h_new = h.clone();
    for (node, var) in &out.g1_vars {
        h_new.set(var.as_str(), image_of(node));
    }
    h_new.set(out.x.as_str(), image_of(&out.vstar));
    if !verify_hom(&h_new, &out.query, &instance.without(&out.tau)) {
        return Err(ReductionError::Verification(
            "escape map does not land in h(Q) ∖ {τ}".into(),
        ));
    }
    Ok(h_new)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_vs_edge() {
        let g1 = Digraph::from_edges([("a", "b")]);
        let g2 = Digraph::from_edges([("c", "d")]);
        let out = reduce_graphhom(&g1, &g2).unwrap();
        let text: Vec<String> = out.query.atoms().iter().map(|a| a.to_string()).collect();
        assert_eq!(
            text,
            ["E(?xa,?xb)", "E(?xc,?xd)", "R(?xa,?x)", "R(?xc,?xc)", "R(?xd,?xd)"]
        );
        assert_eq!(out.tau.to_string(), "R(0,1)");

        let (h, i) = graph_witness_map(&out).unwrap();
        assert_eq!(h.get("xa"), Some("0"));
        assert_eq!(h.get("x"), Some("1"));
        assert_eq!(i.len(), 5);
        assert!(i.contains(&out.tau));

        let hg: BTreeMap<String, String> = [("a", "c"), ("b", "d")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let h_new = graph_escape_map(&out, &h, &hg).unwrap();
        assert_eq!(h_new.image(&out.query.atoms()[0]), h.image(&out.query.atoms()[1]));
        assert_eq!(h_new.get("xc"), h.get("xc"));
        assert_eq!(h_new.get("xd"), h.get("xd"));

        let bad: BTreeMap<String, String> = [("a", "d"), ("b", "c")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        assert_eq!(graph_escape_map(&out, &h, &bad), Err(ReductionError::NotGraphHomomorphism));
    }

    #[test]
    fn shared_node_names_are_separated() {
        let out = reduce_graphhom(&Digraph::cycle(3, "n"), &Digraph::cycle(2, "n")).unwrap();
        assert_eq!(out.g1_vars["n0"], "x1_n0");
        assert_eq!(out.g2_vars["n0"], "x2_n0");
        assert_eq!(out.query.len(), 3 + 2 + 1 + 2);
    }

    #[test]
    fn preconditions() {
        let g2 = Digraph::cycle(2, "b");
        assert_eq!(reduce_graphhom(&Digraph::default(), &g2), Err(ReductionError::EmptyGraph));
        let split = Digraph::from_edges([("a", "b"), ("c", "d")]);
        assert_eq!(reduce_graphhom(&split, &g2), Err(ReductionError::NotWeaklyConnected));
    }
}
