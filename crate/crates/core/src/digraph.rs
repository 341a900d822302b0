use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ModelError;

/// A directed graph over string node ids. Self-loops are allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Digraph {
    nodes: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
}

impl Digraph {
    pub fn new(
        nodes: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ModelError> {
        let nodes: BTreeSet<String> = nodes.into_iter().collect();
        let edges: BTreeSet<(String, String)> = edges.into_iter().collect();
        for (a, b) in &edges {
            for end in [a, b] {
                if !nodes.contains(end) {
                    return Err(ModelError::UndeclaredNode(end.clone()));
                }
            }
        }
        Ok(Digraph { nodes, edges })
    }

    /// Graph whose node set is exactly the edge endpoints.
    pub fn from_edges<S: Into<String>>(edges: impl IntoIterator<Item = (S, S)>) -> Self {
        let edges: BTreeSet<(String, String)> =
            edges.into_iter().map(|(a, b)| (a.into(), b.into())).collect();
        let nodes = edges
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        Digraph { nodes, edges }
    }

    /// The directed cycle `0 → 1 → … → n-1 → 0`, with node ids prefixed by `prefix`.
    pub fn cycle(n: usize, prefix: &str) -> Self {
        Digraph::from_edges((0..n).map(|i| (format!("{prefix}{i}"), format!("{prefix}{}", (i + 1) % n))))
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.contains(&(a.to_string(), b.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Connectivity of the underlying undirected graph. The empty graph counts as connected.
    pub fn is_weakly_connected(&self) -> bool {
        let Some(start) = self.nodes.iter().next() else {
            return true;
        };
        let mut adjacent: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.edges {
            adjacent.entry(a).or_default().push(b);
            adjacent.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::from([start.as_str()]);
        let mut stack = vec![start.as_str()];
        while let Some(n) = stack.pop() {
            for &m in adjacent.get(n).into_iter().flatten() {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    /// Whether `map` is total on this graph's nodes, lands in `target`, and preserves edges.
    pub fn is_homomorphism(&self, target: &Digraph, map: &BTreeMap<String, String>) -> bool {
        self.nodes
            .iter()
            .all(|n| map.get(n).is_some_and(|m| target.nodes.contains(m)))
            && self
                .edges
                .iter()
                .all(|(a, b)| target.has_edge(&map[a], &map[b]))
    }
}

/// Isolated nodes go on a `# nodes:` header; edges follow one per line.
impl fmt::Display for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let touched: BTreeSet<&String> = self.edges.iter().flat_map(|(a, b)| [a, b]).collect();
        let isolated: Vec<&str> = self
            .nodes
            .iter()
            .filter(|n| !touched.contains(n))
            .map(String::as_str)
            .collect();
        if !isolated.is_empty() {
            writeln!(f, "# nodes: {}", isolated.join(" "))?;
        }
        for (a, b) in &self.edges {
            writeln!(f, "{a} {b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_connectivity() {
        assert!(Digraph::cycle(3, "v").is_weakly_connected());
        assert!(!Digraph::from_edges([("a", "b"), ("c", "d")]).is_weakly_connected());
        let single = Digraph::new(["x".to_string()], []).unwrap();
        assert!(single.is_weakly_connected());
        assert!(Digraph::default().is_weakly_connected());
        // direction is ignored
        assert!(Digraph::from_edges([("a", "b"), ("c", "b")]).is_weakly_connected());
    }

    #[test]
    fn undeclared_endpoint_rejected() {
        let err = Digraph::new(["a".to_string()], [("a".to_string(), "b".to_string())]);
        assert!(matches!(err, Err(ModelError::UndeclaredNode(n)) if n == "b"));
    }

    #[test]
    fn cycle_homomorphisms() {
        let c4 = Digraph::cycle(4, "a");
        let c2 = Digraph::cycle(2, "b");
        let map: BTreeMap<String, String> = (0..4)
            .map(|i| (format!("a{i}"), format!("b{}", i % 2)))
            .collect();
        assert!(c4.is_homomorphism(&c2, &map));
        let bad: BTreeMap<String, String> = (0..4).map(|i| (format!("a{i}"), "b0".into())).collect();
        assert!(!c4.is_homomorphism(&c2, &bad));
    }
}
