//! The two hardness constructions and the explicit mappings from their
//! correctness proofs. Every constructed mapping is checked with
//! [`verify_hom`](crate::hom::verify_hom) before it is returned.

mod graph;
mod qbf;

pub use graph::{graph_escape_map, graph_witness_map, reduce_graphhom, GraphReductionOutput};
pub use qbf::{
    normalize_qbf, qbf_escape_map, qbf_witness_map, reduce_qbf, ClauseGadget, GadgetRow, QbfReductionOutput,
    QbfRegistry, UniversalVars,
};

use crate::model::{Query, Tuple};
use crate::parse::{parse_query, parse_tuple};

/// `Q = R(?x,?y,?z,?z). R(?x,?x,?y,?y).` with `τ = R(a,a,b,b)`: critical, but
/// only relative to the second atom. Returns `(Q, τ, 0, 1)`.
pub fn counterexample_fixture() -> (Query, Tuple, usize, usize) {
    let q = parse_query("R(?x,?y,?z,?z). R(?x,?x,?y,?y).").expect("fixture query parses");
    let tau = parse_tuple("R(a,a,b,b)").expect("fixture tuple parses");
    (q, tau, 0, 1)
}
