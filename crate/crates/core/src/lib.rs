//! Decision procedures and reduction constructions for critical tuples of
//! Boolean conjunctive queries.
//!
//! A tuple `τ` is critical for a query `Q` when some instance satisfies `Q`
//! but stops satisfying it once `τ` is removed. The relative variant also
//! requires the satisfying homomorphism to send a designated atom onto `τ`.

pub mod budget;
pub mod criticality;
pub mod crosscheck;
pub mod digraph;
pub mod error;
pub mod hom;
pub mod model;
pub mod parse;
pub mod oracles;
pub mod qbf;
pub mod reductions;

pub use budget::{Budget, BudgetExceeded};
pub use criticality::{
    brute_force_critical, candidate_assignments, is_critical, is_critical_relative, CandidateAssignment, DeciderOptions,
    DomainValue, Reason, Stats, Verdict, Witness,
};
pub use digraph::Digraph;
pub use error::{CriticalityError, HomError, ModelError, OracleError, ParseError, ReductionError};
pub use hom::{apply_hom, find_hom, find_hom_with, unify_atom_tuple, verify_hom, Homomorphism, Pin, SearchMode, SearchOptions};
pub use model::{Atom, Instance, Query, Term, Tuple};
pub use parse::{parse_digraph, parse_instance, parse_qbf, parse_query, parse_tuple};
pub use qbf::{Assignment, Clause, Literal, PropVar, QbfFormula};
pub use oracles::{eval_qbf, graph_hom_oracle, QbfEvaluation, UniversalCase};
pub use reductions::{
    counterexample_fixture, graph_escape_map, graph_witness_map, normalize_qbf, qbf_escape_map, qbf_witness_map,
    reduce_graphhom, reduce_qbf, GraphReductionOutput, QbfReductionOutput, QbfRegistry,
};
