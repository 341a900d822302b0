use thiserror::Error;

use crate::budget::BudgetExceeded;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("query has no atoms")]
    EmptyQuery,
    #[error("predicate {predicate} used with arity {first} and arity {second}")]
    ArityConflict {
        predicate: String,
        first: usize,
        second: usize,
    },
    #[error("variable ?{variable} in a ground atom")]
    NotGround { variable: String },
    #[error("invalid formula: {0}")]
    InvalidQbf(String),
    #[error("edge endpoint {0} is not a declared node")]
    UndeclaredNode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("pin binds ?{0}, which does not occur in the query")]
    PinOutsideQuery(String),
    #[error("mapping is not total: ?{0} is unmapped")]
    NotTotal(String),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticalityError {
    #[error("atom index {index} out of range for a query with {len} atoms")]
    AtomIndex { index: usize, len: usize },
    #[error("{exceeded} after {nodes} nodes and {hom_checks} hom checks")]
    Budget {
        exceeded: BudgetExceeded,
        nodes: u64,
        hom_checks: u64,
    },
    #[error("brute-force size guard: {0}")]
    SizeGuard(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("formula is not normalized: universal {0} lacks a positive or negative occurrence")]
    NotNormalized(u32),
    #[error("first graph is empty")]
    EmptyGraph,
    #[error("first graph is not weakly connected")]
    NotWeaklyConnected,
    #[error("assignment is not total over {scope}: {detail}")]
    AssignmentScope { scope: &'static str, detail: String },
    #[error("assignment does not satisfy the matrix")]
    Unsatisfying,
    #[error("homomorphism precondition failed: {0}")]
    Precondition(String),
    #[error("node map is not a graph homomorphism")]
    NotGraphHomomorphism,
    #[error("constructed mapping failed verification: {0}")]
    Verification(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("oracle size guard: {0}")]
pub struct OracleError(pub String);
