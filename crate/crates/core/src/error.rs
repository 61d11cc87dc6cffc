use thiserror::Error;

use crate::model::ClassSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a model needs at least one customer class and one server class")]
    EmptySide,

    #[error(
        "too many classes: {customers} customers + {servers} servers exceeds the limit of {limit}"
    )]
    TooManyClasses {
        customers: usize,
        servers: usize,
        limit: usize,
    },

    #[error("edge ({customer}, {server}) is out of range")]
    EdgeOutOfRange { customer: usize, server: usize },

    #[error("compatibility graph is disconnected; components: {}", fmt_components(.components))]
    Disconnected { components: Vec<ClassSet> },

    #[error("expected {expected} {side} arrival probabilities, got {got}")]
    ArrivalLength {
        side: &'static str,
        expected: usize,
        got: usize,
    },

    #[error(
        "{side} class {index} has arrival probability {value}; every class needs a probability > 0"
    )]
    NonPositiveProbability {
        side: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{side} arrival probabilities sum to {sum}, expected 1 (tolerance {tolerance:e})")]
    ProbabilitySum {
        side: &'static str,
        sum: f64,
        tolerance: f64,
    },

    #[error("graph and arrival model disagree on class counts")]
    DimensionMismatch,

    #[error("enumeration exceeded the cap of {cap} sets; instance too large for exact solving")]
    CountLimitExceeded { cap: usize },

    #[error("model is unstable: delta({witness}) = {delta} <= 0")]
    UnstableModel { witness: ClassSet, delta: f64 },

    #[error("stationary recursion left the floating-point range")]
    NumericalUnderflow,

    #[error("truncated level totals do not decay at length {max_len} (ratio {ratio})")]
    TruncationDivergence { max_len: usize, ratio: f64 },

    #[error("oracle is limited to {limit} classes, got {got}")]
    OracleTooLarge { limit: usize, got: usize },

    #[error("{0}")]
    Spec(String),
}

fn fmt_components(components: &[ClassSet]) -> String {
    components
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
