use std::fmt;

use thiserror::Error;

/// A single violated scenario invariant.
///
/// Indices carried here are 1-based, matching every other user-facing
/// surface of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ZeroCount(&'static str),
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    NegativeBudget {
        user: usize,
    },
    NegativeMinEnergy {
        user: usize,
    },
    NonPositiveGamma {
        user: usize,
    },
    NonPositiveZeta {
        user: usize,
    },
    NegativeCapacity {
        company: usize,
        period: usize,
    },
    AllCapacitiesZero,
    NonFinite {
        field: &'static str,
    },
    InvalidPriceBound {
        company: usize,
        period: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroCount(what) => write!(f, "{what} must be at least 1"),
            Violation::LengthMismatch {
                field,
                expected,
                found,
            } => write!(f, "{field} has {found} entries, expected {expected}"),
            Violation::NegativeBudget { user } => {
                write!(f, "budget must be nonnegative (user {user})")
            }
            Violation::NegativeMinEnergy { user } => {
                write!(f, "min_energy must be nonnegative (user {user})")
            }
            Violation::NonPositiveGamma { user } => {
                write!(f, "gamma must be positive (user {user})")
            }
            Violation::NonPositiveZeta { user } => {
                write!(f, "zeta must be positive (user {user})")
            }
            Violation::NegativeCapacity { company, period } => write!(
                f,
                "capacity must be nonnegative (company {company}, period {period})"
            ),
            Violation::AllCapacitiesZero => write!(f, "all capacities zero"),
            Violation::NonFinite { field } => write!(f, "{field} contains a non-finite value"),
            Violation::InvalidPriceBound { company, period } => write!(
                f,
                "price bounds must satisfy 0 < min <= max (company {company}, period {period})"
            ),
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", join_violations(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("{kind} index {index} out of range (1..={len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("price must be positive, got {price} at company {company}, period {period}")]
    NonPositivePrice {
        company: usize,
        period: usize,
        price: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("all budgets zero: equilibrium prices would vanish")]
    AllBudgetsZero,

    #[error("singular price system (denominator {denominator:e}): all capacities are zero")]
    SingularPriceSystem { denominator: f64 },

    #[error("reduced price system after clamping is singular (denominator {denominator:e})")]
    SingularReducedSystem { denominator: f64 },

    #[error("scenario has no price bounds")]
    NoPriceBounds,

    #[error("utility undefined for user {user}: zeta + demand is nonpositive")]
    UtilityUndefined { user: usize },

    #[error("bisection bracket failure: lambda in [{low:e}, {high:e}]")]
    BracketFailure { low: f64, high: f64 },

    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("capacities required")]
    MissingCapacities,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("unknown preset `{0}` (expected fig1, fig2 or fig3)")]
    UnknownPreset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
