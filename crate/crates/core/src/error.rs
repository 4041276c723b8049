use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate {value} outside the domain of `{system}`")]
    Domain { system: String, value: f64 },

    #[error("point has {got} coordinates, system `{system}` has dimension {expected}")]
    Dimension {
        system: String,
        expected: usize,
        got: usize,
    },

    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("observable `{id}` returned a non-finite value")]
    NonFinite { id: String },

    #[error("derivative is singular at {at}")]
    SingularDerivative { at: f64 },

    #[error("observable `{id}` is not Lipschitz; supply the modulus explicitly")]
    UnboundedModulus { id: String },

    #[error("space average error estimate {achieved:.3e} exceeds the requested {requested:.3e}")]
    BudgetExhausted { requested: f64, achieved: f64 },

    #[error("horizon n = {n} exceeds the reliable floating-point horizon {limit} of `{system}`")]
    HorizonExceeded { system: String, n: usize, limit: usize },

    #[error("need at least {needed} usable ladder entries, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("rate h = {h} is not positive; the large deviation bound is vacuous")]
    LdpNotEstablished { h: f64 },

    #[error("grid work {used} exceeds the budget {budget}")]
    GridBudget { used: u64, budget: u64 },

    #[error("degenerate ladder: {0}")]
    Degenerate(String),

    #[error("roof function is not positive ({value}) at {at}")]
    NonPositiveRoof { value: f64, at: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_owned(),
        reason: reason.into(),
    }
}
