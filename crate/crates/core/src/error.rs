use std::fmt;

/// First failed invariant of a state object, with the offending indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: String,
    pub index: Vec<usize>,
}

impl Violation {
    pub fn new(rule: impl Into<String>, index: Vec<usize>) -> Self {
        Self { rule: rule.into(), index }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {:?}", self.rule, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid rate vector: {0}")]
    InvalidRates(String),
    #[error("rates must be pairwise distinct for determinant formulas")]
    NonDistinctRates,
    #[error("configuration is not in the {0} chamber")]
    ChamberMismatch(&'static str),
    #[error("invalid state: {0}")]
    Invalid(Violation),
    #[error("interlacing violated: {0}")]
    InterlacingViolation(String),
    #[error("J-summation diverges: tail ratio {0} is not below 1")]
    DivergentTail(f64),
    #[error("I-summation requires f(u) = 0 for u < 0")]
    NegativeSupport,
    #[error("I-summation tail base coincides with the operator parameter")]
    ResonantTail,
    #[error("truncation could not certify tolerance {0:e}")]
    TruncationFailure(f64),
    #[error("enumeration exceeds the cap of {0} patterns")]
    TooManyPatterns(usize),
    #[error("rate table invalid: {0}")]
    RateTableInvalid(String),
    #[error("check not applicable: {0}")]
    NotApplicable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Invalid(v)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
