use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus is reducible over GF({p})")]
    ReducibleModulus { p: u32 },
    #[error("modulus must be monic of degree {k}")]
    BadModulus { k: u32 },
    #[error("no built-in modulus for GF({p}^{k}); supply one")]
    NoModulusKnown { p: u32, k: u32 },
    #[error("field size {0} exceeds 256")]
    FieldTooLarge(u64),
    #[error("arity mismatch: expected {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("bad arity: {0}")]
    BadArity(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("tail arity {t} is below the minimum {min}")]
    BadT { t: usize, min: usize },
    #[error("numerator term is not divisible by x_1...x_(p-1)")]
    NotDivisible,
    #[error("budget exceeded: need {needed}, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("tail exponents are invalid: {0}")]
    BadTail(String),
    #[error("{m} is not in the p-shadow of {e}")]
    NotInShadow { m: u32, e: u32 },
    #[error("no rejecting transformation found after {trials} trials")]
    NotFound { trials: usize },
    #[error("blocks share variable {0}")]
    SharedVariables(usize),
    #[error("exponent set contains the all-(q-1) vector")]
    FullExponentInE,
    #[error("block {0} is the zero polynomial")]
    ZeroBlock(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
