use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported extension degree m={0} (expected 2..=8)")]
    UnsupportedDegree(u32),
    #[error("polynomial {poly:#b} does not have degree {m}")]
    WrongDegree { m: u32, poly: u32 },
    #[error("polynomial {0:#b} has no constant term")]
    NoConstantTerm(u32),
    #[error("polynomial {poly:#b} is not primitive: D has order {order}, expected {expected}")]
    NotPrimitive { poly: u32, order: u32, expected: u32 },
    #[error("element {value} out of range for GF({q})")]
    ElementOutOfRange { value: u32, q: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("unsupported constellation size q={0}")]
    UnsupportedConstellation(u32),
    #[error("mapping is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid rate {0} (expected 0 < rate <= 1)")]
    InvalidRate(f64),
    #[error("instance too large for brute force: {0} sequences")]
    InstanceTooLarge(u128),
    #[error("q={0} is too large for exhaustive mapping enumeration (max 8)")]
    TooManyMappings(u32),
    #[error("target rate {target} outside the curve range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    InvalidInput(String),
}
