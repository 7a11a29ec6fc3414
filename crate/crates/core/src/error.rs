use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {p} is not a splitting field: {reason}")]
    NotSplitting { p: u32, reason: String },
    #[error("no splitting prime below {0}")]
    PrimeSearchExhausted(u64),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid homomorphism: {0}")]
    InvalidHom(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid equivariant map: {0}")]
    InvalidMap(String),
    #[error("invalid natural transformation: {0}")]
    InvalidTwoCell(String),
    #[error("invalid module: {0}")]
    InvalidModule(String),
    #[error("invalid module map: {0}")]
    InvalidModuleMap(String),
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("unsupported map for pushforward: {0}")]
    UnsupportedPushforward(String),
    #[error("invalid half-braiding: {0}")]
    InvalidHalfBraiding(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("matrix is singular")]
    Singular,
    #[error("randomized splitting failed after {0} attempts")]
    SplittingFailed(usize),
    #[error("enumeration needs {needed} bits, budget is {budget}")]
    BudgetExceeded { needed: u32, budget: u32 },
    #[error("invalid atlas: {0}")]
    InvalidAtlas(String),
    #[error("incompatible section: {0}")]
    IncompatibleSection(String),
}
