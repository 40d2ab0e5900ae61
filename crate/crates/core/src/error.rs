use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("unsupported field degree {0} (expected 1..=16)")]
    UnsupportedDegree(u32),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("sigma needs an even-degree field, got degree {0}")]
    OddDegree(u32),
    #[error("degree {src} does not divide degree {dst}")]
    NonDividing { src: u32, dst: u32 },
    #[error("bitmask {0:#x} is not an element of GF(2^{1})")]
    InvalidElement(u16, u32),
    #[error("cannot parse field element {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("unsupported exponent n = {0} (expected 1..=4)")]
    UnsupportedExponent(u32),
    #[error("pair (a, b) = ({a}, {b}) violates b + sigma(b) = a sigma(a)")]
    NotUnitriangular { a: String, b: String },
    #[error("torus parameter must be non-zero")]
    ZeroLambda,
    #[error("matrix is not a determinant-one unitary matrix: {0}")]
    NotUnitary(String),
    #[error("index {index} out of range for a set of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("cannot parse group element {0:?}")]
    Parse(String),
    #[error("structural equation has {0} solutions in Z#, expected exactly one")]
    StructuralEquation(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("closure exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("orbit of size {orbit} does not divide the actor order {actor}")]
    Lagrange { orbit: usize, actor: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconError {
    #[error("rewriting did not reach a normal form within {0} steps")]
    StepBound(u32),
    #[error("no unique H0 element carries u0 to {0}")]
    MissingConjugator(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TowerError {
    #[error("tower needs at least two stages")]
    TooShort,
    #[error("exponent {small} does not divide {big}")]
    NonDividing { small: u32, big: u32 },
    #[error(
        "relative degree {big}/{small} is even: sigma of GF(q^(2k)) is trivial on GF(q^2), \
         so U3(2^{small}) does not embed in U3(2^{big})"
    )]
    EvenRelativeDegree { small: u32, big: u32 },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
