use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("cannot parse ring spec `{0}`")]
    RingSpec(String),
    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),
    #[error("map is not an involution: {0}")]
    NotAnInvolution(String),
    #[error("lambda {lambda} does not satisfy lambda * conj(lambda) = 1")]
    BadLambda { lambda: String },
    #[error("element {0} is nilpotent")]
    NilpotentElement(String),
    #[error("localization does not commute with the involution (conj(e) != e for e = {0})")]
    InvolutionNotPreserved(String),
    #[error("the elements do not generate the unit ideal")]
    NotACover,
    #[error("generator {0} lies outside Lambda_max")]
    GeneratorOutsideLambdaMax(String),
    #[error("enumeration cap of {cap} exceeded")]
    CapExceeded { cap: usize },
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("bad index ({i}, {j}) for n = {n}")]
    BadIndex { i: usize, j: usize, n: usize },
    #[error("diagonal parameter {0} is not admissible for the form parameter")]
    DiagonalParameterNotInLambda(String),
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("word does not evaluate to the identity at X = 0")]
    NotCongruentAtZero,
    #[error("matrix is not the identity at X = 0")]
    NotNormalizedAtZero,
    #[error("no verified relation for the pattern {0}")]
    UnresolvedRelation(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("substitution {0} does not commute with the involution")]
    InvolutionIncompatible(String),
    #[error("polynomial degree bound {0} exceeded")]
    DegreeOverflow(usize),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
}
