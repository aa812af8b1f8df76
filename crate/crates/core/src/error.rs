use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("alphabet error: {0}")]
    Alphabet(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("staggering error: {0}")]
    Staggering(String),
    #[error("invalid presentation: {0}")]
    Invalid(String),
    #[error("element is trivial")]
    Trivial,
    #[error("element is conjugate into a single factor {0}")]
    SingleFactor(String),
    #[error("no contracted conjugate: {0}")]
    Uncontractible(String),
    #[error("root extraction: {0}")]
    Root(String),
    #[error("leaf isomorphism: {0}")]
    Iso(String),
    #[error("edge-word {0} is primitive in its leaf")]
    PrimitiveEdge(String),
    #[error("not a leaf-homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("not in the kernel: exponent sum {0}")]
    NotInKernel(i64),
    #[error("kernel window too small: need [{lo}, {hi}]")]
    Window { lo: i64, hi: i64 },
    #[error("sample error: {0}")]
    Sample(String),
    #[error("certificate error: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
