use thiserror::Error;

use crate::series_core::FieldElem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series is zero modulo its trusted order and cannot be inverted")]
    InvertZeroSeries,

    #[error("no declared {root}-th root of {value} is available in Q(i)")]
    RootUnavailable { value: Box<FieldElem>, root: u64 },

    #[error("insufficient order: {0}")]
    InsufficientOrder(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operand does not live in the field of this operator case: {0}")]
    WrongField(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("equation has a zero coefficient a0; no companion matrix")]
    SingularLeadingCoefficient,

    #[error("gauge transformation is singular")]
    SingularGauge,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resonance at exponent {exponent}: the linear step for this coefficient is singular")]
    Resonance { exponent: num_rational::BigRational },

    #[error("no formal solution: {0}")]
    NoFormalSolution(String),

    #[error("ramification mismatch: {0}")]
    RamificationMismatch(String),

    #[error("q = 1 is not allowed")]
    QIsOne,

    #[error("q = {0} is a root of unity")]
    QRootOfUnity(Box<FieldElem>),

    #[error("beta[{index}] = q^{exponent} makes a Pochhammer denominator vanish")]
    InvalidBeta { index: usize, exponent: i64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
