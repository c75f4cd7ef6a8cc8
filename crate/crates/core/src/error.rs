use thiserror::Error;

use crate::fluctuations::Quadrature;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no admissible real root of the pump equation")]
    NoAdmissibleRoot,
    #[error("selected root is within {denominator:e} of the idler resonance pole")]
    PoleProximity { denominator: f64 },
    #[error("{0} fluctuation system is singular at this analyzing frequency")]
    SingularSystem(Quadrature),
    #[error("metric undefined: input pump amplitude is zero")]
    UndefinedMetric,
    #[error("no stable operating point on the search grid")]
    NoStablePoint,
}

impl Error {
    /// Short identifier used in sweep rows and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::NoAdmissibleRoot => "NoAdmissibleRoot",
            Error::PoleProximity { .. } => "PoleProximity",
            Error::SingularSystem(_) => "SingularSystem",
            Error::UndefinedMetric => "UndefinedMetric",
            Error::NoStablePoint => "NoStablePoint",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
