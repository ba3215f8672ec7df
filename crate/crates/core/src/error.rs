use thiserror::Error;

use crate::mlf::MlError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("Mittag-Leffler evaluation failed: {0}")]
    Ml(#[from] MlError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// `|D|` vanished: exceptional point of the Dyson map.
    #[error("singular determinant |D| = {abs_d:.3e}")]
    SingularD { abs_d: f64 },
    #[error("metric collapse: Lambda = {big_lambda:.3e} is not positive")]
    MetricCollapse { big_lambda: f64 },
    #[error("unitarity residual {residual:.3e} exceeds 1e-10")]
    UnitarityResidual { residual: f64 },
    #[error("truncation n_max = {n_max} leaves Poisson tail {tail:.3e} >= {tail_tol:.1e}")]
    TruncationTooSmall { n_max: usize, tail: f64, tail_tol: f64 },
    #[error("density matrix has eigenvalue {eigenvalue:.3e} < -1e-10")]
    IndefiniteDensity { eigenvalue: f64 },
    #[error("norm {norm:.17e} deviates from 1 by more than 1e-8")]
    NormDrift { norm: f64 },
    #[error("block n = {n}: {source}")]
    Block { n: usize, source: Box<Error> },
    #[error("alpha = {alpha}, t = {t}: {source}")]
    AtPoint { alpha: f64, t: f64, source: Box<Error> },
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Ml(MlError::NonConvergence { .. }) => "NonConvergence",
            Error::Ml(MlError::PoleTooClose { .. }) => "PoleTooClose",
            Error::Ml(MlError::Overflow(_)) => "Overflow",
            Error::Ml(MlError::InvalidArgument(_)) => "InvalidArgument",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::SingularD { .. } => "SingularD",
            Error::MetricCollapse { .. } => "MetricCollapse",
            Error::UnitarityResidual { .. } => "UnitarityResidual",
            Error::TruncationTooSmall { .. } => "TruncationTooSmall",
            Error::IndefiniteDensity { .. } => "IndefiniteDensity",
            Error::NormDrift { .. } => "NormDrift",
            Error::Io(_) => "Io",
            Error::Block { source, .. } | Error::AtPoint { source, .. } => source.kind(),
        }
    }

    /// Photon-number block the error is attributed to, if any.
    pub fn block(&self) -> Option<usize> {
        match self {
            Error::Block { n, .. } => Some(*n),
            Error::AtPoint { source, .. } => source.block(),
            _ => None,
        }
    }

    /// `(alpha, t)` the error is attributed to, if any.
    pub fn point(&self) -> Option<(f64, f64)> {
        match self {
            Error::AtPoint { alpha, t, .. } => Some((*alpha, *t)),
            _ => None,
        }
    }

    pub(crate) fn at_point(self, alpha: f64, t: f64) -> Self {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint { alpha, t, source: Box::new(e) },
        }
    }

    pub(crate) fn in_block(self, n: usize) -> Self {
        match self {
            e @ Error::Block { .. } => e,
            e => Error::Block { n, source: Box::new(e) },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
