//! Crate-wide error with stable codes.

use crate::classify::ClassifyError;
use crate::construct::ConstructError;
use crate::degree::DegreeError;
use crate::framed::FramedError;
use crate::geometry::GeometryError;
use crate::map::MapError;
use crate::operator::OperatorError;
use crate::path::PathError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error(transparent)]
    Framed(#[from] FramedError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("InvalidInput: {0}")]
    Input(String),
}

impl Error {
    /// Name of the violated precondition or input rule.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Operator(e) => e.code(),
            Error::Path(e) => e.code(),
            Error::Geometry(e) => e.code(),
            Error::Map(e) => e.code(),
            Error::Degree(e) => e.code(),
            Error::Framed(e) => e.code(),
            Error::Classify(e) => e.code(),
            Error::Construct(e) => e.code(),
            Error::Io { .. } => "Io",
            Error::Input(_) => "InvalidInput",
        }
    }

    /// Mathematical refusals, as opposed to malformed input.
    pub fn is_refusal(&self) -> bool {
        match self {
            Error::Operator(_) => true,
            Error::Path(e) => !matches!(e, PathError::InvalidPath(_) | PathError::Expr(_)),
            Error::Geometry(_) | Error::Io { .. } | Error::Input(_) => false,
            Error::Map(e) => e.is_refusal(),
            Error::Degree(e) => e.is_refusal(),
            Error::Framed(e) => e.is_refusal(),
            Error::Classify(e) => e.is_refusal(),
            Error::Construct(e) => e.is_refusal(),
        }
    }
}
