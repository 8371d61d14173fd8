//! Constructive extension and properization on box domains.

mod extension;
mod properize;
mod quadrature;
mod region;

pub use extension::{
    build_cover, extend, parse_extension_toml, verify, ConditionMargin, CoverConfig, Decomposition, Extension,
    ExtensionProblem, PartitionCover, VerifyConfig, VerifyReport,
};
pub use properize::{parse_properize_toml, properize, Properized, ProperizeReport, ShellReport, Smoothstep};
pub use quadrature::{bspline, gauss_legendre};
pub use region::Region;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("InvalidProblem: {0}")]
    InvalidProblem(String),
    #[error("CoverFailure: radius {radius:e} below the minimum at {point:?}; tightest condition ({condition})")]
    CoverFailure { condition: char, point: Vec<f64>, radius: f64 },
    #[error("VerificationFailure: {check} fails at {witness:?} with margin {margin:e}")]
    VerificationFailure { check: String, witness: Vec<f64>, margin: f64 },
    #[error("NotSphereValued: |f(x)| = {norm} at {point:?}")]
    NotSphereValued { point: Vec<f64>, norm: f64 },
}

impl ConstructError {
    pub fn code(&self) -> &'static str {
        match self {
            ConstructError::Syntax { .. } => "SyntaxError",
            ConstructError::InvalidProblem(_) => "InvalidProblem",
            ConstructError::CoverFailure { .. } => "CoverFailure",
            ConstructError::VerificationFailure { .. } => "VerificationFailure",
            ConstructError::NotSphereValued { .. } => "NotSphereValued",
        }
    }

    pub fn is_refusal(&self) -> bool {
        !matches!(self, ConstructError::Syntax { .. } | ConstructError::InvalidProblem(_))
    }
}

/// A point where some check was tightest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub margin: f64,
}

impl Witness {
    fn worst(slot: &mut Option<Witness>, point: &[f64], margin: f64) {
        if slot.as_ref().is_none_or(|w| margin < w.margin) {
            *slot = Some(Witness { point: point.to_vec(), margin });
        }
    }
}

pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> ConstructError {
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            ConstructError::Syntax { line, col, message: e.message().to_string() }
        }
        None => ConstructError::InvalidProblem(e.message().to_string()),
    }
}
