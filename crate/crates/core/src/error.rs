//! Crate-wide error type.

use num_complex::Complex64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {func}({arg}) is undefined")]
    Domain { func: &'static str, arg: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("boundary-condition pair is not self-adjoint: {0}")]
    NotSelfAdjoint(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("step budget exhausted after {steps} steps at x = {x}")]
    StepBudget { steps: usize, x: f64 },

    #[error("z = {z} is too close to the spectrum (|F| = {fabs:.3e})")]
    NearSpectrum { z: Complex64, fabs: f64 },

    #[error("eigenvalue scan budget exceeded: {0}")]
    ScanBudget(String),

    #[error("unresolved near-degenerate eigenvalue pair near lambda = {0}")]
    NearDegenerate(f64),

    #[error("too few eigenvalues: need {need}, have {have}")]
    TooFewEigenvalues { need: usize, have: usize },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("insufficient large-t decay of the cut integrand: {0}")]
    InsufficientDecay(String),

    #[error("ambiguous zero-mode order: {0}")]
    AmbiguousZeroMode(String),

    #[error("no closed-form catalog entry: {0}")]
    UnsupportedCatalog(String),

    #[error("short-range tail bound violated: {0}")]
    TailBound(String),

    #[error("problem file error: {0}")]
    ProblemFile(String),
}

impl Error {
    /// True for errors caused by malformed input rather than by a
    /// numerical method hitting its limits. The CLI maps validation
    /// errors to exit code 2 and numerical failures to exit code 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::InvalidProblem(_)
                | Error::NotSelfAdjoint(_)
                | Error::UnsupportedCatalog(_)
                | Error::ProblemFile(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
