//! Error type shared by every module of the crate.

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("singular matrix: pivot {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("frame is rank deficient at vector {index} (residual {residual:e})")]
    RankDeficient { index: usize, residual: f64 },

    #[error("degenerate metric at x = {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("degenerate Lagrangian at x = {x:?}, u = {u:?}")]
    DegenerateLagrangian { x: Vec<f64>, u: Vec<f64> },

    #[error("point x = {point:?} lies on the Jacobi boundary (|E - V| = {gap:e})")]
    BoundaryPoint { point: Vec<f64>, gap: f64 },

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    #[error("evaluation failed at t = {t}, state = {state:?}: {source}")]
    Evaluation {
        t: f64,
        state: Vec<f64>,
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("quadratic form is negative: Q(xi, xi) = {0:e}")]
    NegativeForm(f64),

    #[error("initial perturbation has zero seminorm")]
    DegenerateStart,

    #[error("seminorm of the propagated perturbation collapsed at t = {t}")]
    SeminormCollapse { t: f64 },

    #[error("seminorm family is degenerate; a definite form is required for spectra")]
    DegenerateSeminorm,

    #[error("metric components are not symmetric at ({row}, {col})")]
    AsymmetricMetric { row: usize, col: usize },

    #[error("fixed point cannot be translated into a geodesic")]
    FixedPointUntranslatable,

    #[error("energy mismatch: requested {requested}, initial data has {actual}")]
    EnergyMismatch { requested: f64, actual: f64 },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::Eval(_) => "DomainError",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::DegenerateMetric { .. } => "DegenerateMetric",
            Error::DegenerateLagrangian { .. } => "DegenerateLagrangian",
            Error::BoundaryPoint { .. } => "BoundaryPoint",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::MaxStepsExceeded { .. } => "MaxStepsExceeded",
            Error::Evaluation { .. } => "EvaluationError",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NegativeForm(_) => "NegativeForm",
            Error::DegenerateStart => "DegenerateStart",
            Error::SeminormCollapse { .. } => "SeminormCollapse",
            Error::DegenerateSeminorm => "DegenerateSeminorm",
            Error::AsymmetricMetric { .. } => "AsymmetricMetric",
            Error::FixedPointUntranslatable => "FixedPointUntranslatable",
            Error::EnergyMismatch { .. } => "EnergyMismatch",
            Error::InvalidSettings(_) => "InvalidSettings",
        }
    }

    /// Strips any `Evaluation` wrappers and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Evaluation { source, .. } => source.root(),
            e => e,
        }
    }
}
