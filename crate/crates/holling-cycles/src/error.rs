//! Error types shared across the toolkit.

use thiserror::Error;

use crate::vectorfield::{ParamName, PhasePoint};

/// A parameter value outside its admissible range.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("parameter `{field}` must be {bound}, got {value}")]
pub struct ParamError {
    pub field: ParamName,
    pub bound: &'static str,
    pub value: f64,
}

/// Failures of the winding-number index computation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum IndexError {
    /// The sampled contour passes too close to a zero of the field.
    #[error("contour passes through a singularity near ({x}, {y}) (|field| = {norm:.3e})")]
    ContourThroughSingularity { x: f64, y: f64, norm: f64 },
    /// The accumulated angle is too far from an integer multiple of 2π;
    /// the caller should retry with more samples.
    #[error("winding residual {residual:.3} >= 0.1 with {samples} samples; increase sampling")]
    NonIntegerWinding { residual: f64, samples: usize },
}

/// Failures when analysing the singular points at infinity.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum InfinityError {
    /// The projective structure assumed by the three-point classification
    /// degenerates (μ = 0 sends the saddle direction onto the y-axis ends;
    /// α = 0 drops the total degree below four).
    #[error("degenerate structure at infinity: {reason}")]
    DegenerateAtInfinity { reason: String },
}

/// Failures of the index-theorem audit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum AuditError {
    #[error("audit inconclusive: {reason}")]
    Inconclusive { reason: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Failures of orbit integration and return maps.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FlowError {
    /// The adaptive step fell below the representable minimum.
    #[error("step size underflow at t = {t} near ({x}, {y})")]
    StepSizeUnderflow { t: f64, x: f64, y: f64 },
    /// No qualifying section return occurred (orbit escaped, converged, or
    /// the period budget ran out).
    #[error("no section return: {reason}")]
    NoReturn { reason: NoReturnReason },
    #[error("start point ({x}, {y}) outside the bounding box")]
    StartOutsideBox { x: f64, y: f64 },
    #[error("time horizon must be positive, got {t_max}")]
    NonPositiveHorizon { t_max: f64 },
}

/// Why a return map evaluation produced no return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoReturnReason {
    EscapedBox,
    ConvergedToPoint,
    MaxPeriodExceeded,
    StartsAtEquilibrium,
}

impl std::fmt::Display for NoReturnReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NoReturnReason::EscapedBox => "orbit escaped the bounding box",
            NoReturnReason::ConvergedToPoint => "orbit converged to an equilibrium",
            NoReturnReason::MaxPeriodExceeded => "no return within the period budget",
            NoReturnReason::StartsAtEquilibrium => "start point is an equilibrium",
        };
        f.write_str(s)
    }
}

/// Failures of cycle location and displacement derivatives.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CycleError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    /// An augmented quadrature along the orbit failed to converge.
    #[error("quadrature failure: {reason}")]
    QuadratureFailure { reason: String },
    /// The displacement stencil cannot separate derivatives from noise.
    #[error("multiplicity estimate noise-dominated (stencil spread {spread:.3e} vs floor {floor:.3e})")]
    NoiseDominated { spread: f64, floor: f64 },
    #[error("section geometry: {reason}")]
    BadSection { reason: String },
}

/// Failures of branch continuation and the scenario search.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContinuationError {
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Param(#[from] ParamError),
    /// The staged search exhausted its budget; carries the trace of what
    /// was tried.
    #[error("scenario not found within budget at stage `{stage}`")]
    ScenarioNotFound { stage: String, trace: Vec<String> },
}

/// A located equilibrium too close to a sampled contour or scan ray.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("equilibrium at ({x}, {y}) lies within {dist:.3e} of the scan geometry")]
pub struct GeometryClash {
    pub x: f64,
    pub y: f64,
    pub dist: f64,
}

impl PhasePoint {
    pub(crate) fn geometry_clash(&self, dist: f64) -> GeometryClash {
        GeometryClash {
            x: self.x,
            y: self.y,
            dist,
        }
    }
}
