use thiserror::Error;

/// Errors raised by geometry construction, evaluation and report assembly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the {model} chart domain")]
    PointOutsideChart { model: &'static str, point: Vec<f64> },

    #[error("tangent vectors span a degenerate plane (area^2 = {area_sq:e})")]
    DegeneratePlane { area_sq: f64 },

    #[error("point is not on the support hypersurface (signed distance {distance:e})")]
    PointNotOnSupport { distance: f64 },

    #[error("chart is not an immersion at u = {u:?} (normalized det g = {det:e})")]
    DegenerateImmersion { u: Vec<f64>, det: f64 },

    #[error("surface has no boundary on the support")]
    NoBoundary,

    #[error("weight function is not positive on the surface (V = {value:e})")]
    WeightNonpositive { value: f64 },

    #[error("inadmissible placement: {0}")]
    InadmissiblePlacement(String),

    #[error("orthogonality infeasible: {0}")]
    OrthogonalityInfeasible(String),

    #[error("region is not star-shaped about its center (ray test value {value:e})")]
    StarShapeViolated { value: f64 },

    #[error("dimension too low: need n >= {required}, got n = {found}")]
    DimensionTooLow { required: usize, found: usize },

    #[error("validation failed: {check}: {detail}")]
    ValidationFailed { check: String, detail: String },

    #[error("test function is not finite at {point:?}")]
    NonSmoothTestFunction { point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn validation(check: &str, detail: impl Into<String>) -> Self {
        Error::ValidationFailed {
            check: check.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
