use thiserror::Error;

/// Errors raised by the function-space, section, group and flow operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("aliasing: grid resolution {resolution} on axis {axis} is below 2N+1 = {required}")]
    Aliasing { axis: usize, resolution: usize, required: usize },

    #[error("interpolation infeasible: residual {residual:.3e} exceeds {tolerance:.3e}")]
    Infeasible { residual: f64, tolerance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value at node {node}: {context}")]
    NonFinite { node: usize, context: String },

    #[error("incompatible chart pieces: defect {defect:.3e} between charts {chart_i} and {chart_j} at {point:?}")]
    Incompatible { defect: f64, chart_i: usize, chart_j: usize, point: Vec<f64> },

    #[error("outside the logarithm chart at chart {chart}, node {node}: {reason}")]
    ChartDomain { chart: usize, node: usize, reason: String },

    #[error("singular boundary at {point:?}: gradient norm {norm:.3e}")]
    SingularBoundary { point: Vec<f64>, norm: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
