use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error(
        "fixed-point iteration diverged after {iterations} iterations \
         (residual {residual:.3e}, measured contraction factor {contraction:.3})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        contraction: f64,
    },

    #[error("fixed-point iteration hit max_iter={iterations} with residual {residual:.3e}")]
    Timeout { iterations: usize, residual: f64 },

    #[error("CFL condition violated: max|v|*dt/h = {number:.4} exceeds limit {limit}")]
    Cfl { number: f64, limit: f64 },

    #[error("density bound breached at t={time:.6}: min(1+a) = {min_b:.6} < {bound:.6}")]
    DensityBound { time: f64, min_b: f64, bound: f64 },

    #[error("loss schedule exhausted at t={time:.6}: sigma_t = {sigma:.6} fell below floor {floor}")]
    ScheduleExhausted { time: f64, sigma: f64, floor: f64 },

    #[error("velocity lost incompressibility at t={time:.6}: divergence defect {defect:.3e}")]
    DivergenceDefect { time: f64, defect: f64 },

    #[error("bootstrap condition {condition} breached at t={time:.6}: {detail}")]
    MonitorBreach { condition: String, time: f64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical_abort(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Timeout { .. }
                | Error::Cfl { .. }
                | Error::DensityBound { .. }
                | Error::ScheduleExhausted { .. }
                | Error::MonitorBreach { .. }
                | Error::DivergenceDefect { .. }
        )
    }
}
