mod experiments;
mod field;
mod solve;

pub use experiments::{scaling, stability, verify, ScalingConfig, StabilityConfig};
pub use field::{decompose_field, norm, DecomposeConfig, NormConfig};
pub use solve::{solve_elliptic, solve_ns, solve_transport, EllipticConfig, NsConfig, TransportConfig};

/// What a finished command reports.
pub struct Outcome {
    pub pass: bool,
    pub message: String,
}

impl Outcome {
    pub fn pass(message: impl Into<String>) -> Self {
        Self { pass: true, message: message.into() }
    }

    pub fn fail(message: impl Into<String>) -> Self {
        Self { pass: false, message: message.into() }
    }
}
