//! Transport `∂_t a + v·∇a = g` and the loss-of-regularity estimates.

mod advect;
mod reports;

pub use advect::{advect, frozen, step_count, transport_step, Source, TransportDiagnostics, TransportOptions, TransportRun, Velocity};
pub use reports::{
    high_frequency_report, limited_loss_report, linear_loss_report, LimitedLossIndices, LinearLossReport,
    LossSchedule, SourceSplit,
};
