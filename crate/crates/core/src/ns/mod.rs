//! Density-dependent incompressible Navier-Stokes in the reformulated
//! variables `a = 1/ρ − 1`, split into a Stokes part and a perturbation.

mod config;
mod data;
mod experiments;
mod monitor;
mod run;
mod state;
mod step;

pub use config::{BootstrapConfig, Coupling, MonitorPolicy, SolverConfig};
pub use data::{FlowData, InitialData, ModeTerm, ScalarFamily, VectorFamily};
pub use experiments::{
    log_log_slope, scaling_check, stability_experiment, DifferenceSample, ScalingReport, StabilityReport,
};
pub use monitor::{cutoff_from_blocks, BootstrapMonitor, Breach, Condition, MonitorRow, ParabolicStatus, ReferenceConstants};
pub use run::{run, EnergyRecord, PressureRecord, Trajectory};
pub use state::{stokes_step, SolverState};
pub use step::perturbation_step;
