//! Variable-coefficient pressure equation `div((1+a)∇Π) = div F`.

mod coefficient;
mod solver;

pub use coefficient::CoefficientField;
pub use solver::{
    coefficient_size, elliptic_estimate_check, pressure_residual, solve_pressure, split_sources, viscous_source,
    EllipticIndices, IterationRecord, PressureOptions, PressureSolution, Reference,
};
