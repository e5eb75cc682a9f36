//! Grids, fields and Fourier multipliers on the periodic box.

mod fft;
mod field;
mod grid;
pub mod ops;
pub mod products;

pub use field::{vector_lp_norm, RealField, SpectralField};
pub use grid::{GridSpec, TorusGrid, Wavenumbers};
pub(crate) use grid::GridKey;
pub use products::{product, ProductRule};

/// Transforms every component.
pub fn transform_all(fields: &[RealField]) -> Vec<SpectralField> {
    fields.iter().map(RealField::transform).collect()
}

/// Inverse-transforms every component.
pub fn inverse_all(fields: &[SpectralField]) -> Vec<RealField> {
    fields.iter().map(SpectralField::inverse).collect()
}
