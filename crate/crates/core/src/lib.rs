//! Spectral Littlewood-Paley toolkit and density-dependent Navier-Stokes
//! solvers on the periodic box.

pub mod bony;
pub mod elliptic;
pub mod error;
pub mod harness;
pub mod inequality;
pub mod io;
pub mod lp;
pub mod ns;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
