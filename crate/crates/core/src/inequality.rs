use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation of an inequality `lhs ≲ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySample {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalitySample {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs }
    }

    /// `lhs / rhs`; a vanishing or non-finite right-hand side is degenerate.
    pub fn ratio(&self) -> Result<f64> {
        if !(self.rhs.is_finite() && self.lhs.is_finite()) || self.rhs <= 0.0 || self.lhs < 0.0 {
            return Err(Error::Degenerate(format!("lhs={:e}, rhs={:e}", self.lhs, self.rhs)));
        }
        Ok(self.lhs / self.rhs)
    }
}
