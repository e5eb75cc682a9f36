use crate::error::{Error, Result};
use crate::lp::{besov_norm, high_pass, BesovParams, PartitionOfUnity};
use crate::spectral::{RealField, SpectralField, TorusGrid};

/// The coefficient `b = 1 + a` of `div(b∇Π) = div F`.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    a: RealField,
    a_hat: SpectralField,
    lower: f64,
    upper: f64,
    cutoff: Option<i32>,
}

impl CoefficientField {
    pub fn new(a: RealField) -> Result<Self> {
        let lower = 1.0 + a.min();
        let upper = 1.0 + a.max();
        if !(lower > 0.0) || !upper.is_finite() {
            return Err(Error::Parameter(format!("coefficient 1 + a must be positive, inf(1+a) = {lower}")));
        }
        let a_hat = a.transform();
        Ok(Self { a, a_hat, lower, upper, cutoff: None })
    }

    pub fn from_spectral(a: &SpectralField) -> Result<Self> {
        Self::new(a.inverse())
    }

    /// `a = 0`.
    pub fn unit(grid: TorusGrid) -> Self {
        Self::new(RealField::zeros(grid)).expect("unit coefficient is positive")
    }

    pub fn grid(&self) -> &TorusGrid {
        self.a.grid()
    }

    pub fn a(&self) -> &RealField {
        &self.a
    }

    pub fn a_hat(&self) -> &SpectralField {
        &self.a_hat
    }

    /// `b̲ = inf(1 + a)` on the grid.
    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn cutoff(&self) -> Option<i32> {
        self.cutoff
    }

    pub fn b(&self) -> RealField {
        self.a.map(|x| 1.0 + x)
    }

    /// `‖a − S_m a‖_{B^{N/p1}_{p1,∞}} + ‖a − S_m a‖_∞`.
    pub fn tail_norm(&self, m: i32, p1: f64) -> Result<f64> {
        let n = self.grid().dim() as f64;
        let tail = high_pass(&self.a_hat, &PartitionOfUnity::default(), m)?;
        Ok(besov_norm(&tail, BesovParams::new(n / p1, p1, f64::INFINITY)?)? + tail.inverse().max_abs())
    }

    /// Smallest `m ≥ -1` whose tail norm is at most `c`; stored on `self`.
    pub fn choose_cutoff(&mut self, c: f64, p1: f64) -> Result<i32> {
        if !(c > 0.0) {
            return Err(Error::Parameter(format!("cutoff threshold must be positive, got {c}")));
        }
        let lmax = PartitionOfUnity::default().weights(self.grid()).lmax;
        for m in -1..=lmax + 1 {
            if self.tail_norm(m, p1)? <= c {
                self.cutoff = Some(m);
                return Ok(m);
            }
        }
        unreachable!("the tail vanishes beyond lmax")
    }
}
