use num_complex::Complex64;
use rustfft::FftDirection;

use super::fft::fft_nd;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Real samples of a scalar function at the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    values: Vec<f64>,
}

/// Fourier coefficients `F_n` with `f(x) = Σ_n F_n e^{i k_n·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

fn check_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!(
            "grid mismatch: {:?} vs {:?}",
            a.sizes(),
            b.sizes()
        )));
    }
    Ok(())
}

impl RealField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the grid nodes; `f` receives `[x_0, x_1, x_2]`.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn transform(&self) -> SpectralField {
        let n = self.values.len() as f64;
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut data, self.grid.sizes(), FftDirection::Forward);
        for c in &mut data {
            *c /= n;
        }
        SpectralField { grid: self.grid, coeffs: data }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `(volume · mean |f|^p)^{1/p}`, or `max |f|` for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_from_iter(self.values.iter().map(|v| v.abs()), self.values.len(), self.grid.volume(), p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        check_grid(&self.grid, &other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }
}

pub(crate) fn lp_from_iter(
    abs_values: impl Iterator<Item = f64>,
    count: usize,
    volume: f64,
    p: f64,
) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("L^p exponent must satisfy p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(abs_values.fold(0.0, f64::max));
    }
    let mean = if p == 2.0 {
        abs_values.map(|v| v * v).sum::<f64>() / count as f64
    } else {
        abs_values.map(|v| v.powf(p)).sum::<f64>() / count as f64
    };
    Ok((mean * volume).powf(1.0 / p))
}

/// Pointwise Euclidean norm of a vector field, then `L^p`.
pub fn vector_lp_norm(components: &[RealField], p: f64) -> Result<f64> {
    let first = components
        .first()
        .ok_or_else(|| Error::Shape("empty vector field".into()))?;
    for c in components {
        check_grid(first.grid(), c.grid())?;
    }
    let n = first.values.len();
    let mags = (0..n).map(|i| components.iter().map(|c| c.values[i] * c.values[i]).sum::<f64>().sqrt());
    lp_from_iter(mags, n, first.grid.volume(), p)
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Back to physical space; the imaginary part (round-off for Hermitian
    /// data) is dropped.
    pub fn inverse(&self) -> RealField {
        let mut data = self.coeffs.clone();
        fft_nd(&mut data, self.grid.sizes(), FftDirection::Inverse);
        RealField { grid: self.grid, values: data.into_iter().map(|c| c.re).collect() }
    }

    /// Coefficient of the signed mode `n` (trailing entries ignored below `dim`).
    pub fn mode(&self, n: [i64; 3]) -> Complex64 {
        self.coeffs[self.mode_flat(n)]
    }

    pub fn set_mode(&mut self, n: [i64; 3], value: Complex64) {
        let idx = self.mode_flat(n);
        self.coeffs[idx] = value;
    }

    fn mode_flat(&self, n: [i64; 3]) -> usize {
        let st = self.grid.strides();
        (0..self.grid.dim()).map(|a| self.grid.mode_index(a, n[a]) * st[a]).sum()
    }

    /// Mean of the physical field (the zero mode).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `Σ |F_n|^2`, equal to the grid mean of `|f|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `‖f‖_{L^2}` through Parseval.
    pub fn l2_norm(&self) -> f64 {
        (self.energy() * self.grid.volume()).sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest `|F_n - conj(F_{-n})|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces `F` by its Hermitian part `(F_n + conj F_{-n})/2`.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c = 0.5 * (old[i] + old[self.grid.conjugate_index(i)].conj());
        }
    }

    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect(),
        }
    }

    /// Multiplies by a real symbol given per flat mode index.
    pub fn weighted(&self, weights: &[f64]) -> Self {
        debug_assert_eq!(weights.len(), self.coeffs.len());
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(weights).map(|(&c, &w)| c * w).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        check_grid(&self.grid, &other.grid)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, coeffs })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_modes(|_, v| v * c)
    }

    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        check_grid(&self.grid, &other.grid)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * c;
        }
        Ok(())
    }

    /// Largest coefficient-wise difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}
