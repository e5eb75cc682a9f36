use serde::{Deserialize, Serialize};

use super::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::inequality::InequalitySample;
use crate::lp::{vector_besov_norm, BesovParams};
use crate::spectral::ops::{divergence, gradient, gradient_part, inverse_laplacian, laplacian};
use crate::spectral::{product, ProductRule, SpectralField};

const GROWTH_LIMIT: usize = 5;

/// Constant `b0` around which the fixed point is built:
/// `Π^{k+1} = Δ^{-1} div(F − (b − b0)∇Π^k) / b0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// `b0 = 1`, i.e. `Π^{k+1} = Δ^{-1} div(F − a∇Π^k)`.
    #[default]
    Unit,
    /// `b0 = (inf b + sup b)/2`; contracts for any positive `b`.
    Midrange,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PressureOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rule: ProductRule,
    pub reference: Reference,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500, rule: ProductRule::Native, reference: Reference::Unit }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    pub contraction: f64,
}

#[derive(Clone, Debug)]
pub struct PressureSolution {
    pub pi: SpectralField,
    pub grad: Vec<SpectralField>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<IterationRecord>,
}

impl PressureSolution {
    /// Geometric mean of the per-step residual ratios.
    pub fn contraction(&self) -> f64 {
        let ratios: Vec<f64> = self.history.iter().skip(1).map(|r| r.contraction).filter(|c| *c > 0.0).collect();
        if ratios.is_empty() {
            return 0.0;
        }
        (ratios.iter().map(|c| c.ln()).sum::<f64>() / ratios.len() as f64).exp()
    }
}

fn times_a(coef: &CoefficientField, g: &[SpectralField], rule: ProductRule) -> Result<Vec<SpectralField>> {
    g.iter().map(|c| product(coef.a_hat(), c, rule)).collect()
}

fn check_source(coef: &CoefficientField, f: &[SpectralField]) -> Result<()> {
    if f.len() != coef.grid().dim() || f.iter().any(|c| c.grid() != coef.grid()) {
        return Err(Error::Shape("pressure source must be a vector field on the coefficient grid".into()));
    }
    Ok(())
}

/// `div(b∇Π) − div F` for a given `Π`.
pub fn pressure_residual(
    coef: &CoefficientField,
    f: &[SpectralField],
    pi: &SpectralField,
    rule: ProductRule,
) -> Result<SpectralField> {
    check_source(coef, f)?;
    let g = gradient(pi);
    let ag = times_a(coef, &g, rule)?;
    let flux: Vec<_> = g.iter().zip(&ag).map(|(x, y)| x.add(y)).collect::<Result<_>>()?;
    divergence(&flux)?.sub(&divergence(f)?)
}

/// Solves `div((1+a)∇Π) = div F` by the preconditioned fixed point and
/// returns `∇Π` (mean-free, curl-free) with the residual history.
pub fn solve_pressure(coef: &CoefficientField, f: &[SpectralField], opts: &PressureOptions) -> Result<PressureSolution> {
    check_source(coef, f)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Parameter(format!(
            "pressure solve needs tol > 0 and max_iter > 0, got tol = {}, max_iter = {}",
            opts.tol, opts.max_iter
        )));
    }
    let grid = *coef.grid();
    let div_f = divergence(f)?;
    let scale = div_f.l2_norm();
    let zero_grad = || (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect::<Vec<_>>();
    if scale == 0.0 {
        return Ok(PressureSolution {
            pi: SpectralField::zeros(grid),
            grad: zero_grad(),
            iterations: 0,
            residual: 0.0,
            history: Vec::new(),
        });
    }
    let b0 = match opts.reference {
        Reference::Unit => 1.0,
        Reference::Midrange => 0.5 * (coef.lower_bound() + coef.upper_bound()),
    };
    let shift = b0 - 1.0;
    let mut grad = zero_grad();
    let mut agrad = zero_grad();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut growth = 0;
    let mut prev = 1.0;
    for iter in 1..=opts.max_iter {
        // Δ^{-1} div(F − (a − shift)∇Π) / b0
        let mut rhs = div_f.clone();
        let mut flux = agrad.clone();
        for (fl, g) in flux.iter_mut().zip(&grad) {
            fl.axpy(-shift, g)?;
        }
        rhs.axpy(-1.0, &divergence(&flux)?)?;
        let pi = inverse_laplacian(&rhs).scale(1.0 / b0);
        grad = gradient(&pi);
        agrad = times_a(coef, &grad, opts.rule)?;
        let total: Vec<_> = grad.iter().zip(&agrad).map(|(x, y)| x.add(y)).collect::<Result<_>>()?;
        let residual = divergence(&total)?.sub(&div_f)?.l2_norm() / scale;
        let contraction = residual / prev;
        history.push(IterationRecord { iter, residual, contraction });
        log::trace!("pressure iteration {iter}: residual {residual:.3e}");
        if residual <= opts.tol {
            return Ok(PressureSolution { pi, grad, iterations: iter, residual, history });
        }
        if !residual.is_finite() {
            return Err(Error::NonConvergence { iterations: iter, residual, contraction });
        }
        growth = if residual > prev { growth + 1 } else { 0 };
        if growth >= GROWTH_LIMIT {
            return Err(Error::NonConvergence { iterations: iter, residual, contraction });
        }
        prev = residual;
    }
    Err(Error::Timeout { iterations: opts.max_iter, residual: prev })
}

/// `(∇Π₁, ∇Π₂)` with `div(b∇Π₁) = div f` and `div(b∇Π₂) = div h`.
pub fn split_sources(
    coef: &CoefficientField,
    f: &[SpectralField],
    h: &[SpectralField],
    opts: &PressureOptions,
) -> Result<(PressureSolution, PressureSolution)> {
    Ok((solve_pressure(coef, f, opts)?, solve_pressure(coef, h, opts)?))
}

/// `H = g + μ a Δu`.
pub fn viscous_source(
    g: &[SpectralField],
    a: &SpectralField,
    u: &[SpectralField],
    mu: f64,
    rule: ProductRule,
) -> Result<Vec<SpectralField>> {
    if g.len() != u.len() {
        return Err(Error::Shape("source and velocity have different component counts".into()));
    }
    g.iter()
        .zip(u)
        .map(|(gi, ui)| {
            let mut h = gi.clone();
            h.axpy(mu, &product(a, &laplacian(ui), rule)?)?;
            Ok(h)
        })
        .collect()
}

/// Indices of the stationary elliptic estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticIndices {
    pub sigma: f64,
    #[serde(with = "crate::harness::extended")]
    pub p: f64,
    #[serde(with = "crate::harness::extended")]
    pub r: f64,
    #[serde(with = "crate::harness::extended")]
    pub p1: f64,
    pub alpha: f64,
}

impl EllipticIndices {
    /// Checks `0 < α < 1` and `α ≤ σ ≤ α + N/p1`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!("elliptic estimate needs 0 < alpha < 1, got {}", self.alpha)));
        }
        let hi = self.alpha + dim as f64 / self.p1;
        if !(self.sigma >= self.alpha && self.sigma <= hi) {
            return Err(Error::Parameter(format!(
                "elliptic estimate needs alpha <= sigma <= alpha + N/p1 = {hi}, got sigma = {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// The ratio is only asserted for `|σ| ≥ 0.25`; below that it is reported.
    pub fn asserted(&self) -> bool {
        self.sigma.abs() >= 0.25
    }
}

/// `𝒜 = 1 + b̲^{-1}‖∇a‖_{B^{N/p1+α−1}_{p1,r}}`.
pub fn coefficient_size(coef: &CoefficientField, idx: &EllipticIndices) -> Result<f64> {
    let n = coef.grid().dim() as f64;
    let ga = gradient(coef.a_hat());
    let norm = vector_besov_norm(&ga, BesovParams::new(n / idx.p1 + idx.alpha - 1.0, idx.p1, idx.r)?)?;
    Ok(1.0 + norm / coef.lower_bound())
}

/// `b̲‖∇Π‖_{B^σ_{p,r}}` against `𝒜^{|σ|/min(1,α)}‖QF‖_{B^σ_{p,r}}`.
pub fn elliptic_estimate_check(
    coef: &CoefficientField,
    f: &[SpectralField],
    grad_pi: &[SpectralField],
    idx: &EllipticIndices,
) -> Result<InequalitySample> {
    idx.validate(coef.grid().dim())?;
    let bp = BesovParams::new(idx.sigma, idx.p, idx.r)?;
    let lhs = coef.lower_bound() * vector_besov_norm(grad_pi, bp)?;
    let qf = gradient_part(f)?;
    let power = idx.sigma.abs() / idx.alpha.min(1.0);
    let rhs = coefficient_size(coef, idx)?.powf(power) * vector_besov_norm(&qf, bp)?;
    Ok(InequalitySample::new(lhs, rhs))
}
