use crate::error::{Error, Result};
use crate::spectral::ops::{divergence, gradient_part, leray_project};
use crate::spectral::{RealField, SpectralField, TorusGrid};

/// Unknowns of the reformulated system together with the Stokes split
/// `u = u_L + ũ`, `∇Π = ∇Π_L + ∇Π̃`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub a: SpectralField,
    pub u_l: Vec<SpectralField>,
    pub u_tilde: Vec<SpectralField>,
    pub grad_pi_l: Vec<SpectralField>,
    pub grad_pi_tilde: Vec<SpectralField>,
}

pub(crate) fn sum(x: &[SpectralField], y: &[SpectralField]) -> Result<Vec<SpectralField>> {
    x.iter().zip(y).map(|(a, b)| a.add(b)).collect()
}

pub(crate) fn zeros(grid: TorusGrid) -> Vec<SpectralField> {
    (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect()
}

impl SolverState {
    /// State at `t = 0`: `u_L = u₀`, `ũ = 0`, `∇Π_L = Qf`, `∇Π̃ = 0`.
    pub fn initial(a0: &SpectralField, u0: &[SpectralField], f: &[SpectralField]) -> Result<Self> {
        let grid = *a0.grid();
        if u0.len() != grid.dim() || f.len() != grid.dim() || u0.iter().chain(f).any(|c| *c.grid() != grid) {
            return Err(Error::Shape("velocity and forcing must be vector fields on the density grid".into()));
        }
        Ok(Self {
            t: 0.0,
            a: a0.clone(),
            u_l: u0.to_vec(),
            u_tilde: zeros(grid),
            grad_pi_l: gradient_part(f)?,
            grad_pi_tilde: zeros(grid),
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.a.grid()
    }

    pub fn u(&self) -> Result<Vec<SpectralField>> {
        sum(&self.u_l, &self.u_tilde)
    }

    pub fn grad_pi(&self) -> Result<Vec<SpectralField>> {
        sum(&self.grad_pi_l, &self.grad_pi_tilde)
    }

    pub fn a_field(&self) -> RealField {
        self.a.inverse()
    }

    /// `max |div u|` relative to `max|û|·k_max` (one when `u = 0`).
    pub fn divergence_defect(&self) -> Result<f64> {
        let u = self.u()?;
        let scale = u.iter().map(|c| c.max_abs_coeff()).fold(0.0, f64::max) * self.grid().wavenumbers().kmax();
        Ok(divergence(&u)?.max_abs_coeff() / scale.max(f64::MIN_POSITIVE))
    }

    /// `∫ ρ|u|²` with `ρ = 1/(1+a)`.
    pub fn kinetic_energy(&self) -> Result<f64> {
        let a = self.a_field();
        let u: Vec<RealField> = self.u()?.iter().map(SpectralField::inverse).collect();
        let n = a.values().len();
        let mut e = 0.0;
        for i in 0..n {
            let s: f64 = u.iter().map(|c| c.values()[i] * c.values()[i]).sum();
            e += s / (1.0 + a.values()[i]);
        }
        Ok(e / n as f64 * self.grid().volume())
    }

    /// `∫ ρ u`, the momentum.
    pub fn momentum(&self) -> Result<Vec<f64>> {
        let a = self.a_field();
        self.u()?
            .iter()
            .map(|c| {
                let v = c.inverse();
                let s: f64 = v.values().iter().zip(a.values()).map(|(x, b)| x / (1.0 + b)).sum();
                Ok(s / v.values().len() as f64 * self.grid().volume())
            })
            .collect()
    }
}

/// Exact update of `∂_t u_L − μΔu_L + ∇Π_L = f` over `dt` for
/// time-independent `f`: per mode
/// `û_L ← e^{−μ|k|²dt}û_L + (1 − e^{−μ|k|²dt})/(μ|k|²) (Pf)^`,
/// and `∇Π_L = Qf`.
pub fn stokes_step(
    u_l: &[SpectralField],
    f: &[SpectralField],
    mu: f64,
    dt: f64,
) -> Result<(Vec<SpectralField>, Vec<SpectralField>)> {
    let pf = leray_project(f)?;
    let grad = gradient_part(f)?;
    Ok((stokes_propagate(u_l, &pf, mu, dt)?, grad))
}

/// Same as [`stokes_step`] with `Pf` already formed.
pub(crate) fn stokes_propagate(u_l: &[SpectralField], pf: &[SpectralField], mu: f64, dt: f64) -> Result<Vec<SpectralField>> {
    if u_l.len() != pf.len() {
        return Err(Error::Shape("velocity and forcing have different component counts".into()));
    }
    let w = u_l[0].grid().wavenumbers();
    u_l.iter()
        .zip(pf)
        .map(|(u, g)| {
            if u.grid() != g.grid() {
                return Err(Error::Shape("velocity and forcing live on different grids".into()));
            }
            let mut out = u.clone();
            for (i, (o, gi)) in out.coeffs_mut().iter_mut().zip(g.coeffs()).enumerate() {
                let lam = mu * w.kd2[i];
                let e = (-lam * dt).exp();
                let phi = if lam > 0.0 { -(-lam * dt).exp_m1() / lam } else { dt };
                *o = *o * e + gi * phi;
            }
            Ok(out)
        })
        .collect()
}

/// `e^{μτΔ}` applied to each component.
pub(crate) fn heat(u: &[SpectralField], mu: f64, tau: f64) -> Vec<SpectralField> {
    let w = u[0].grid().wavenumbers();
    u.iter().map(|c| c.map_modes(|i, z| z * (-mu * w.kd2[i] * tau).exp())).collect()
}
