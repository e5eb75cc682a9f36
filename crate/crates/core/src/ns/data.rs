//! Named families of initial data.
//!
//! Families are written in the angles `θ_i = 2π x_i / L_i`, so the node
//! values do not depend on the box periods.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::ops::leray_project;
use crate::spectral::products::strip_nyquist;
use crate::spectral::{RealField, SpectralField, TorusGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTerm {
    pub amp: f64,
    pub k: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarFamily {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `Σ amp cos(k·θ + phase)`.
    Modes { terms: Vec<ModeTerm> },
    /// `amp exp((Σ cos(θ_i − π) − N)/w²)`, a periodic bump centred in the box.
    Bump { amp: f64, width: f64 },
    /// Random coefficients on `0 < |n|_∞ ≤ kmax` with weight `(1+|n|)^{-decay}`,
    /// rescaled to `max|a| = amp`.
    Random { amp: f64, seed: u64, kmax: i64, #[serde(default)] decay: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorFamily {
    #[default]
    Zero,
    /// `u_0 = amp sin(k θ_1)`, other components zero.
    Shear { amp: f64, k: i64 },
    /// `amp (sin kθ_1 cos kθ_2, −cos kθ_1 sin kθ_2[, 0])`, times `cos kθ_3` in 3-D.
    TaylorGreen { amp: f64, k: i64 },
    /// Leray projection of random coefficients, mean removed, rescaled to
    /// `max|u| = amp`.
    Random { amp: f64, seed: u64, kmax: i64, #[serde(default)] decay: f64 },
}

fn angles(grid: &TorusGrid, x: [f64; 3]) -> [f64; 3] {
    let mut t = [0.0; 3];
    for (a, ta) in t.iter_mut().enumerate().take(grid.dim()) {
        *ta = 2.0 * PI * x[a] / grid.periods()[a];
    }
    t
}

fn random_coeffs(grid: TorusGrid, seed: u64, kmax: i64, decay: f64) -> Result<SpectralField> {
    if kmax < 1 || kmax >= (grid.sizes().iter().min().copied().unwrap_or(0) / 2) as i64 {
        return Err(Error::Parameter(format!("random family needs 1 <= kmax < N/2, got {kmax}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    for idx in 0..grid.len() {
        let n = grid.modes(idx);
        let inf = n.iter().map(|x| x.abs()).max().unwrap_or(0);
        if inf == 0 || inf > kmax {
            continue;
        }
        let mag = (n.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
        let w = (1.0 + mag).powf(-decay);
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        f.coeffs_mut()[idx] = Complex64::new(re, im) * w;
    }
    f.symmetrize();
    Ok(f)
}

fn rescale_to(fields: Vec<SpectralField>, amp: f64) -> Result<Vec<SpectralField>> {
    let phys: Vec<RealField> = fields.iter().map(SpectralField::inverse).collect();
    let m = crate::spectral::vector_lp_norm(&phys, f64::INFINITY)?;
    if m == 0.0 {
        return Err(Error::Degenerate("random family produced a zero field".into()));
    }
    Ok(fields.iter().map(|f| f.scale(amp / m)).collect())
}

impl ScalarFamily {
    pub fn build(&self, grid: TorusGrid) -> Result<SpectralField> {
        let dim = grid.dim();
        let field = match self {
            ScalarFamily::Zero => SpectralField::zeros(grid),
            ScalarFamily::Constant { value } => RealField::constant(grid, *value).transform(),
            ScalarFamily::Modes { terms } => {
                for t in terms {
                    if t.k.len() != dim {
                        return Err(Error::Shape(format!("mode {:?} on a {dim}-dimensional grid", t.k)));
                    }
                }
                RealField::from_fn(grid, |x| {
                    let th = angles(&grid, x);
                    terms
                        .iter()
                        .map(|t| t.amp * (t.k.iter().zip(&th).map(|(k, a)| *k as f64 * a).sum::<f64>() + t.phase).cos())
                        .sum()
                })
                .transform()
            }
            ScalarFamily::Bump { amp, width } => {
                if !(*width > 0.0) {
                    return Err(Error::Parameter(format!("bump width must be positive, got {width}")));
                }
                RealField::from_fn(grid, |x| {
                    let th = angles(&grid, x);
                    let s: f64 = th[..dim].iter().map(|t| (t - PI).cos()).sum();
                    amp * ((s - dim as f64) / (width * width)).exp()
                })
                .transform()
            }
            ScalarFamily::Random { amp, seed, kmax, decay } => {
                let f = random_coeffs(grid, *seed, *kmax, *decay)?;
                rescale_to(vec![f], *amp)?.remove(0)
            }
        };
        Ok(strip_nyquist(&field))
    }
}

impl VectorFamily {
    /// Builds the field and Leray-projects it.
    pub fn build(&self, grid: TorusGrid) -> Result<Vec<SpectralField>> {
        let dim = grid.dim();
        let zeros = || (0..dim).map(|_| SpectralField::zeros(grid)).collect::<Vec<_>>();
        let raw = match self {
            VectorFamily::Zero => zeros(),
            VectorFamily::Shear { amp, k } => {
                let mut u = zeros();
                u[0] = RealField::from_fn(grid, |x| amp * (*k as f64 * angles(&grid, x)[1]).sin()).transform();
                u
            }
            VectorFamily::TaylorGreen { amp, k } => {
                let k = *k as f64;
                let z = move |th: [f64; 3]| if dim == 3 { (k * th[2]).cos() } else { 1.0 };
                let mut u = zeros();
                u[0] = RealField::from_fn(grid, |x| {
                    let th = angles(&grid, x);
                    amp * (k * th[0]).sin() * (k * th[1]).cos() * z(th)
                })
                .transform();
                u[1] = RealField::from_fn(grid, |x| {
                    let th = angles(&grid, x);
                    -amp * (k * th[0]).cos() * (k * th[1]).sin() * z(th)
                })
                .transform();
                u
            }
            VectorFamily::Random { amp, seed, kmax, decay } => {
                let comps = (0..dim)
                    .map(|c| random_coeffs(grid, seed.wrapping_add(c as u64 * 7919), *kmax, *decay))
                    .collect::<Result<Vec<_>>>()?;
                rescale_to(leray_project(&comps)?, *amp)?
            }
        };
        let stripped: Vec<_> = raw.iter().map(strip_nyquist).collect();
        leray_project(&stripped)
    }
}

/// Density perturbation, velocity and (time-independent) forcing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    pub density: ScalarFamily,
    pub velocity: VectorFamily,
    pub forcing: VectorFamily,
}

/// Data of one run: `a₀`, `u₀` and the forcing `f`.
#[derive(Clone, Debug)]
pub struct FlowData {
    pub a0: SpectralField,
    pub u0: Vec<SpectralField>,
    pub f: Vec<SpectralField>,
}

impl InitialData {
    pub fn build(&self, grid: TorusGrid) -> Result<FlowData> {
        Ok(FlowData { a0: self.density.build(grid)?, u0: self.velocity.build(grid)?, f: self.forcing.build(grid)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::divergence;

    #[test]
    fn families_parse_by_name() {
        let d: InitialData = serde_json::from_str(
            r#"{"density": {"family": "modes", "terms": [{"amp": 0.1, "k": [1, 0]}]},
                "velocity": {"family": "taylor-green", "amp": 1.0, "k": 1}}"#,
        )
        .unwrap();
        assert_eq!(d.forcing, VectorFamily::Zero);
        assert!(serde_json::from_str::<InitialData>(r#"{"density": {"family": "vortex-sheet"}}"#).is_err());
    }

    #[test]
    fn node_values_do_not_depend_on_period() {
        let g1 = TorusGrid::cubic(2, 16).unwrap();
        let g2 = g1.rescaled(0.5).unwrap();
        let fam = ScalarFamily::Bump { amp: 0.3, width: 0.8 };
        let a = fam.build(g1).unwrap().inverse();
        let b = fam.build(g2).unwrap().inverse();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn velocities_are_solenoidal() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        for fam in [
            VectorFamily::Shear { amp: 1.0, k: 2 },
            VectorFamily::TaylorGreen { amp: 1.0, k: 1 },
            VectorFamily::Random { amp: 0.5, seed: 3, kmax: 4, decay: 1.0 },
        ] {
            let u = fam.build(g).unwrap();
            assert!(divergence(&u).unwrap().max_abs_coeff() < 1e-14);
            assert!(u.iter().all(|c| c.hermitian_defect() < 1e-15));
        }
        let r = VectorFamily::Random { amp: 0.5, seed: 3, kmax: 4, decay: 1.0 }.build(g).unwrap();
        let phys: Vec<_> = r.iter().map(SpectralField::inverse).collect();
        let m = crate::spectral::vector_lp_norm(&phys, f64::INFINITY).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_scalar_is_deterministic() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let fam = ScalarFamily::Random { amp: 0.1, seed: 9, kmax: 5, decay: 2.0 };
        let a = fam.build(g).unwrap();
        assert_eq!(a, fam.build(g).unwrap());
        assert!((a.inverse().max_abs() - 0.1).abs() < 1e-12);
        assert!(a.mean().abs() < 1e-16);
    }
}
