//! Random fields with prescribed Besov regularity.
//!
//! Block `l ≥ 0` of a sample is a random-phase trigonometric polynomial on
//! the core shell `{4/3·2^l < |ξ| < 3/2·2^l}` where `φ_l ≡ 1`, scaled to
//! `‖Δ_l u‖_{L^p} = amp·2^{−ls}·ε_l`. The blocks of the partition therefore
//! reproduce the generated blocks exactly, and
//! `‖u‖_{B^s_{p,r}} = amp·‖ε‖_{ℓ^r}` up to the sampling of the `L^p` norm.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lp::lr_norm;
use crate::spectral::ops::leray_project;
use crate::spectral::{GridSpec, RealField, SpectralField, TorusGrid};

const MARGIN: f64 = 1e-9;

/// Block amplitude law `ε_l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    /// `ε_l = 1` for `l = block`, zero elsewhere.
    Single { block: i32 },
    /// `ε_l = (l + 1)^{−decay}`.
    Power { decay: f64 },
    /// `ε_l = ratio^l`.
    Geometric { ratio: f64 },
}

impl Envelope {
    pub fn weight(&self, l: i32) -> f64 {
        match *self {
            Envelope::Single { block } => {
                if l == block {
                    1.0
                } else {
                    0.0
                }
            }
            Envelope::Power { decay } => ((l + 1) as f64).powf(-decay),
            Envelope::Geometric { ratio } => ratio.powi(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Target regularity `s`.
    pub s: f64,
    /// Integrability `p` of the block normalisation.
    #[serde(with = "super::laws::extended")]
    pub p: f64,
    /// Summability `r` of the design norm.
    #[serde(with = "super::laws::extended")]
    pub r: f64,
    pub envelope: Envelope,
    pub seed: u64,
    pub grid: GridSpec,
    #[serde(default)]
    pub lmax: Option<i32>,
    #[serde(default = "one")]
    pub amp: f64,
}

fn one() -> f64 {
    1.0
}

impl SampleSpec {
    pub fn new(s: f64, p: f64, r: f64, envelope: Envelope, seed: u64, grid: GridSpec) -> Self {
        Self { s, p, r, envelope, seed, grid, lmax: None, amp: 1.0 }
    }

    pub fn validate(&self) -> Result<TorusGrid> {
        if !(self.p >= 1.0) || !(self.r >= 1.0) {
            return Err(Error::Parameter(format!("sample needs p, r >= 1, got p = {}, r = {}", self.p, self.r)));
        }
        if !self.s.is_finite() || !(self.amp.is_finite() && self.amp > 0.0) {
            return Err(Error::Parameter(format!("sample needs finite s and amp > 0, got s = {}, amp = {}", self.s, self.amp)));
        }
        match self.envelope {
            Envelope::Power { decay } if !decay.is_finite() => {
                return Err(Error::Parameter(format!("power envelope needs a finite decay, got {decay}")))
            }
            Envelope::Geometric { ratio } if !(ratio > 0.0 && ratio.is_finite()) => {
                return Err(Error::Parameter(format!("geometric envelope needs ratio > 0, got {ratio}")))
            }
            Envelope::Single { block } if block < 0 => {
                return Err(Error::Parameter(format!("single-block envelope needs block >= 0, got {block}")))
            }
            _ => {}
        }
        let grid = TorusGrid::from_spec(&self.grid)?;
        if grid.dim() < 2 {
            return Err(Error::Parameter("samples need a grid of dimension 2 or 3".into()));
        }
        Ok(grid)
    }

    /// Blocks present on the grid: `0..=min(lmax, last fully resolved shell)`.
    pub fn blocks(&self) -> Result<Vec<i32>> {
        let grid = self.validate()?;
        let mut out = Vec::new();
        let mut l = 0;
        while resolved(&grid, l) {
            if self.lmax.is_some_and(|m| l > m) {
                break;
            }
            if self.envelope.weight(l) != 0.0 {
                out.push(l);
            }
            l += 1;
        }
        Ok(out)
    }

    /// `amp·‖(ε_l)‖_{ℓ^r}` over the blocks present.
    pub fn design_norm(&self) -> Result<f64> {
        Ok(self.amp * lr_norm(self.blocks()?.into_iter().map(|l| self.envelope.weight(l)), self.r))
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

fn bounds(grid: &TorusGrid, l: i32) -> Vec<i64> {
    let top = 1.5 * 2f64.powi(l);
    grid.periods().iter().map(|&per| (top * per / (2.0 * PI)).floor() as i64).collect()
}

fn resolved(grid: &TorusGrid, l: i32) -> bool {
    bounds(grid, l).iter().zip(grid.sizes()).all(|(&b, &n)| 2 * b < n as i64)
}

/// Signed modes of the core shell of block `l` in a half space, in a
/// resolution-independent order.
fn core_modes(periods: &[f64], bounds: &[i64], l: i32) -> Vec<[i64; 3]> {
    let lo = 4.0 / 3.0 * 2f64.powi(l) * (1.0 + MARGIN);
    let hi = 1.5 * 2f64.powi(l) * (1.0 - MARGIN);
    let dim = periods.len();
    let mut out = Vec::new();
    let b = |a: usize| if a < dim { bounds[a] } else { 0 };
    for i in -b(0)..=b(0) {
        for j in -b(1)..=b(1) {
            for k in -b(2)..=b(2) {
                let n = [i, j, k];
                let first = n.iter().copied().find(|&x| x != 0);
                if first.is_none_or(|x| x < 0) {
                    continue;
                }
                let xi = (0..dim).map(|a| (2.0 * PI * n[a] as f64 / periods[a]).powi(2)).sum::<f64>().sqrt();
                if xi > lo && xi < hi {
                    out.push(n);
                }
            }
        }
    }
    out
}

fn block_lp(periods: &[f64], coeffs: &[([i64; 3], Complex64)], p: f64) -> Result<f64> {
    if p == 2.0 {
        return Ok((2.0 * coeffs.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>() * periods.iter().product::<f64>()).sqrt());
    }
    let top = coeffs.iter().flat_map(|(n, _)| n.iter().map(|x| x.abs())).max().unwrap_or(0) as usize;
    let size = (4 * top + 4).next_power_of_two();
    let grid = TorusGrid::new(&vec![size; periods.len()], periods)?;
    let mut f = SpectralField::zeros(grid);
    place(&mut f, coeffs, 1.0);
    f.inverse().lp_norm(p)
}

fn place(f: &mut SpectralField, coeffs: &[([i64; 3], Complex64)], scale: f64) {
    for (n, c) in coeffs {
        f.set_mode(*n, c * scale);
        f.set_mode([-n[0], -n[1], -n[2]], c.conj() * scale);
    }
}

/// The sample as Fourier coefficients on its grid.
pub fn generate_spectral(spec: &SampleSpec) -> Result<SpectralField> {
    let grid = spec.validate()?;
    let mut f = SpectralField::zeros(grid);
    for l in spec.blocks()? {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(l as u64 + 1);
        let modes = core_modes(grid.periods(), &bounds(&grid, l), l);
        if modes.is_empty() {
            continue;
        }
        let coeffs: Vec<_> = modes
            .into_iter()
            .map(|n| {
                let mag: f64 = rng.gen_range(0.5..1.0);
                let ph: f64 = rng.gen_range(0.0..2.0 * PI);
                (n, Complex64::from_polar(mag, ph))
            })
            .collect();
        let norm = block_lp(grid.periods(), &coeffs, spec.p)?;
        let target = spec.amp * 2f64.powf(-(l as f64) * spec.s) * spec.envelope.weight(l);
        place(&mut f, &coeffs, target / norm);
    }
    Ok(f)
}

/// The sample in physical space.
pub fn generate_sample(spec: &SampleSpec) -> Result<RealField> {
    Ok(generate_spectral(spec)?.inverse())
}

/// `dim` independent components with seeds `seed, seed+1, …`, optionally
/// Leray-projected.
pub fn generate_vector(spec: &SampleSpec, solenoidal: bool) -> Result<Vec<SpectralField>> {
    let dim = spec.validate()?.dim();
    let u = (0..dim as u64).map(|i| generate_spectral(&spec.with_seed(spec.seed.wrapping_add(i)))).collect::<Result<Vec<_>>>()?;
    if solenoidal {
        leray_project(&u)
    } else {
        Ok(u)
    }
}
