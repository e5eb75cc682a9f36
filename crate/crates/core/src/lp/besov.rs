use serde::{Deserialize, Serialize};

use super::partition::PartitionOfUnity;
use crate::error::{Error, Result};
use crate::spectral::{vector_lp_norm, SpectralField};

/// Index triple `(s, p, r)` of `B^s_{p,r}`; `f64::INFINITY` encodes `∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !(p >= 1.0) || !(r >= 1.0) || !s.is_finite() {
            return Err(Error::Parameter(format!(
                "Besov indices need finite s, p >= 1, r >= 1; got ({s}, {p}, {r})"
            )));
        }
        Ok(Self { s, p, r })
    }
}

/// `‖Δ_l u‖_{L^p}` for `l = -1..=lmax` (entry `0` is `l = -1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockNorms {
    pub p: f64,
    pub norms: Vec<f64>,
}

/// `ℓ^r` norm of a nonnegative sequence, `r = ∞` as the maximum.
pub fn lr_norm(values: impl IntoIterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else if r == 1.0 {
        values.into_iter().sum()
    } else {
        values.into_iter().map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

impl BlockNorms {
    pub fn lmax(&self) -> i32 {
        self.norms.len() as i32 - 2
    }

    pub fn get(&self, l: i32) -> f64 {
        if l < -1 || l > self.lmax() {
            0.0
        } else {
            self.norms[(l + 1) as usize]
        }
    }

    /// Weighted block values `2^{ls}‖Δ_l u‖` for `l ≥ from`.
    pub fn weighted(&self, s: f64, from: i32) -> impl Iterator<Item = f64> + '_ {
        self.norms
            .iter()
            .enumerate()
            .map(|(i, &n)| (i as i32 - 1, n))
            .filter(move |&(l, _)| l >= from)
            .map(move |(l, n)| 2f64.powf(l as f64 * s) * n)
    }

    pub fn besov(&self, s: f64, r: f64) -> f64 {
        lr_norm(self.weighted(s, -1), r)
    }

    /// `(Σ_{l ≥ m} (2^{ls}‖Δ_l u‖)^r)^{1/r}`.
    pub fn tail(&self, s: f64, r: f64, m: i32) -> f64 {
        lr_norm(self.weighted(s, m), r)
    }
}

/// Block norms of a scalar field with the default partition.
pub fn block_norms(u: &SpectralField, p: f64) -> Result<BlockNorms> {
    block_norms_with(&PartitionOfUnity::default(), std::slice::from_ref(u), p)
}

/// Block norms of a vector field (pointwise Euclidean norm inside `L^p`).
pub fn vector_block_norms(u: &[SpectralField], p: f64) -> Result<BlockNorms> {
    block_norms_with(&PartitionOfUnity::default(), u, p)
}

pub fn block_norms_with(pou: &PartitionOfUnity, u: &[SpectralField], p: f64) -> Result<BlockNorms> {
    let first = u.first().ok_or_else(|| Error::Shape("empty field list".into()))?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("L^p exponent must satisfy p >= 1, got {p}")));
    }
    let grid = *first.grid();
    let w = pou.weights(&grid);
    let vol = grid.volume();
    let mut norms = Vec::with_capacity(w.lmax as usize + 2);
    for l in -1..=w.lmax {
        let m = w.block(l).unwrap();
        let n = if p == 2.0 {
            let e: f64 = u
                .iter()
                .map(|c| c.coeffs().iter().zip(m).map(|(z, &wt)| wt * wt * z.norm_sqr()).sum::<f64>())
                .sum();
            (e * vol).sqrt()
        } else {
            let phys: Vec<_> = u.iter().map(|c| c.weighted(m).inverse()).collect();
            vector_lp_norm(&phys, p)?
        };
        norms.push(n);
    }
    Ok(BlockNorms { p, norms })
}

pub fn besov_norm(u: &SpectralField, bp: BesovParams) -> Result<f64> {
    Ok(block_norms(u, bp.p)?.besov(bp.s, bp.r))
}

pub fn vector_besov_norm(u: &[SpectralField], bp: BesovParams) -> Result<f64> {
    Ok(vector_block_norms(u, bp.p)?.besov(bp.s, bp.r))
}
