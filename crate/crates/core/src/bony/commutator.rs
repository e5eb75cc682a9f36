//! The commutator `R_q = Δ_q(a ∂_k w) − ∂_k(a Δ_q w)` and its five-term split.
//!
//! Products are exact truncations (3/2 padding) of Nyquist-free inputs, so
//! the Leibniz rule holds on the grid and the split recombines to round-off.

use serde::{Deserialize, Serialize};

use super::paraproduct::{paraproduct, remainder};
use crate::error::{Error, Result};
use crate::inequality::InequalitySample;
use crate::lp::{besov_norm, block, lr_norm, partial_sum, BesovParams, PartitionOfUnity};
use crate::spectral::ops::partial;
use crate::spectral::products::strip_nyquist;
use crate::spectral::{product, ProductRule, SpectralField};

const RULE: ProductRule = ProductRule::Padded32;

/// Range of `q'` contributing to `R¹_q = Σ_{q'} ∂_k[Δ_q, S_{q'−1}a]Δ_{q'}w`
/// for the default partition.
pub fn r1_window(q: i32) -> (i32, i32) {
    (q - 2, q + 4)
}

/// Lowest `q'` contributing to `R⁵_q = ∂_k(T_{Δ_q w}a + R(a, Δ_q w))`.
pub fn r5_lowest(q: i32) -> i32 {
    q - 2
}

fn check(a: &SpectralField, w: &SpectralField, k: usize) -> Result<()> {
    if a.grid() != w.grid() {
        return Err(Error::Shape("commutator operands live on different grids".into()));
    }
    if k >= a.grid().dim() {
        return Err(Error::Parameter(format!("axis {k} out of range for a {}-D grid", a.grid().dim())));
    }
    Ok(())
}

/// `R_q` for every block `q = -1..=lmax` (entry `0` is `q = -1`).
pub fn commutator_blocks(a: &SpectralField, w: &SpectralField, k: usize) -> Result<Vec<SpectralField>> {
    check(a, w, k)?;
    let pou = PartitionOfUnity::default();
    let a = strip_nyquist(a);
    let w = strip_nyquist(w);
    let adw = product(&a, &partial(&w, k), RULE)?;
    let lmax = pou.weights(a.grid()).lmax;
    (-1..=lmax)
        .map(|q| {
            let left = block(&adw, &pou, q);
            let right = partial(&product(&a, &block(&w, &pou, q), RULE)?, k);
            left.sub(&right)
        })
        .collect()
}

pub fn commutator(a: &SpectralField, w: &SpectralField, k: usize, q: i32) -> Result<SpectralField> {
    check(a, w, k)?;
    let pou = PartitionOfUnity::default();
    let a = strip_nyquist(a);
    let w = strip_nyquist(w);
    let left = block(&product(&a, &partial(&w, k), RULE)?, &pou, q);
    let right = partial(&product(&a, &block(&w, &pou, q), RULE)?, k);
    left.sub(&right)
}

/// The five pieces with `R_q = R¹ − R² + R³ + R⁴ − R⁵`.
#[derive(Clone, Debug)]
pub struct CommutatorSplit {
    pub r1: SpectralField,
    pub r2: SpectralField,
    pub r3: SpectralField,
    pub r4: SpectralField,
    pub r5: SpectralField,
}

impl CommutatorSplit {
    pub fn recombine(&self) -> Result<SpectralField> {
        self.r1.sub(&self.r2)?.add(&self.r3)?.add(&self.r4)?.sub(&self.r5)
    }
}

pub fn commutator_split(a: &SpectralField, w: &SpectralField, k: usize, q: i32) -> Result<CommutatorSplit> {
    check(a, w, k)?;
    let pou = PartitionOfUnity::default();
    let a = strip_nyquist(a);
    let w = strip_nyquist(w);
    let dka = partial(&a, k);
    let dkw = partial(&w, k);
    let qw = block(&w, &pou, q);
    let r1 = partial(&block(&paraproduct(&a, &w, RULE)?, &pou, q).sub(&paraproduct(&a, &qw, RULE)?)?, k);
    let r2 = block(&paraproduct(&dka, &w, RULE)?, &pou, q);
    let r3 = block(&paraproduct(&dkw, &a, RULE)?, &pou, q);
    let r4 = block(&remainder(&dkw, &a, RULE)?, &pou, q);
    let r5 = partial(&paraproduct(&qw, &a, RULE)?.add(&remainder(&a, &qw, RULE)?)?, k);
    Ok(CommutatorSplit { r1, r2, r3, r4, r5 })
}

/// `[Δ_q, S_{q'−1}a] Δ_{q'} w`.
pub fn kernel_commutator(a: &SpectralField, w: &SpectralField, q: i32, qp: i32) -> Result<SpectralField> {
    if a.grid() != w.grid() {
        return Err(Error::Shape("commutator operands live on different grids".into()));
    }
    let pou = PartitionOfUnity::default();
    let sa = partial_sum(&strip_nyquist(a), &pou, qp - 1);
    let dw = block(&strip_nyquist(w), &pou, qp);
    let first = block(&product(&sa, &dw, RULE)?, &pou, q);
    let second = product(&sa, &block(&dw, &pou, q), RULE)?;
    first.sub(&second)
}

/// Indices of the commutator estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorIndices {
    pub sigma: f64,
    pub p: f64,
    pub p1: f64,
    pub alpha: f64,
    pub r: f64,
}

impl CommutatorIndices {
    /// Checks `α ∈ (1 − N/p, 1)` and `−N/p1 ≤ σ ≤ N/p1 + α`; `σ = −N/p1` is
    /// the limit case.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        if !(self.alpha > 1.0 - n / self.p && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "commutator needs 1 - N/p < alpha < 1, got alpha = {}",
                self.alpha
            )));
        }
        if !(self.sigma >= -n / self.p1 - 1e-12 && self.sigma <= n / self.p1 + self.alpha) {
            return Err(Error::Parameter(format!(
                "commutator needs -N/p1 <= sigma <= N/p1 + alpha, got sigma = {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn is_limit_case(&self, dim: usize) -> bool {
        (self.sigma + dim as f64 / self.p1).abs() < 1e-12
    }
}

/// Outcome of one commutator sample: the `c_q` sequence and the summary
/// ratio (its `ℓ^r` norm, or its supremum in the limit case).
#[derive(Clone, Debug)]
pub struct CommutatorSample {
    pub c: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub sample: InequalitySample,
}

pub fn commutator_estimate(
    a: &SpectralField,
    w: &SpectralField,
    k: usize,
    idx: CommutatorIndices,
) -> Result<CommutatorSample> {
    let dim = a.grid().dim();
    idx.validate(dim)?;
    let n = dim as f64;
    let limit = idx.is_limit_case(dim);
    let (na, nw, r) = if limit {
        let na = besov_norm(a, BesovParams::new(idx.alpha + n / idx.p1, idx.p, 1.0)?)?;
        let nw = besov_norm(w, BesovParams::new(-n / idx.p1 + 1.0 - idx.alpha, idx.p, f64::INFINITY)?)?;
        (na, nw, f64::INFINITY)
    } else {
        let na = besov_norm(a, BesovParams::new(n / idx.p1 + idx.alpha, idx.p1, idx.r)?)?;
        let nw = besov_norm(w, BesovParams::new(idx.sigma + 1.0 - idx.alpha, idx.p, idx.r)?)?;
        (na, nw, idx.r)
    };
    let denom = na * nw;
    if !(denom > 0.0) {
        return Err(Error::Degenerate("commutator operands have zero norm".into()));
    }
    let rq = commutator_blocks(a, w, k)?;
    let mut c = Vec::with_capacity(rq.len());
    for (i, f) in rq.iter().enumerate() {
        let q = i as i32 - 1;
        c.push(2f64.powf(q as f64 * idx.sigma) * f.inverse().lp_norm(idx.p)? / denom);
    }
    let partial_sums = (1..=c.len()).map(|m| lr_norm(c[..m].iter().copied(), r)).collect();
    let total = lr_norm(c.iter().copied(), r);
    Ok(CommutatorSample { c, partial_sums, sample: InequalitySample::new(total * denom, denom) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{RealField, TorusGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth(n: usize, seed: u64, decay: i32) -> SpectralField {
        let g = TorusGrid::cubic(2, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = g.wavenumbers();
        RealField::from_fn(g, |_| rng.gen_range(-1.0..1.0))
            .transform()
            .map_modes(|i, c| c / (1.0 + w.kmag[i]).powi(decay))
    }

    #[test]
    fn constant_coefficient_commutes() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let a = RealField::constant(g, 0.7).transform();
        let w = smooth(32, 1, 1);
        for q in -1..4 {
            assert!(commutator(&a, &w, 0, q).unwrap().max_abs_coeff() < 1e-15);
        }
    }

    #[test]
    fn split_recombines() {
        let a = smooth(64, 2, 2);
        let w = smooth(64, 3, 1);
        for k in 0..2 {
            for q in [-1, 0, 2, 4] {
                let rq = commutator(&a, &w, k, q).unwrap().inverse();
                let split = commutator_split(&a, &w, k, q).unwrap().recombine().unwrap().inverse();
                let scale = rq.max_abs().max(1.0);
                assert!(split.sub(&rq).unwrap().max_abs() <= 1e-12 * scale, "k={k} q={q}");
            }
        }
    }

    #[test]
    fn r1_window_support() {
        // a low frequency, w on a single plateau block q0: R¹_q vanishes when
        // q0 lies outside [q-2, q+4]
        let g = TorusGrid::cubic(2, 128).unwrap();
        let a = RealField::from_fn(g, |x| 0.3 * x[0].cos() + 0.2 * (2.0 * x[1]).sin()).transform();
        let q0 = 5; // |k| = 48
        let w = RealField::from_fn(g, |x| (48.0 * x[0]).cos()).transform();
        let mut checked = 0;
        for q in -1..=6 {
            let r1 = commutator_split(&a, &w, 0, q).unwrap().r1;
            let (lo, hi) = r1_window(q);
            if q0 < lo || q0 > hi {
                assert!(r1.max_abs_coeff() < 1e-13, "q={q}");
                checked += 1;
            }
        }
        assert!(checked >= 2);
    }

    #[test]
    fn kernel_terms_vanish_outside_window() {
        let a = smooth(128, 4, 1);
        let w = smooth(128, 5, 1);
        for q in 0..4 {
            for qp in 1..=6 {
                let (lo, hi) = r1_window(q);
                let t = kernel_commutator(&a, &w, q, qp).unwrap();
                if qp < lo || qp > hi {
                    assert!(t.max_abs_coeff() < 1e-15, "q={q} q'={qp}");
                }
            }
        }
    }

    #[test]
    fn kernel_bound_mechanism() {
        // ‖[Δ_q, S_{q'-1}a]Δ_{q'}w‖_2 ≤ C 2^{-q}‖∇S_{q'-1}a‖_∞‖Δ_{q'}w‖_2
        let a = smooth(64, 6, 2);
        let w = smooth(64, 7, 0);
        let pou = PartitionOfUnity::default();
        let mut worst: f64 = 0.0;
        for q in 0..5 {
            let (lo, hi) = r1_window(q);
            for qp in lo.max(1)..=hi.min(5) {
                let lhs = kernel_commutator(&a, &w, q, qp).unwrap().inverse().lp_norm(2.0).unwrap();
                let sa = partial_sum(&strip_nyquist(&a), &pou, qp - 1);
                let grad: Vec<_> = crate::spectral::ops::gradient(&sa).iter().map(|f| f.inverse()).collect();
                let g = crate::spectral::vector_lp_norm(&grad, f64::INFINITY).unwrap();
                let dw = block(&strip_nyquist(&w), &pou, qp).inverse().lp_norm(2.0).unwrap();
                let rhs = 2f64.powi(-q) * g * dw;
                if rhs > 1e-12 {
                    worst = worst.max(lhs / rhs);
                }
            }
        }
        assert!(worst > 0.0 && worst < 10.0, "{worst}");
    }

    #[test]
    fn index_validation() {
        let ok = CommutatorIndices { sigma: 0.5, p: 2.0, p1: 2.0, alpha: 0.5, r: 2.0 };
        assert!(ok.validate(2).is_ok());
        assert!(CommutatorIndices { alpha: 1.0, ..ok }.validate(2).is_err());
        assert!(CommutatorIndices { sigma: 1.6, ..ok }.validate(2).is_err());
        assert!(CommutatorIndices { sigma: -1.0, ..ok }.is_limit_case(2));
    }
}
