use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::spectral::TorusGrid;

/// Radial dyadic partition `χ(ξ) + Σ_{l≥0} φ(2^{-l}ξ) = 1`.
///
/// `χ` equals one on `|ξ| ≤ inner` and vanishes for `|ξ| ≥ outer`;
/// `φ(ξ) = χ(ξ/2) − χ(ξ)` is then supported in `[inner, 2·outer]`.
/// With `outer ≤ 2·inner` only neighbouring shells overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionOfUnity {
    inner: f64,
    outer: f64,
}

impl Default for PartitionOfUnity {
    fn default() -> Self {
        Self { inner: 0.75, outer: 4.0 / 3.0 }
    }
}

fn g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

impl PartitionOfUnity {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer <= 2.0 * inner) {
            return Err(Error::Parameter(format!(
                "partition radii need 0 < inner < outer <= 2 inner, got ({inner}, {outer})"
            )));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// The shell parameter `α` of the supports `supp χ ⊂ B(0, α)`,
    /// `supp φ ⊂ {α^{-1} ≤ |ξ| ≤ 2α}`.
    pub fn alpha(&self) -> f64 {
        self.outer.max(1.0 / self.inner)
    }

    /// Shell radii `(inner, 2·outer)` of `supp φ`.
    pub fn shell(&self) -> (f64, f64) {
        (self.inner, 2.0 * self.outer)
    }

    pub fn chi(&self, r: f64) -> f64 {
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let t = (r - self.inner) / (self.outer - self.inner);
        let a = g(1.0 - t);
        a / (a + g(t))
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.chi(0.5 * r) - self.chi(r)
    }

    /// Largest block index carrying frequencies up to `kmax`.
    pub fn lmax_for(&self, kmax: f64) -> i32 {
        let mut l = 0;
        while kmax * 0.5f64.powi(l + 1) > self.inner {
            l += 1;
        }
        l
    }

    /// Cached block weights on `grid`, indexed `l + 1` for `l = -1..=lmax`.
    pub fn weights(&self, grid: &TorusGrid) -> Arc<BlockWeights> {
        type Key = (crate::spectral::GridKey, u64, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<BlockWeights>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = (grid.key(), self.inner.to_bits(), self.outer.to_bits());
        if let Some(w) = cache.lock().unwrap().get(&key) {
            return Arc::clone(w);
        }
        let w = Arc::new(BlockWeights::build(self, grid));
        cache.lock().unwrap().insert(key, Arc::clone(&w));
        w
    }
}

/// Per-mode multipliers of `Δ_l` and `S_j` on one grid.
#[derive(Debug)]
pub struct BlockWeights {
    pub lmax: i32,
    blocks: Vec<Vec<f64>>,
    lows: Vec<Vec<f64>>,
}

impl BlockWeights {
    fn build(pou: &PartitionOfUnity, grid: &TorusGrid) -> Self {
        let w = grid.wavenumbers();
        let lmax = pou.lmax_for(w.kmax());
        let mut blocks = Vec::with_capacity(lmax as usize + 2);
        blocks.push(w.kmag.iter().map(|&k| pou.chi(k)).collect());
        for l in 0..=lmax {
            let s = 0.5f64.powi(l);
            blocks.push(
                w.kmag
                    .iter()
                    .map(|&k| pou.chi(0.5 * s * k) - pou.chi(s * k))
                    .collect(),
            );
        }
        // S_j for j = 0..=lmax+1
        let mut lows = Vec::with_capacity(lmax as usize + 2);
        for j in 0..=lmax + 1 {
            let s = 0.5f64.powi(j);
            lows.push(w.kmag.iter().map(|&k| pou.chi(s * k)).collect());
        }
        Self { lmax, blocks, lows }
    }

    /// Multiplier of `Δ_l`; `None` when the block is empty on this grid.
    pub fn block(&self, l: i32) -> Option<&[f64]> {
        if l < -1 || l > self.lmax {
            return None;
        }
        Some(&self.blocks[(l + 1) as usize])
    }

    /// Multiplier of `S_j = Σ_{l ≤ j−1} Δ_l`; `None` for `j ≤ -1` (zero
    /// operator) and for `j > lmax + 1` (identity).
    pub fn low(&self, j: i32) -> Option<&[f64]> {
        if j < 0 || j > self.lmax + 1 {
            return None;
        }
        Some(&self.lows[j as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plateaus_and_supports() {
        let p = PartitionOfUnity::default();
        assert_eq!(p.chi(0.75), 1.0);
        assert_eq!(p.chi(4.0 / 3.0), 0.0);
        assert_eq!(p.phi(0.7), 0.0);
        assert_eq!(p.phi(8.0 / 3.0 + 1e-12), 0.0);
        // plateau of φ is [4/3, 3/2]
        assert_eq!(p.phi(1.4), 1.0);
        assert!(p.phi(1.0) > 0.0 && p.phi(1.0) < 1.0);
    }

    #[test]
    fn block_weights_sum_to_one_on_grid() {
        let g = TorusGrid::cubic(2, 64).unwrap();
        let w = PartitionOfUnity::default().weights(&g);
        for idx in 0..g.len() {
            let s: f64 = (-1..=w.lmax).map(|l| w.block(l).unwrap()[idx]).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        // the highest partial sum is the identity on the grid
        assert!(w.low(w.lmax + 1).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rejects_overlapping_radii() {
        assert!(PartitionOfUnity::new(0.5, 1.2).is_err());
        assert!(PartitionOfUnity::new(0.8, 1.5).is_ok());
    }

    proptest! {
        #[test]
        fn partition_identity_at_any_frequency(r in 0.0f64..4096.0) {
            let p = PartitionOfUnity::default();
            let mut s = p.chi(r);
            for l in 0..16 {
                s += p.phi(r * 0.5f64.powi(l));
            }
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn profiles_in_unit_interval(r in 0.0f64..10.0) {
            let p = PartitionOfUnity::default();
            prop_assert!((0.0..=1.0).contains(&p.chi(r)));
            prop_assert!((-1e-15..=1.0).contains(&p.phi(r)));
        }

        #[test]
        fn chi_nonincreasing(r in 0.0f64..3.0, dr in 0.0f64..0.5) {
            let p = PartitionOfUnity::default();
            prop_assert!(p.chi(r + dr) <= p.chi(r) + 1e-15);
        }
    }
}
