use serde::{Deserialize, Serialize};

use super::besov::{lr_norm, vector_block_norms, BlockNorms};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Time samples of `‖Δ_l u(t)‖_{L^p}` for the norms of `L̃^ρ_T(B^s_{p,r})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheminLernerAccumulator {
    p: f64,
    times: Vec<f64>,
    records: Vec<Vec<f64>>,
}

/// `(∫_0^T |f|^ρ)^{1/ρ}` with the trapezoid rule, `max |f|` for `ρ = ∞`.
pub fn time_norm(times: &[f64], values: &[f64], rho: f64) -> f64 {
    if rho.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        acc += 0.5 * dt * (values[i].abs().powf(rho) + values[i - 1].abs().powf(rho));
    }
    acc.powf(1.0 / rho)
}

impl CheminLernerAccumulator {
    pub fn new(p: f64) -> Self {
        Self { p, times: Vec::new(), records: Vec::new() }
    }

    /// Builds an accumulator from precomputed block norms.
    pub fn from_records(p: f64, times: Vec<f64>, records: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != records.len() {
            return Err(Error::Shape(format!(
                "{} times for {} block records",
                times.len(),
                records.len()
            )));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter("record times must be nondecreasing".into()));
        }
        Ok(Self { p, times, records })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn record(&mut self, t: f64, u: &SpectralField) -> Result<()> {
        self.record_vector(t, std::slice::from_ref(u))
    }

    pub fn record_vector(&mut self, t: f64, u: &[SpectralField]) -> Result<()> {
        let bn = vector_block_norms(u, self.p)?;
        self.record_blocks(t, bn)
    }

    pub fn record_blocks(&mut self, t: f64, bn: BlockNorms) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t < last {
                return Err(Error::State(format!("record at t={t} precedes t={last}")));
            }
        }
        self.times.push(t);
        self.records.push(bn.norms);
        Ok(())
    }

    fn nblocks(&self) -> usize {
        self.records.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn check(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::State("Chemin-Lerner accumulator has no samples".into()));
        }
        Ok(())
    }

    /// Time norms of each block, `‖Δ_l u‖_{L^ρ_T(L^p)}`.
    pub fn block_time_norms(&self, rho: f64) -> Result<Vec<f64>> {
        self.check()?;
        Ok((0..self.nblocks())
            .map(|b| {
                let series: Vec<f64> = self.records.iter().map(|r| r.get(b).copied().unwrap_or(0.0)).collect();
                time_norm(&self.times, &series, rho)
            })
            .collect())
    }

    /// `‖u‖_{L̃^ρ_T(B^s_{p,r})}`.
    pub fn norm(&self, s: f64, r: f64, rho: f64) -> Result<f64> {
        self.tail_norm(s, r, rho, -1)
    }

    /// Same, summing blocks `l ≥ m` only.
    pub fn tail_norm(&self, s: f64, r: f64, rho: f64, m: i32) -> Result<f64> {
        let tn = self.block_time_norms(rho)?;
        Ok(lr_norm(
            tn.iter()
                .enumerate()
                .map(|(i, &n)| (i as i32 - 1, n))
                .filter(|&(l, _)| l >= m)
                .map(|(l, n)| 2f64.powf(l as f64 * s) * n),
            r,
        ))
    }

    /// `‖u‖_{L^ρ_T(B^s_{p,r})}` (Besov norm first, time norm second).
    pub fn plain_norm(&self, s: f64, r: f64, rho: f64) -> Result<f64> {
        self.check()?;
        let series: Vec<f64> = self
            .records
            .iter()
            .map(|rec| BlockNorms { p: self.p, norms: rec.clone() }.besov(s, r))
            .collect();
        Ok(time_norm(&self.times, &series, rho))
    }

    /// Besov norm of the sample at index `i`.
    pub fn snapshot_norm(&self, i: usize, s: f64, r: f64) -> Result<f64> {
        let rec = self
            .records
            .get(i)
            .ok_or_else(|| Error::State(format!("no sample {i}")))?;
        Ok(BlockNorms { p: self.p, norms: rec.clone() }.besov(s, r))
    }

    /// Block norms of every sample, in time order.
    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    /// `Σ_{l≥m}`-style tail of the sample at index `i`.
    pub fn snapshot_tail(&self, i: usize, s: f64, r: f64, m: i32) -> Result<f64> {
        let rec = self
            .records
            .get(i)
            .ok_or_else(|| Error::State(format!("no sample {i}")))?;
        Ok(BlockNorms { p: self.p, norms: rec.clone() }.tail(s, r, m))
    }

    pub fn last_blocks(&self) -> Option<BlockNorms> {
        self.records.last().map(|r| BlockNorms { p: self.p, norms: r.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::besov::block_norms;
    use crate::spectral::{RealField, TorusGrid};
    use proptest::prelude::*;

    #[test]
    fn empty_accumulator_is_state_error() {
        let acc = CheminLernerAccumulator::new(2.0);
        assert!(matches!(acc.norm(0.0, 1.0, 1.0), Err(Error::State(_))));
    }

    #[test]
    fn time_constant_field_matches_static_norm() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let u = RealField::from_fn(g, |x| x[0].sin() + (3.0 * x[1]).cos()).transform();
        let mut acc = CheminLernerAccumulator::new(2.0);
        for i in 0..5 {
            acc.record(i as f64 * 0.1, &u).unwrap();
        }
        let stat = block_norms(&u, 2.0).unwrap().besov(0.5, 1.0);
        assert!((acc.norm(0.5, 1.0, f64::INFINITY).unwrap() - stat).abs() < 1e-14 * stat);
    }

    #[test]
    fn equal_exponents_agree() {
        let times = vec![0.0, 0.3, 0.5, 1.0];
        let recs = vec![
            vec![1.0, 0.5, 0.2],
            vec![0.7, 0.9, 0.1],
            vec![0.2, 1.1, 0.4],
            vec![0.1, 0.3, 0.8],
        ];
        let acc = CheminLernerAccumulator::from_records(2.0, times, recs).unwrap();
        for rho in [1.0, 2.0, 3.0] {
            let a = acc.norm(0.4, rho, rho).unwrap();
            let b = acc.plain_norm(0.4, rho, rho).unwrap();
            assert!((a - b).abs() < 1e-13 * a);
        }
    }

    #[test]
    fn staggered_blocks_separate_the_norms() {
        // block 0 active early, block 2 late: sup_t Σ_l < Σ_l sup_t
        let times = vec![0.0, 0.5, 1.0];
        let recs = vec![vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.25]];
        let acc = CheminLernerAccumulator::from_records(2.0, times, recs).unwrap();
        let tilde = acc.norm(1.0, 1.0, f64::INFINITY).unwrap();
        let plain = acc.plain_norm(1.0, 1.0, f64::INFINITY).unwrap();
        assert!((tilde - 2.0).abs() < 1e-15);
        assert!((plain - 1.0).abs() < 1e-15);
        assert!(tilde > plain);
    }

    proptest! {
        #[test]
        fn minkowski_ordering(
            recs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 2..8),
            s in -1.0f64..1.0,
            rho in prop::sample::select(vec![1.0, 2.0, 3.0, f64::INFINITY]),
            r in prop::sample::select(vec![1.0, 2.0, 3.0, f64::INFINITY]),
        ) {
            let times: Vec<f64> = (0..recs.len()).map(|i| i as f64 * 0.25).collect();
            let acc = CheminLernerAccumulator::from_records(2.0, times, recs).unwrap();
            let tilde = acc.norm(s, r, rho).unwrap();
            let plain = acc.plain_norm(s, r, rho).unwrap();
            let tol = 1e-12 * (1.0 + tilde + plain);
            if r >= rho {
                prop_assert!(tilde <= plain + tol);
            }
            if r <= rho {
                prop_assert!(tilde + tol >= plain);
            }
        }
    }
}
