use super::partition::{BlockWeights, PartitionOfUnity};
use crate::error::Result;
use crate::spectral::{RealField, SpectralField};
use std::sync::Arc;

/// Dyadic blocks `Δ_l u` for `l = -1..=lmax`.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition {
    source: SpectralField,
    weights: Arc<BlockWeights>,
    blocks: Vec<SpectralField>,
}

pub fn decompose(u: &SpectralField, pou: &PartitionOfUnity) -> DyadicDecomposition {
    let weights = pou.weights(u.grid());
    let blocks = (-1..=weights.lmax).map(|l| u.weighted(weights.block(l).unwrap())).collect();
    DyadicDecomposition { source: u.clone(), weights, blocks }
}

impl DyadicDecomposition {
    pub fn lmax(&self) -> i32 {
        self.weights.lmax
    }

    /// `Δ_l u`, or `None` outside `-1..=lmax` (those blocks vanish).
    pub fn block(&self, l: i32) -> Option<&SpectralField> {
        if l < -1 || l > self.lmax() {
            None
        } else {
            Some(&self.blocks[(l + 1) as usize])
        }
    }

    /// Iterator over `(l, Δ_l u)`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &SpectralField)> {
        self.blocks.iter().enumerate().map(|(i, b)| (i as i32 - 1, b))
    }

    /// `S_j u`.
    pub fn partial_sum(&self, j: i32) -> SpectralField {
        low_pass(&self.source, &self.weights, j)
    }

    pub fn reconstruct(&self) -> Result<SpectralField> {
        let mut acc = SpectralField::zeros(*self.source.grid());
        for b in &self.blocks {
            acc.axpy(1.0, b)?;
        }
        Ok(acc)
    }

    pub fn physical_blocks(&self) -> Vec<RealField> {
        self.blocks.iter().map(SpectralField::inverse).collect()
    }
}

/// `Δ_l u` without building the full decomposition.
pub fn block(u: &SpectralField, pou: &PartitionOfUnity, l: i32) -> SpectralField {
    let w = pou.weights(u.grid());
    match w.block(l) {
        Some(m) => u.weighted(m),
        None => SpectralField::zeros(*u.grid()),
    }
}

/// `S_j u`: zero for `j ≤ -1`, the identity beyond the grid's last block.
pub fn partial_sum(u: &SpectralField, pou: &PartitionOfUnity, j: i32) -> SpectralField {
    low_pass(u, &pou.weights(u.grid()), j)
}

fn low_pass(u: &SpectralField, w: &BlockWeights, j: i32) -> SpectralField {
    if j < 0 {
        return SpectralField::zeros(*u.grid());
    }
    match w.low(j) {
        Some(m) => u.weighted(m),
        None => u.clone(),
    }
}

/// `(Id − S_m) u`.
pub fn high_pass(u: &SpectralField, pou: &PartitionOfUnity, m: i32) -> Result<SpectralField> {
    u.sub(&partial_sum(u, pou, m))
}
