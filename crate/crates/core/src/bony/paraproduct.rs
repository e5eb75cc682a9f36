use crate::error::{Error, Result};
use crate::lp::{block, partial_sum, PartitionOfUnity};
use crate::spectral::products::product_sum;
use crate::spectral::{ProductRule, SpectralField};

fn same_grid(u: &SpectralField, v: &SpectralField) -> Result<()> {
    if u.grid() != v.grid() {
        return Err(Error::Shape("paraproduct operands live on different grids".into()));
    }
    Ok(())
}

fn lmax(u: &SpectralField) -> i32 {
    PartitionOfUnity::default().weights(u.grid()).lmax
}

/// `T_u v = Σ_q S_{q−1}u · Δ_q v`.
pub fn paraproduct(u: &SpectralField, v: &SpectralField, rule: ProductRule) -> Result<SpectralField> {
    same_grid(u, v)?;
    let pou = PartitionOfUnity::default();
    // S_{q-1} vanishes for q <= 0
    let pairs: Vec<_> = (1..=lmax(u))
        .map(|q| (partial_sum(u, &pou, q - 1), block(v, &pou, q)))
        .collect();
    product_sum(*u.grid(), &pairs, rule)
}

/// `R(u,v) = Σ_q Δ_q u · (Δ_{q−1} + Δ_q + Δ_{q+1}) v`.
pub fn remainder(u: &SpectralField, v: &SpectralField, rule: ProductRule) -> Result<SpectralField> {
    same_grid(u, v)?;
    let pou = PartitionOfUnity::default();
    let top = lmax(u);
    let vb: Vec<_> = (-1..=top).map(|l| block(v, &pou, l)).collect();
    let get = |l: i32| -> Option<&SpectralField> {
        if l < -1 || l > top {
            None
        } else {
            Some(&vb[(l + 1) as usize])
        }
    };
    let mut pairs = Vec::new();
    for q in -1..=top {
        let mut near = get(q).unwrap().clone();
        for nb in [q - 1, q + 1] {
            if let Some(b) = get(nb) {
                near.axpy(1.0, b)?;
            }
        }
        pairs.push((block(u, &pou, q), near));
    }
    product_sum(*u.grid(), &pairs, rule)
}

/// `(T_u v, T_v u, R(u,v))`.
pub fn bony_decomposition(
    u: &SpectralField,
    v: &SpectralField,
    rule: ProductRule,
) -> Result<(SpectralField, SpectralField, SpectralField)> {
    Ok((paraproduct(u, v, rule)?, paraproduct(v, u, rule)?, remainder(u, v, rule)?))
}
