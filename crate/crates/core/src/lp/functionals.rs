use super::chemin_lerner::CheminLernerAccumulator;
use super::partition::PartitionOfUnity;
use crate::error::{Error, Result};
use crate::inequality::InequalitySample;
use crate::spectral::{ops, vector_lp_norm, SpectralField};

/// Both sides of the logarithmic interpolation inequality
/// `‖u‖_{L̃^ρ(B^s_{p,1})} ≤ C (1+ε)/ε ‖u‖_{L̃^ρ(B^s_{p,∞})} (1 + log(‖u‖_{L̃^ρ(B^{s+ε}_{p,∞})} / ‖u‖_{L̃^ρ(B^s_{p,∞})}))`.
pub fn log_interpolation_check(
    acc: &CheminLernerAccumulator,
    s: f64,
    eps: f64,
    rho: f64,
) -> Result<InequalitySample> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("interpolation gap must be positive, got {eps}")));
    }
    let inf = f64::INFINITY;
    let lhs = acc.norm(s, 1.0, rho)?;
    let low = acc.norm(s, inf, rho)?;
    let high = acc.norm(s + eps, inf, rho)?;
    if !(low > 0.0 && high > 0.0) {
        return Err(Error::Degenerate(format!(
            "interpolation norms vanish (B^s: {low:e}, B^(s+eps): {high:e})"
        )));
    }
    let rhs = (1.0 + eps) / eps * low * (1.0 + (high / low).ln());
    Ok(InequalitySample::new(lhs, rhs))
}

/// Pointwise Frobenius norm of `∇u` (one row per component), in `L^p`.
fn gradient_lp(u: &[SpectralField], p: f64) -> Result<f64> {
    let comps: Vec<_> = u.iter().flat_map(ops::gradient).map(|g| g.inverse()).collect();
    vector_lp_norm(&comps, p)
}

fn low_pass_all(u: &[SpectralField], pou: &PartitionOfUnity, j: i32) -> Vec<SpectralField> {
    u.iter().map(|c| super::decomposition::partial_sum(c, pou, j)).collect()
}

/// Values `‖∇S_j u‖_{L^p}` for `j = 0..=lmax+1` (beyond that `S_j = Id`).
pub fn low_gradient_norms(u: &[SpectralField], p: f64) -> Result<Vec<f64>> {
    let first = u.first().ok_or_else(|| Error::Shape("empty field list".into()))?;
    let pou = PartitionOfUnity::default();
    let lmax = pou.weights(first.grid()).lmax;
    (0..=lmax + 1).map(|j| gradient_lp(&low_pass_all(u, &pou, j), p)).collect()
}

/// `‖u‖_{B_Γ} = ‖u‖_∞ + sup_{j≥0} ‖∇S_j u‖_∞ / Γ(2^j)`.
pub fn b_gamma_norm(u: &[SpectralField], gamma: impl Fn(f64) -> f64) -> Result<f64> {
    let grads = low_gradient_norms(u, f64::INFINITY)?;
    let mut sup: f64 = 0.0;
    for (j, g) in grads.iter().enumerate() {
        let den = gamma(2f64.powi(j as i32));
        if !(den > 0.0) {
            return Err(Error::Parameter(format!("growth function must be positive, got Γ(2^{j}) = {den}")));
        }
        sup = sup.max(g / den);
    }
    let phys: Vec<_> = u.iter().map(SpectralField::inverse).collect();
    Ok(vector_lp_norm(&phys, f64::INFINITY)? + sup)
}

/// `V'_{p1,α}(v) = sup_{j≥0} 2^{jN/p1} ‖∇S_j v‖_{L^{p1}} / (j+1)^α`.
pub fn v_prime(v: &[SpectralField], p1: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("V' exponent must lie in [0, 1], got {alpha}")));
    }
    let first = v.first().ok_or_else(|| Error::Shape("empty field list".into()))?;
    let n = first.grid().dim() as f64;
    let grads = low_gradient_norms(v, p1)?;
    Ok(grads
        .iter()
        .enumerate()
        .map(|(j, g)| 2f64.powf(j as f64 * n / p1) * g / ((j + 1) as f64).powf(alpha))
        .fold(0.0, f64::max))
}
