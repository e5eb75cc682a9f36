//! Spectral multipliers: derivatives, Laplacian and the Leray projector.

use num_complex::Complex64;

use super::field::SpectralField;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_vector(u: &[SpectralField]) -> Result<()> {
    let first = u.first().ok_or_else(|| Error::Shape("empty vector field".into()))?;
    let dim = first.grid().dim();
    if u.len() != dim {
        return Err(Error::Shape(format!("{} components on a {dim}-dimensional grid", u.len())));
    }
    if u.iter().any(|c| c.grid() != first.grid()) {
        return Err(Error::Shape("vector components live on different grids".into()));
    }
    Ok(())
}

/// `∂_axis f`.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    let w = f.grid().wavenumbers();
    f.map_modes(|i, c| I * w.kd[axis][i] * c)
}

pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    (0..f.grid().dim()).map(|a| partial(f, a)).collect()
}

pub fn divergence(u: &[SpectralField]) -> Result<SpectralField> {
    check_vector(u)?;
    let w = u[0].grid().wavenumbers();
    let mut out = SpectralField::zeros(*u[0].grid());
    for (axis, comp) in u.iter().enumerate() {
        for (i, (o, c)) in out.coeffs_mut().iter_mut().zip(comp.coeffs()).enumerate() {
            *o += I * w.kd[axis][i] * c;
        }
    }
    Ok(out)
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    let w = f.grid().wavenumbers();
    f.map_modes(|i, c| -w.kd2[i] * c)
}

/// `Δ^{-1} f` on the mean-zero subspace (the kernel is sent to zero).
pub fn inverse_laplacian(f: &SpectralField) -> SpectralField {
    let w = f.grid().wavenumbers();
    f.map_modes(|i, c| if w.kd2[i] > 0.0 { -c / w.kd2[i] } else { Complex64::new(0.0, 0.0) })
}

/// Leray projection onto divergence-free fields; modes with `kd = 0`
/// (including the mean) pass unchanged.
pub fn leray_project(u: &[SpectralField]) -> Result<Vec<SpectralField>> {
    let q = gradient_part(u)?;
    u.iter().zip(&q).map(|(a, b)| a.sub(b)).collect()
}

/// `Q = Id - P`: the gradient part of `u`, mean-free.
pub fn gradient_part(u: &[SpectralField]) -> Result<Vec<SpectralField>> {
    check_vector(u)?;
    let grid = *u[0].grid();
    let w = grid.wavenumbers();
    let dim = grid.dim();
    let mut out: Vec<SpectralField> = (0..dim).map(|_| SpectralField::zeros(grid)).collect();
    for i in 0..grid.len() {
        let k2 = w.kd2[i];
        if k2 == 0.0 {
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            dot += w.kd[a][i] * u[a].coeffs()[i];
        }
        for (a, o) in out.iter_mut().enumerate() {
            o.coeffs_mut()[i] = w.kd[a][i] * dot / k2;
        }
    }
    Ok(out)
}

/// `Du = (∇u + ∇u^T)/2`, as `d[i][j]`.
pub fn strain_tensor(u: &[SpectralField]) -> Result<Vec<Vec<SpectralField>>> {
    check_vector(u)?;
    let dim = u.len();
    let grads: Vec<Vec<SpectralField>> = u.iter().map(gradient).collect();
    let mut d = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut row = Vec::with_capacity(dim);
        for j in 0..dim {
            row.push(grads[j][i].add(&grads[i][j])?.scale(0.5));
        }
        d.push(row);
    }
    Ok(d)
}

/// `∇^⊥ψ = (-∂_2 ψ, ∂_1 ψ)` on a two-dimensional grid.
pub fn perp_gradient(psi: &SpectralField) -> Result<Vec<SpectralField>> {
    if psi.grid().dim() != 2 {
        return Err(Error::Shape("perpendicular gradient needs a 2-D grid".into()));
    }
    Ok(vec![partial(psi, 1).scale(-1.0), partial(psi, 0)])
}

/// `u·∇` applied to each component of `w`, with products formed by `rule`.
pub fn advective_derivative(
    u: &[SpectralField],
    w: &SpectralField,
    rule: super::products::ProductRule,
) -> Result<SpectralField> {
    check_vector(u)?;
    let mut out = SpectralField::zeros(*w.grid());
    for (axis, ua) in u.iter().enumerate() {
        let p = super::products::product(ua, &partial(w, axis), rule)?;
        out.axpy(1.0, &p)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{RealField, TorusGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: TorusGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealField::from_fn(grid, |_| rng.gen_range(-1.0..1.0)).transform()
    }

    fn max_abs(fields: &[SpectralField]) -> f64 {
        fields.iter().map(|f| f.inverse().max_abs()).fold(0.0, f64::max)
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let c = RealField::constant(g, 3.0).transform();
        assert!(max_abs(&gradient(&c)) < 1e-15);
    }

    #[test]
    fn laplacian_of_cosine() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let f = RealField::from_fn(g, |x| x[0].cos());
        let lap = laplacian(&f.transform()).inverse();
        assert!(lap.add(&f).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn div_grad_is_laplacian() {
        let g = TorusGrid::new(&[16, 32], &[2.0, 5.0]).unwrap();
        let f = random(g, 1);
        let dg = divergence(&gradient(&f)).unwrap();
        assert!(dg.max_diff(&laplacian(&f)) <= 1e-13 * laplacian(&f).max_abs_coeff().max(1.0));
    }

    #[test]
    fn leray_annihilates_gradients_and_keeps_solenoidal() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let phi = random(g, 2);
        let pu = leray_project(&gradient(&phi)).unwrap();
        assert!(max_abs(&pu) <= 1e-12);
        let psi = random(g, 3);
        let u = perp_gradient(&psi).unwrap();
        let pu = leray_project(&u).unwrap();
        let diff: Vec<_> = pu.iter().zip(&u).map(|(a, b)| a.sub(b).unwrap()).collect();
        assert!(max_abs(&diff) <= 1e-12);
    }

    #[test]
    fn leray_idempotent_divergence_free_3d() {
        let g = TorusGrid::cubic(3, 8).unwrap();
        let u: Vec<_> = (0..3).map(|s| random(g, 10 + s)).collect();
        let pu = leray_project(&u).unwrap();
        let ppu = leray_project(&pu).unwrap();
        let diff: Vec<_> = ppu.iter().zip(&pu).map(|(a, b)| a.sub(b).unwrap()).collect();
        assert!(max_abs(&diff) <= 1e-13);
        let div = divergence(&pu).unwrap().inverse();
        let scale = max_abs(&u) * g.wavenumbers().kmax();
        assert!(div.max_abs() <= 1e-12 * scale);
        let q = gradient_part(&u).unwrap();
        assert!(q.iter().all(|c| c.mean().abs() < 1e-16));
    }

    #[test]
    fn strain_trace_is_divergence() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let u = vec![random(g, 4), random(g, 5)];
        let d = strain_tensor(&u).unwrap();
        let tr = d[0][0].add(&d[1][1]).unwrap();
        assert!(tr.max_diff(&divergence(&u).unwrap()) <= 1e-13);
        assert!(d[0][1].max_diff(&d[1][0]) == 0.0);
        let zero = vec![SpectralField::zeros(g), SpectralField::zeros(g)];
        let dz = strain_tensor(&zero).unwrap();
        assert!(dz.iter().flatten().all(|f| f.max_abs_coeff() == 0.0));
    }

    #[test]
    fn strain_of_truncated_rotation_is_small_inside() {
        // Rotation about the box centre, multiplied by a smooth cutoff that is
        // identically one on a disc; Du vanishes where the cutoff is flat.
        let g = TorusGrid::cubic(2, 128).unwrap();
        let c = std::f64::consts::PI;
        let bump = |r: f64| {
            let t = ((r - 0.6) / 2.4).clamp(0.0, 1.0);
            if t <= 0.0 {
                1.0
            } else if t >= 1.0 {
                0.0
            } else {
                let a = (-1.0 / (1.0 - t)).exp();
                let b = (-1.0 / t).exp();
                a / (a + b)
            }
        };
        let u0 = RealField::from_fn(g, |x| {
            let (dx, dy) = (x[0] - c, x[1] - c);
            -dy * bump((dx * dx + dy * dy).sqrt())
        });
        let u1 = RealField::from_fn(g, |x| {
            let (dx, dy) = (x[0] - c, x[1] - c);
            dx * bump((dx * dx + dy * dy).sqrt())
        });
        let d = strain_tensor(&[u0.transform(), u1.transform()]).unwrap();
        let inside: Vec<usize> = (0..g.len())
            .filter(|&i| {
                let x = g.node(i);
                ((x[0] - c).powi(2) + (x[1] - c).powi(2)).sqrt() < 0.5
            })
            .collect();
        for row in &d {
            for comp in row {
                let v = comp.inverse();
                let m = inside.iter().map(|&i| v.values()[i].abs()).fold(0.0, f64::max);
                assert!(m < 1e-6, "strain inside disc {m}");
            }
        }
    }
}
