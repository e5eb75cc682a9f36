//! Pointwise products of spectral fields under a chosen aliasing policy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{RealField, SpectralField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductRule {
    /// Multiply the node values on the native grid (aliasing kept).
    #[default]
    Native,
    /// Truncate inputs and result to `|n_i| < N_i/3`.
    Dealiased23,
    /// Evaluate on a `3N/2` grid and keep `|n_i| < N_i/2`: the exact
    /// product of the two trigonometric polynomials, truncated.
    Padded32,
}

pub fn product(u: &SpectralField, v: &SpectralField, rule: ProductRule) -> Result<SpectralField> {
    if u.grid() != v.grid() {
        return Err(Error::Shape("product of fields on different grids".into()));
    }
    match rule {
        ProductRule::Native => Ok(u.inverse().mul(&v.inverse())?.transform()),
        ProductRule::Dealiased23 => {
            let keep = &u.grid().wavenumbers().keep23;
            let mask = |f: &SpectralField| f.map_modes(|i, c| if keep[i] { c } else { Complex64::new(0.0, 0.0) });
            Ok(mask(&mask(u).inverse().mul(&mask(v).inverse())?.transform()))
        }
        ProductRule::Padded32 => padded_product(u, v),
    }
}

fn padded_grid(grid: &TorusGrid) -> TorusGrid {
    let sizes: Vec<usize> = grid.sizes().iter().map(|n| n * 3 / 2).collect();
    TorusGrid::unchecked(&sizes, grid.periods())
}

/// Copies modes with `|n_i| < N_i/2` between grids of different size.
fn transfer(src: &SpectralField, dst_grid: TorusGrid) -> SpectralField {
    let sg = src.grid();
    let mut out = SpectralField::zeros(dst_grid);
    for idx in 0..sg.len() {
        let n = sg.modes(idx);
        let fits = (0..sg.dim()).all(|a| {
            let half = (sg.sizes()[a].min(dst_grid.sizes()[a]) / 2) as i64;
            n[a].abs() < half
        });
        if fits {
            out.set_mode(n, src.coeffs()[idx]);
        }
    }
    out
}

fn padded_product(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let big = padded_grid(u.grid());
    let ub = transfer(u, big).inverse();
    let vb = transfer(v, big).inverse();
    Ok(transfer(&ub.mul(&vb)?.transform(), *u.grid()))
}

/// `Σ_i u_i v_i` formed under `rule`; linear in each pair, so the sum of
/// the pairwise products equals the product of the sums.
pub fn product_sum(grid: TorusGrid, pairs: &[(SpectralField, SpectralField)], rule: ProductRule) -> Result<SpectralField> {
    for (u, v) in pairs {
        if *u.grid() != grid || *v.grid() != grid {
            return Err(Error::Shape("product of fields on different grids".into()));
        }
    }
    let accumulate = |g: TorusGrid, prep: &dyn Fn(&SpectralField) -> SpectralField| -> Result<SpectralField> {
        let mut acc = RealField::zeros(g);
        for (u, v) in pairs {
            let uv = prep(u).inverse().mul(&prep(v).inverse())?;
            acc.axpy(1.0, &uv)?;
        }
        Ok(acc.transform())
    };
    match rule {
        ProductRule::Native => accumulate(grid, &|f| f.clone()),
        ProductRule::Dealiased23 => Ok(dealias(&accumulate(grid, &dealias)?)),
        ProductRule::Padded32 => {
            let big = padded_grid(&grid);
            Ok(transfer(&accumulate(big, &|f| transfer(f, big))?, grid))
        }
    }
}

/// Drops every mode that sits on a Nyquist index.
pub fn strip_nyquist(f: &SpectralField) -> SpectralField {
    let ny = &f.grid().wavenumbers().nyquist;
    f.map_modes(|i, c| if ny[i] { Complex64::new(0.0, 0.0) } else { c })
}

/// Applies the 2/3 truncation.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let keep = &f.grid().wavenumbers().keep23;
    f.map_modes(|i, c| if keep[i] { c } else { Complex64::new(0.0, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealField;

    #[test]
    fn native_product_of_cosines() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let c = RealField::from_fn(g, |x| x[0].cos()).transform();
        let p = product(&c, &c, ProductRule::Native).unwrap().inverse();
        let exact = RealField::from_fn(g, |x| x[0].cos().powi(2));
        assert!(p.sub(&exact).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn padded_product_is_exact_truncation() {
        // cos(5x) * cos(6x) = (cos x + cos 11x)/2 on a 16-grid: the native
        // product aliases 11 onto -5, the padded one drops it.
        let g = TorusGrid::cubic(2, 16).unwrap();
        let a = RealField::from_fn(g, |x| (5.0 * x[0]).cos()).transform();
        let b = RealField::from_fn(g, |x| (6.0 * x[0]).cos()).transform();
        let p = product(&a, &b, ProductRule::Padded32).unwrap().inverse();
        let expect = RealField::from_fn(g, |x| 0.5 * x[0].cos());
        assert!(p.sub(&expect).unwrap().max_abs() < 1e-14);
        let n = product(&a, &b, ProductRule::Native).unwrap();
        assert!((n.mode([-5, 0, 0]).re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn dealiased_product_drops_high_modes() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let a = RealField::from_fn(g, |x| (2.0 * x[0]).cos() + (6.0 * x[1]).sin()).transform();
        let p = product(&a, &a, ProductRule::Dealiased23).unwrap();
        let keep = &g.wavenumbers().keep23;
        for (i, c) in p.coeffs().iter().enumerate() {
            if !keep[i] {
                assert_eq!(c.norm(), 0.0);
            }
        }
        // (cos 2x)^2 = 1/2 + cos(4x)/2; mode 4 survives since 3*4 < 16.
        assert!((p.mode([4, 0, 0]).re - 0.25).abs() < 1e-14);
        assert!((p.mean() - 0.5).abs() < 1e-14);
    }
}
