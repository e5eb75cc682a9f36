//! Besov product laws as measurable inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequality::InequalitySample;
use crate::lp::{besov_norm, BesovParams};
use crate::spectral::{product, ProductRule, SpectralField};

const TOL: f64 = 1e-12;

fn inv(p: f64) -> f64 {
    1.0 / p
}

/// One instance of a product law together with its indices. `p = ∞` is
/// written `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ProductLawCase {
    /// `‖uv‖_{B^s_{p,r}} ≲ ‖u‖_∞‖v‖_{B^s_{p,r}} + ‖v‖_∞‖u‖_{B^s_{p,r}}`.
    Tame { s: f64, p: f64, r: f64 },
    /// `‖uv‖_{B^{s1+s2−N(1/p1+1/p2−1/p)}_{p,r}} ≲ ‖u‖_{B^{s1}_{p1,r}}‖v‖_{B^{s2}_{p2,∞}}`,
    /// with the endpoint substitutions when `s1 + N/λ2 = N/p1` or
    /// `s2 + N/λ1 = N/p2`.
    General { s1: f64, s2: f64, p: f64, p1: f64, p2: f64, r: f64, lambda1: f64, lambda2: f64 },
    /// `s1 + s2 = 0`: `‖uv‖_{B^{−N(1/p1+1/p2−1/p)}_{p,∞}} ≲ ‖u‖_{B^{s1}_{p1,1}}‖v‖_{B^{s2}_{p2,∞}}`.
    Critical { s1: f64, s2: f64, p: f64, p1: f64, p2: f64, lambda1: f64, lambda2: f64 },
    /// `‖uv‖_{B^s_{p,r}} ≲ ‖u‖_{B^s_{p,r}}‖v‖_{B^{N/p}_{p,∞}∩L^∞}`.
    Multiplier { s: f64, p: f64, r: f64 },
    /// `‖uv‖_{B^s_{p,r}} ≲ ‖u‖_{B^s_{p,r}}‖v‖_{B^{N/p1}_{p1,∞}∩L^∞}`.
    Corollary { s: f64, p: f64, p1: f64, r: f64 },
}

fn violated(what: &str, detail: String) -> Error {
    Error::Parameter(format!("product law constraint violated: {what} ({detail})"))
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(violated(&format!("{name} in [1, inf]"), format!("{name} = {p}")));
    }
    Ok(())
}

fn check_lambdas(p: f64, p1: f64, p2: f64, l1: f64, l2: f64) -> Result<()> {
    for (name, v) in [("p", p), ("p1", p1), ("p2", p2), ("lambda1", l1), ("lambda2", l2)] {
        check_exponent(name, v)?;
    }
    if inv(p) > inv(p1) + inv(p2) + TOL {
        return Err(violated("1/p <= 1/p1 + 1/p2", format!("p = {p}, p1 = {p1}, p2 = {p2}")));
    }
    if p1 > l2 {
        return Err(violated("p1 <= lambda2", format!("p1 = {p1}, lambda2 = {l2}")));
    }
    if p2 > l1 {
        return Err(violated("p2 <= lambda1", format!("p2 = {p2}, lambda1 = {l1}")));
    }
    if inv(p) > inv(p1) + inv(l1) + TOL {
        return Err(violated("1/p <= 1/p1 + 1/lambda1", format!("p = {p}, p1 = {p1}, lambda1 = {l1}")));
    }
    if inv(p) > inv(p2) + inv(l2) + TOL {
        return Err(violated("1/p <= 1/p2 + 1/lambda2", format!("p = {p}, p2 = {p2}, lambda2 = {l2}")));
    }
    Ok(())
}

impl ProductLawCase {
    pub fn law_id(&self) -> &'static str {
        match self {
            Self::Tame { .. } => "tame",
            Self::General { .. } => "general",
            Self::Critical { .. } => "critical",
            Self::Multiplier { .. } => "multiplier",
            Self::Corollary { .. } => "corollary",
        }
    }

    /// Indices `(s, p, r)` of the norm taken of the product.
    pub fn lhs_params(&self, dim: usize) -> (f64, f64, f64) {
        let n = dim as f64;
        match *self {
            Self::Tame { s, p, r } | Self::Multiplier { s, p, r } | Self::Corollary { s, p, r, .. } => (s, p, r),
            Self::General { s1, s2, p, p1, p2, r, .. } => {
                (s1 + s2 - n * (inv(p1) + inv(p2) - inv(p)), p, if self.both_endpoints(dim) { 1.0 } else { r })
            }
            Self::Critical { p, p1, p2, .. } => (-n * (inv(p1) + inv(p2) - inv(p)), p, f64::INFINITY),
        }
    }

    fn endpoints(&self, dim: usize) -> (bool, bool) {
        let n = dim as f64;
        match *self {
            Self::General { s1, s2, p1, p2, lambda1, lambda2, .. } => (
                (s1 + n / lambda2 - n / p1).abs() < TOL,
                (s2 + n / lambda1 - n / p2).abs() < TOL,
            ),
            _ => (false, false),
        }
    }

    fn both_endpoints(&self, dim: usize) -> bool {
        let (a, b) = self.endpoints(dim);
        a && b
    }

    /// Checks the index constraints of the selected law on an `dim`-D box.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        match *self {
            Self::Tame { p, r, .. } => {
                check_exponent("p", p)?;
                check_exponent("r", r)
            }
            Self::General { s1, s2, p, p1, p2, r, lambda1, lambda2 } => {
                check_exponent("r", r)?;
                check_lambdas(p, p1, p2, lambda1, lambda2)?;
                let gap = s1 + s2 + n * (1.0 - inv(p1) - inv(p2)).min(0.0);
                if !(gap > 0.0) {
                    return Err(violated(
                        "s1 + s2 + N min(0, 1 - 1/p1 - 1/p2) > 0",
                        format!("value {gap}"),
                    ));
                }
                if s1 + n / lambda2 > n / p1 + TOL {
                    return Err(violated("s1 + N/lambda2 <= N/p1", format!("s1 = {s1}")));
                }
                if s2 + n / lambda1 > n / p2 + TOL {
                    return Err(violated("s2 + N/lambda1 <= N/p2", format!("s2 = {s2}")));
                }
                Ok(())
            }
            Self::Critical { s1, s2, p, p1, p2, lambda1, lambda2 } => {
                check_lambdas(p, p1, p2, lambda1, lambda2)?;
                if (s1 + s2).abs() > TOL {
                    return Err(violated("s1 + s2 = 0", format!("s1 = {s1}, s2 = {s2}")));
                }
                let lo = n / lambda1 - n / p2;
                let hi = n / p1 - n / lambda2;
                if !(s1 > lo && s1 <= hi + TOL) {
                    return Err(violated("N/lambda1 - N/p2 < s1 <= N/p1 - N/lambda2", format!("s1 = {s1}, interval ({lo}, {hi}]")));
                }
                if inv(p1) + inv(p2) > 1.0 + TOL {
                    return Err(violated("1/p1 + 1/p2 <= 1", format!("p1 = {p1}, p2 = {p2}")));
                }
                Ok(())
            }
            Self::Multiplier { s, p, r } => {
                check_exponent("p", p)?;
                check_exponent("r", r)?;
                if p >= 2.0 {
                    if !(s.abs() < n / p) {
                        return Err(violated("|s| < N/p for p >= 2", format!("s = {s}, p = {p}")));
                    }
                } else {
                    let conj = 1.0 - inv(p);
                    if !(s > -n * conj && s < n / p) {
                        return Err(violated("-N/p' < s < N/p for p < 2", format!("s = {s}, p = {p}")));
                    }
                }
                Ok(())
            }
            Self::Corollary { s, p, p1, r } => {
                check_exponent("p", p)?;
                check_exponent("r", r)?;
                if !(p <= p1) {
                    return Err(violated("p <= p1", format!("p = {p}, p1 = {p1}")));
                }
                let excess = inv(p) + inv(p1) - 1.0;
                let lo = -n / p1 + n * excess.max(0.0);
                if !(s > lo && s < n / p1) {
                    let which = if excess > 0.0 {
                        "-N/p1 + N(1/p + 1/p1 - 1) < s < N/p1"
                    } else {
                        "-N/p1 < s < N/p1"
                    };
                    return Err(violated(which, format!("s = {s}")));
                }
                Ok(())
            }
        }
    }
}

fn norm(f: &SpectralField, s: f64, p: f64, r: f64) -> Result<f64> {
    besov_norm(f, BesovParams::new(s, p, r)?)
}

fn sup(f: &SpectralField) -> f64 {
    f.inverse().max_abs()
}

/// Evaluates both sides of `case` for the pair `(u, v)`; the product on the
/// left is formed under `rule`.
pub fn product_law_check(
    case: &ProductLawCase,
    u: &SpectralField,
    v: &SpectralField,
    rule: ProductRule,
) -> Result<InequalitySample> {
    if u.grid() != v.grid() {
        return Err(Error::Shape("product law operands live on different grids".into()));
    }
    let dim = u.grid().dim();
    let n = dim as f64;
    case.validate(dim)?;
    let (ls, lp, lr) = case.lhs_params(dim);
    let lhs = norm(&product(u, v, rule)?, ls, lp, lr)?;
    let rhs = match *case {
        ProductLawCase::Tame { s, p, r } => sup(u) * norm(v, s, p, r)? + sup(v) * norm(u, s, p, r)?,
        ProductLawCase::General { s1, s2, p1, p2, r, .. } => {
            let (end1, end2) = case.endpoints(dim);
            let (ru, rv) = match (end1, end2) {
                (true, true) => (1.0, 1.0),
                (true, false) => (1.0, r),
                _ => (r, f64::INFINITY),
            };
            let mut vn = norm(v, s2, p2, rv)?;
            if end2 {
                vn += sup(v);
            }
            norm(u, s1, p1, ru)? * vn
        }
        ProductLawCase::Critical { s1, s2, p1, p2, .. } => norm(u, s1, p1, 1.0)? * norm(v, s2, p2, f64::INFINITY)?,
        ProductLawCase::Multiplier { s, p, r } => norm(u, s, p, r)? * (norm(v, n / p, p, f64::INFINITY)? + sup(v)),
        ProductLawCase::Corollary { s, p, p1, r } => {
            norm(u, s, p, r)? * (norm(v, n / p1, p1, f64::INFINITY)? + sup(v))
        }
    };
    Ok(InequalitySample::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::PartitionOfUnity;
    use crate::spectral::products::strip_nyquist;
    use crate::spectral::{RealField, TorusGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn general() -> ProductLawCase {
        ProductLawCase::General { s1: 0.4, s2: -0.2, p: 2.0, p1: 2.0, p2: 4.0, r: 2.0, lambda1: 4.0, lambda2: 4.0 }
    }

    #[test]
    fn unit_multiplier_closed_form() {
        // ‖1‖_{B^1_{2,∞}} = 2^{-1}‖1‖_{L^2} = π on the 2π box, ‖1‖_∞ = 1
        let g = TorusGrid::cubic(2, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = strip_nyquist(&RealField::from_fn(g, |_| rng.gen_range(-1.0..1.0)).transform());
        let one = RealField::constant(g, 1.0).transform();
        let case = ProductLawCase::Multiplier { s: 0.5, p: 2.0, r: 2.0 };
        let smp = product_law_check(&case, &u, &one, ProductRule::Padded32).unwrap();
        assert!((smp.ratio().unwrap() - 1.0 / (1.0 + PI)).abs() < 1e-12);
    }

    #[test]
    fn cosine_square_closed_form() {
        // cos x splits as χ(1) into block -1 and 1-χ(1) into block 0; cos 2x
        // as χ(1) into block 0 and 1-χ(1) into block 1
        let g = TorusGrid::cubic(2, 64).unwrap();
        let c = PartitionOfUnity::default().chi(1.0);
        let u = RealField::from_fn(g, |x| x[0].cos()).transform();
        let case = ProductLawCase::Tame { s: 1.0, p: 2.0, r: 2.0 };
        let smp = product_law_check(&case, &u, &u, ProductRule::Padded32).unwrap();
        let lc = PI * 2f64.sqrt();
        let lhs = ((PI / 2.0).powi(2) + (c * lc / 2.0).powi(2) + ((1.0 - c) * lc).powi(2)).sqrt();
        let rhs = 2.0 * lc * ((c / 2.0).powi(2) + (1.0 - c).powi(2)).sqrt();
        assert!((smp.lhs - lhs).abs() < 1e-12 * lhs);
        assert!((smp.rhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn lhs_indices() {
        assert!((general().lhs_params(2).0 + 0.3).abs() < 1e-14);
        let crit = ProductLawCase::Critical { s1: 0.25, s2: -0.25, p: 2.0, p1: 2.0, p2: 4.0, lambda1: 4.0, lambda2: 4.0 };
        assert!(crit.validate(2).is_ok());
        let (s, p, r) = crit.lhs_params(2);
        assert!((s + 0.5).abs() < 1e-14 && p == 2.0 && r.is_infinite());
    }

    #[test]
    fn constraint_errors_name_the_constraint() {
        assert!(general().validate(2).is_ok());
        let msg = |c: ProductLawCase| match c.validate(2) {
            Err(Error::Parameter(m)) => m,
            other => panic!("expected a parameter error, got {other:?}"),
        };
        assert!(msg(ProductLawCase::Multiplier { s: 1.0, p: 2.0, r: 2.0 }).contains("|s| < N/p"));
        assert!(msg(ProductLawCase::Multiplier { s: -1.5, p: 1.5, r: 2.0 }).contains("-N/p'"));
        assert!(msg(ProductLawCase::Corollary { s: 0.25, p: 4.0, p1: 2.0, r: 2.0 }).contains("p <= p1"));
        assert!(msg(ProductLawCase::Corollary { s: -0.6, p: 2.0, p1: 4.0, r: 2.0 }).contains("-N/p1 < s"));
        let bad = ProductLawCase::General { s1: 0.1, s2: -0.2, p: 2.0, p1: 2.0, p2: 4.0, r: 2.0, lambda1: 4.0, lambda2: 4.0 };
        assert!(msg(bad).contains("s1 + s2 + N min"));
        let bad = ProductLawCase::General { s1: 0.4, s2: -0.2, p: 2.0, p1: 2.0, p2: 4.0, r: 2.0, lambda1: 2.0, lambda2: 4.0 };
        assert!(msg(bad).contains("p2 <= lambda1"));
        let crit = ProductLawCase::Critical { s1: 0.25, s2: 0.0, p: 2.0, p1: 2.0, p2: 4.0, lambda1: 4.0, lambda2: 4.0 };
        assert!(msg(crit).contains("s1 + s2 = 0"));
    }

    #[test]
    fn random_pairs_respect_the_laws() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let w = g.wavenumbers();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut field = |decay: i32| {
            let f = RealField::from_fn(g, |_| rng.gen_range(-1.0..1.0)).transform();
            strip_nyquist(&f.map_modes(|i, c| c / (1.0 + w.kmag[i]).powi(decay)))
        };
        let cases = [
            ProductLawCase::Tame { s: 1.0, p: 2.0, r: 2.0 },
            general(),
            ProductLawCase::Critical { s1: 0.25, s2: -0.25, p: 2.0, p1: 2.0, p2: 4.0, lambda1: 4.0, lambda2: 4.0 },
            ProductLawCase::Multiplier { s: 0.5, p: 2.0, r: 2.0 },
            ProductLawCase::Corollary { s: 0.25, p: 2.0, p1: 4.0, r: 2.0 },
        ];
        for _ in 0..4 {
            let u = field(2);
            let v = field(2);
            for case in &cases {
                let ratio = product_law_check(case, &u, &v, ProductRule::Padded32).unwrap().ratio().unwrap();
                assert!(ratio.is_finite() && ratio > 0.0 && ratio < 50.0, "{} ratio {ratio}", case.law_id());
            }
        }
    }

    #[test]
    fn serde_tags() {
        let json = serde_json::to_string(&ProductLawCase::Tame { s: 1.0, p: 2.0, r: 2.0 }).unwrap();
        assert!(json.contains("\"law\":\"tame\""));
        let back: ProductLawCase = serde_json::from_str(&json).unwrap();
        assert_eq!(back.law_id(), "tame");
    }
}
