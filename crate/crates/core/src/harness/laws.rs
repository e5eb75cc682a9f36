//! The laws a suite can sweep, and one evaluation of each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::{generate_spectral, generate_vector, Envelope, SampleSpec};
use crate::bony::{bony_decomposition, commutator_estimate, product_law_check, CommutatorIndices, ProductLawCase};
use crate::elliptic::{elliptic_estimate_check, solve_pressure, CoefficientField, EllipticIndices, PressureOptions, Reference};
use crate::error::{Error, Result};
use crate::inequality::InequalitySample;
use crate::lp::{decompose, log_interpolation_check, CheminLernerAccumulator, PartitionOfUnity};
use crate::spectral::ops::{divergence, gradient, leray_project};
use crate::spectral::{product, vector_lp_norm, GridSpec, ProductRule, RealField, SpectralField, TorusGrid};
use crate::transport::{advect, frozen, limited_loss_report, LimitedLossIndices, TransportOptions};

/// Exponents in configs: numbers, or `"inf"` for `∞`.
pub mod extended {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Law {
    /// `‖u − Σ_l Δ_l u‖_∞ / ‖u‖_∞`.
    PartitionReconstruction,
    /// Idempotence, gradient annihilation and divergence of `𝒫u`, relative.
    LerayProjector,
    /// `‖uv − T_u v − T_v u − R(u,v)‖_∞ / (‖u‖_∞‖v‖_∞)`.
    BonyIdentity,
    /// `‖∇Δ_l u‖_2 / (2^l‖Δ_l u‖_2)` on single-block fields, inside the shell radii.
    Bernstein { block: i32 },
    ProductTame {
        s: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        r: f64,
    },
    ProductGeneral {
        s1: f64,
        s2: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        p1: f64,
        #[serde(with = "extended")]
        p2: f64,
        #[serde(with = "extended")]
        r: f64,
        #[serde(with = "extended")]
        lambda1: f64,
        #[serde(with = "extended")]
        lambda2: f64,
    },
    ProductCritical {
        s1: f64,
        s2: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        p1: f64,
        #[serde(with = "extended")]
        p2: f64,
        #[serde(with = "extended")]
        lambda1: f64,
        #[serde(with = "extended")]
        lambda2: f64,
    },
    ProductMultiplier {
        s: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        r: f64,
    },
    ProductCorollary {
        s: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        p1: f64,
        #[serde(with = "extended")]
        r: f64,
    },
    Commutator {
        sigma: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        p1: f64,
        alpha: f64,
        #[serde(with = "extended")]
        r: f64,
        axis: usize,
    },
    LogInterpolation {
        s: f64,
        eps: f64,
        #[serde(with = "extended")]
        rho: f64,
    },
    EllipticEstimate {
        sigma: f64,
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        r: f64,
        #[serde(with = "extended")]
        p1: f64,
        alpha: f64,
        /// `max|a|` of the coefficient samples.
        amp: f64,
    },
    TransportLimitedLoss {
        sigma: f64,
        eps: f64,
        alpha: f64,
        t_final: f64,
    },
}

/// How a law's ratios are judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawKind {
    /// Round-off identity: every ratio below a fixed tolerance; the
    /// resolution factor of round-off is reported, not asserted.
    Identity { tol: f64 },
    /// Two-sided bracket `lo ≤ ratio ≤ hi`.
    Bracket { lo: f64, hi: f64 },
    /// `lhs ≲ rhs` with an unknown constant.
    Inequality,
}

pub const LAW_IDS: &[&str] = &[
    "partition-reconstruction",
    "leray-projector",
    "bony-identity",
    "bernstein",
    "product-tame",
    "product-general",
    "product-critical",
    "product-multiplier",
    "product-corollary",
    "commutator",
    "log-interpolation",
    "elliptic-estimate",
    "transport-limited-loss",
];

impl Law {
    /// The law with its default indices.
    pub fn from_id(id: &str) -> Result<Self> {
        let law = match id {
            "partition-reconstruction" => Law::PartitionReconstruction,
            "leray-projector" => Law::LerayProjector,
            "bony-identity" => Law::BonyIdentity,
            "bernstein" => Law::Bernstein { block: 2 },
            "product-tame" => Law::ProductTame { s: 0.5, p: 2.0, r: 2.0 },
            "product-general" => Law::ProductGeneral {
                s1: 0.25,
                s2: 0.25,
                p: 2.0,
                p1: 2.0,
                p2: 2.0,
                r: 2.0,
                lambda1: 4.0,
                lambda2: 4.0,
            },
            "product-critical" => {
                Law::ProductCritical { s1: 0.5, s2: -0.5, p: 2.0, p1: 2.0, p2: 2.0, lambda1: 4.0, lambda2: 4.0 }
            }
            "product-multiplier" => Law::ProductMultiplier { s: 0.5, p: 2.0, r: 2.0 },
            "product-corollary" => Law::ProductCorollary { s: 0.25, p: 2.0, p1: 4.0, r: 2.0 },
            "commutator" => Law::Commutator { sigma: 0.5, p: 2.0, p1: 2.0, alpha: 0.5, r: 2.0, axis: 0 },
            "log-interpolation" => Law::LogInterpolation { s: 0.5, eps: 0.1, rho: 1.0 },
            "elliptic-estimate" => Law::EllipticEstimate { sigma: 0.5, p: 2.0, r: 2.0, p1: 2.0, alpha: 0.5, amp: 0.3 },
            "transport-limited-loss" => Law::TransportLimitedLoss { sigma: 0.5, eps: 0.25, alpha: 0.5, t_final: 0.1 },
            other => {
                return Err(Error::Parameter(format!("unknown law {other:?}; known laws: {}", LAW_IDS.join(", "))))
            }
        };
        Ok(law)
    }

    pub fn id(&self) -> &'static str {
        match self {
            Law::PartitionReconstruction => "partition-reconstruction",
            Law::LerayProjector => "leray-projector",
            Law::BonyIdentity => "bony-identity",
            Law::Bernstein { .. } => "bernstein",
            Law::ProductTame { .. } => "product-tame",
            Law::ProductGeneral { .. } => "product-general",
            Law::ProductCritical { .. } => "product-critical",
            Law::ProductMultiplier { .. } => "product-multiplier",
            Law::ProductCorollary { .. } => "product-corollary",
            Law::Commutator { .. } => "commutator",
            Law::LogInterpolation { .. } => "log-interpolation",
            Law::EllipticEstimate { .. } => "elliptic-estimate",
            Law::TransportLimitedLoss { .. } => "transport-limited-loss",
        }
    }

    /// Id with the varying parameter spelled out, for laws swept over it.
    pub fn label(&self) -> String {
        match self {
            Law::LogInterpolation { eps, .. } => format!("log-interpolation[eps={eps}]"),
            Law::Bernstein { block } => format!("bernstein[l={block}]"),
            _ => self.id().to_string(),
        }
    }

    /// `(s, p, r)` of the norm on the left-hand side.
    pub fn indices(&self, dim: usize) -> (f64, f64, f64) {
        const INF: f64 = f64::INFINITY;
        if let Some(case) = self.product_case() {
            return case.lhs_params(dim);
        }
        match *self {
            Law::Bernstein { .. } => (1.0, 2.0, 2.0),
            Law::Commutator { sigma, p, r, .. } => (sigma, p, r),
            Law::LogInterpolation { s, .. } => (s, 2.0, 1.0),
            Law::EllipticEstimate { sigma, p, r, .. } => (sigma, p, r),
            Law::TransportLimitedLoss { sigma, eps, .. } => (sigma - eps, 2.0, INF),
            _ => (0.0, INF, INF),
        }
    }

    pub fn kind(&self) -> LawKind {
        match self {
            Law::PartitionReconstruction | Law::LerayProjector | Law::BonyIdentity => LawKind::Identity { tol: 1e-12 },
            Law::Bernstein { .. } => {
                let (lo, hi) = PartitionOfUnity::default().shell();
                LawKind::Bracket { lo, hi }
            }
            _ => LawKind::Inequality,
        }
    }

    fn product_case(&self) -> Option<ProductLawCase> {
        Some(match *self {
            Law::ProductTame { s, p, r } => ProductLawCase::Tame { s, p, r },
            Law::ProductGeneral { s1, s2, p, p1, p2, r, lambda1, lambda2 } => {
                ProductLawCase::General { s1, s2, p, p1, p2, r, lambda1, lambda2 }
            }
            Law::ProductCritical { s1, s2, p, p1, p2, lambda1, lambda2 } => {
                ProductLawCase::Critical { s1, s2, p, p1, p2, lambda1, lambda2 }
            }
            Law::ProductMultiplier { s, p, r } => ProductLawCase::Multiplier { s, p, r },
            Law::ProductCorollary { s, p, p1, r } => ProductLawCase::Corollary { s, p, p1, r },
            _ => return None,
        })
    }

    /// Rejects indices outside the law's range before any sampling.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Some(case) = self.product_case() {
            return case.validate(dim);
        }
        match *self {
            Law::Bernstein { block } if block < 0 => {
                Err(Error::Parameter(format!("bernstein needs a block index >= 0, got {block}")))
            }
            Law::Commutator { sigma, p, p1, alpha, r, axis } => {
                if axis >= dim {
                    return Err(Error::Parameter(format!("commutator axis {axis} out of range for dimension {dim}")));
                }
                CommutatorIndices { sigma, p, p1, alpha, r }.validate(dim)
            }
            Law::LogInterpolation { eps, rho, .. } => {
                if !(eps > 0.0) || !(rho >= 1.0) {
                    return Err(Error::Parameter(format!("log-interpolation needs eps > 0 and rho >= 1, got {eps}, {rho}")));
                }
                Ok(())
            }
            Law::EllipticEstimate { sigma, p, r, p1, alpha, amp } => {
                if !(amp >= 0.0 && amp < 1.0) {
                    return Err(Error::Parameter(format!("elliptic coefficient amplitude must lie in [0, 1), got {amp}")));
                }
                EllipticIndices { sigma, p, r, p1, alpha }.validate(dim)
            }
            Law::TransportLimitedLoss { sigma, eps, alpha, t_final } => {
                if !(t_final > 0.0) {
                    return Err(Error::Parameter(format!("transport horizon must be positive, got {t_final}")));
                }
                LimitedLossIndices { sigma, eps, p: 2.0, p1: f64::INFINITY, alpha }.validate(dim)
            }
            _ => Ok(()),
        }
    }

    /// Evaluates sample `index` of the law on an `n^dim` grid.
    pub fn evaluate(&self, dim: usize, n: usize, seed: u64, index: usize, rule: ProductRule) -> Result<InequalitySample> {
        let grid = GridSpec { sizes: vec![n; dim], periods: None };
        let base = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(4 * index as u64);
        let spec = |s: f64, k: u64| SampleSpec::new(s, 2.0, 2.0, Envelope::Power { decay: 1.0 }, base + k, grid.clone());
        let sup = |f: &SpectralField| f.inverse().max_abs();
        if let Some(case) = self.product_case() {
            let (su, sv) = match case {
                ProductLawCase::General { s1, s2, .. } | ProductLawCase::Critical { s1, s2, .. } => (s1 + 0.5, s2 + 0.5),
                ProductLawCase::Tame { s, .. } | ProductLawCase::Multiplier { s, .. } => (s + 0.5, dim as f64 / 2.0 + 0.5),
                ProductLawCase::Corollary { s, p1, .. } => (s + 0.5, dim as f64 / p1 + 0.5),
            };
            let u = generate_spectral(&spec(su, 0))?;
            let v = generate_spectral(&spec(sv, 1))?;
            return product_law_check(&case, &u, &v, rule);
        }
        match *self {
            Law::PartitionReconstruction => {
                // white noise, so every block and every transition zone is populated
                let mut rng = ChaCha8Rng::seed_from_u64(base);
                let u = RealField::from_fn(TorusGrid::from_spec(&grid)?, |_| rng.gen_range(-1.0..1.0)).transform();
                let d = decompose(&u, &PartitionOfUnity::default());
                let err = u.sub(&d.reconstruct()?)?;
                Ok(InequalitySample::new(sup(&err), sup(&u)))
            }
            Law::LerayProjector => {
                let u = generate_vector(&spec(0.5, 0), false)?;
                let phi = generate_spectral(&spec(1.5, 3))?;
                let pu = leray_project(&u)?;
                let ppu = leray_project(&pu)?;
                let g = gradient(&phi);
                let pg = leray_project(&g)?;
                let phys = |x: &[SpectralField]| vector_lp_norm(&x.iter().map(SpectralField::inverse).collect::<Vec<_>>(), f64::INFINITY);
                let diff: Vec<_> = ppu.iter().zip(&pu).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
                let kmax = u[0].grid().wavenumbers().kmax();
                let idem = phys(&diff)? / phys(&pu)?;
                let annihilate = phys(&pg)? / phys(&g)?;
                let div = sup(&divergence(&pu)?) / (kmax * phys(&u)?);
                Ok(InequalitySample::new(idem.max(annihilate).max(div), 1.0))
            }
            Law::BonyIdentity => {
                let u = generate_spectral(&spec(0.0, 0))?;
                let v = generate_spectral(&spec(0.0, 1))?;
                let (tuv, tvu, r) = bony_decomposition(&u, &v, rule)?;
                let err = product(&u, &v, rule)?.sub(&tuv)?.sub(&tvu)?.sub(&r)?;
                Ok(InequalitySample::new(sup(&err), sup(&u) * sup(&v)))
            }
            Law::Bernstein { block } => {
                let s = SampleSpec::new(0.0, 2.0, 2.0, Envelope::Single { block }, base, grid);
                let u = generate_spectral(&s)?;
                if u.max_abs_coeff() == 0.0 {
                    return Err(Error::Degenerate(format!("block {block} is not resolved at n = {n}")));
                }
                let gn: f64 = gradient(&u).iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt();
                Ok(InequalitySample::new(gn, 2f64.powi(block) * u.l2_norm()))
            }
            Law::Commutator { sigma, p, p1, alpha, r, axis } => {
                let a = generate_spectral(&spec(dim as f64 / p1 + alpha + 0.5, 0))?;
                let w = generate_spectral(&spec(sigma + 1.0 - alpha + 0.5, 1))?;
                Ok(commutator_estimate(&a, &w, axis, CommutatorIndices { sigma, p, p1, alpha, r })?.sample)
            }
            Law::LogInterpolation { s, eps, rho } => {
                // heat flow of a rough sample: the blocks decay at different rates
                let u = generate_spectral(&SampleSpec::new(s, 2.0, f64::INFINITY, Envelope::Power { decay: 0.0 }, base, grid))?;
                let mut acc = CheminLernerAccumulator::new(2.0);
                let kd2 = u.grid().wavenumbers();
                for i in 0..5 {
                    let t = 0.002 * i as f64;
                    let ut = u.map_modes(|m, c| c * (-kd2.kd2[m] * t).exp());
                    acc.record(t, &ut)?;
                }
                log_interpolation_check(&acc, s, eps, rho)
            }
            Law::EllipticEstimate { sigma, p, r, p1, alpha, amp } => {
                let a = generate_spectral(&spec(dim as f64 / p1 + alpha + 0.5, 0))?;
                let m = sup(&a);
                if m == 0.0 {
                    return Err(Error::Degenerate("zero coefficient sample".into()));
                }
                let coef = CoefficientField::new(a.scale(amp / m).inverse())?;
                let f = generate_vector(&spec(sigma + 0.5, 1), false)?;
                let opts = PressureOptions { tol: 1e-12, max_iter: 1000, rule, reference: Reference::Midrange };
                let sol = solve_pressure(&coef, &f, &opts)?;
                elliptic_estimate_check(&coef, &f, &sol.grad, &EllipticIndices { sigma, p, r, p1, alpha })
            }
            Law::TransportLimitedLoss { sigma, eps, alpha, t_final } => {
                let a0 = generate_spectral(&spec(sigma + 0.5, 0))?;
                let mut v = generate_vector(&spec(1.5, 1), true)?;
                let vmax = vector_lp_norm(&v.iter().map(SpectralField::inverse).collect::<Vec<_>>(), f64::INFINITY)?;
                if vmax == 0.0 {
                    return Err(Error::Degenerate("zero velocity sample".into()));
                }
                v.iter_mut().for_each(|c| *c = c.scale(1.0 / vmax));
                let h = 2.0 * std::f64::consts::PI / n as f64;
                let opts = TransportOptions { t_final, dt: 0.4 * h, p: 2.0, p1: f64::INFINITY, ..Default::default() };
                let vel = frozen(v);
                let run = advect(&a0, &vel, None, &opts)?;
                let idx = LimitedLossIndices { sigma, eps, p: 2.0, p1: f64::INFINITY, alpha };
                limited_loss_report(&run, &idx, 1.0)
            }
            _ => unreachable!("product laws handled above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in LAW_IDS {
            let law = Law::from_id(id).unwrap();
            assert_eq!(law.id(), *id);
            law.validate(2).unwrap();
            let json = serde_json::to_string(&law).unwrap();
            assert_eq!(serde_json::from_str::<Law>(&json).unwrap(), law);
        }
        assert!(Law::from_id("bony-identiy").is_err());
    }

    #[test]
    fn infinite_exponents_parse() {
        let law: Law = serde_json::from_str(r#"{"law": "product-tame", "s": 0.5, "p": "inf", "r": 2}"#).unwrap();
        assert_eq!(law, Law::ProductTame { s: 0.5, p: f64::INFINITY, r: 2.0 });
        assert!(serde_json::to_string(&law).unwrap().contains("\"inf\""));
        assert!(serde_json::from_str::<Law>(r#"{"law": "product-tame", "s": 0.5, "p": "big", "r": 2}"#).is_err());
    }

    #[test]
    fn identities_hold_to_round_off() {
        for law in [Law::PartitionReconstruction, Law::LerayProjector, Law::BonyIdentity] {
            let smp = law.evaluate(2, 32, 1, 0, ProductRule::Padded32).unwrap();
            assert!(smp.ratio().unwrap() < 1e-13, "{}: {:?}", law.id(), smp);
        }
    }

    #[test]
    fn bernstein_ratio_in_shell() {
        let law = Law::Bernstein { block: 2 };
        let r = law.evaluate(2, 32, 3, 0, ProductRule::Native).unwrap().ratio().unwrap();
        assert!((4.0 / 3.0..=1.5).contains(&r), "{r}");
        assert!(matches!(Law::Bernstein { block: 9 }.evaluate(2, 32, 3, 0, ProductRule::Native), Err(Error::Degenerate(_))));
    }

    #[test]
    fn inequality_ratios_are_finite() {
        for id in LAW_IDS.iter().skip(4) {
            let law = Law::from_id(id).unwrap();
            let r = law.evaluate(2, 32, 7, 1, ProductRule::Padded32).unwrap().ratio().unwrap();
            assert!(r.is_finite() && r > 0.0, "{id}: {r}");
        }
    }
}
