//! Bootstrap conditions (H1)-(H8) and the time-smallness recipes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lp::{block_norms, high_pass, time_norm, vector_block_norms, BlockNorms, CheminLernerAccumulator, PartitionOfUnity};
use crate::spectral::ops::{gradient, leray_project};
use crate::spectral::SpectralField;

use super::config::BootstrapConfig;
use super::state::SolverState;

const INF: f64 = f64::INFINITY;

/// One inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl Condition {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn strict(&self) -> bool {
        self.lhs < self.rhs
    }

    /// `1 − lhs/rhs`: positive while the condition holds.
    pub fn margin(&self) -> f64 {
        1.0 - self.lhs / self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ParabolicStatus {
    NotApplicable { reason: String },
    Evaluated { condition: Condition },
}

/// Constants fixed by the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    /// `b̲ = inf(1 + a₀)`.
    pub b_lower: f64,
    /// `b̄ = 1 + sup a₀`.
    pub b_upper: f64,
    /// `A₀ = 1 + 2‖a₀‖_{B^{N/p1+ε'}_{p1,∞}}`.
    pub a0: f64,
    /// `U₀ = ‖u₀‖_{B^{N/p2−1}_{p2,r}} + ‖f‖_{L̃¹_T(B^{N/p2−1}_{p2,r})}`.
    pub u0: f64,
    /// `Ũ₀ = 2CU₀ + 4Cν̄A₀`.
    pub u_tilde0: f64,
    pub pi0: f64,
    /// `ν̄ = μ`.
    pub nu_upper: f64,
    pub m: i32,
    pub m_from_data: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    /// `(H1)` to `(H8)` in order.
    pub conditions: Vec<Condition>,
    /// Block-sum bound on `u_L`, and the recipes for `η` and `T`.
    pub derived: Vec<Condition>,
    /// `ν̲ = μ inf_{[0,t]} inf(1 + a)`.
    pub nu_lower: f64,
    pub z_m: f64,
    pub parabolic: ParabolicStatus,
    /// `‖a(t)‖_{B^{N/p1}_{p1,∞}}`.
    pub a_besov: f64,
    /// `‖u(t)‖_{B^{N/p2−1}_{p2,r}}`.
    pub u_besov: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breach {
    pub t: f64,
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
    pub suggestion: Option<String>,
}

/// `2Σ_{l≥q} 2^{lN/p1}‖Δ_l a‖_{L^{p1}} ≤ c`: smallest such `q ≥ −1`.
pub fn cutoff_from_blocks(bn: &BlockNorms, dim: usize, c: f64) -> i32 {
    let s = dim as f64 / bn.p;
    (-1..=bn.lmax() + 1).find(|&q| 2.0 * bn.tail(s, 1.0, q) <= c).unwrap_or(bn.lmax() + 1)
}

#[derive(Clone, Debug)]
pub struct BootstrapMonitor {
    cfg: BootstrapConfig,
    dim: usize,
    mu: f64,
    t_final: f64,
    pub constants: ReferenceConstants,
    u0_blocks: BlockNorms,
    f_blocks: BlockNorms,
    a0_crit: f64,
    a: CheminLernerAccumulator,
    a_tail: CheminLernerAccumulator,
    a_sup: f64,
    tail_sup: f64,
    b_min: f64,
    b_max: f64,
    u_l: CheminLernerAccumulator,
    u_tilde: CheminLernerAccumulator,
    gp_l: CheminLernerAccumulator,
    gp_tilde: CheminLernerAccumulator,
    grad_a: CheminLernerAccumulator,
    ph: CheminLernerAccumulator,
    z_samples: Vec<f64>,
    pub rows: Vec<MonitorRow>,
    pub breaches: Vec<Breach>,
}

impl BootstrapMonitor {
    pub fn new(
        cfg: &BootstrapConfig,
        mu: f64,
        t_final: f64,
        a0: &SpectralField,
        u0: &[SpectralField],
        f: &[SpectralField],
    ) -> Result<Self> {
        let dim = a0.grid().dim();
        cfg.validate(dim)?;
        let n = dim as f64;
        let s1 = n / cfg.p1;
        let s2 = n / cfg.p2 - 1.0;
        let a0_phys = a0.inverse();
        let a0_blocks = block_norms(a0, cfg.p1)?;
        let u0_blocks = vector_block_norms(u0, cfg.p2)?;
        let f_blocks = vector_block_norms(f, cfg.p2)?;
        let (m, m_from_data) = match cfg.m {
            Some(m) => (m, false),
            None => (cutoff_from_blocks(&a0_blocks, dim, cfg.c), true),
        };
        let a0c = 1.0 + 2.0 * a0_blocks.besov(s1 + cfg.eps_prime, INF);
        let u0c = u0_blocks.besov(s2, cfg.r) + t_final * f_blocks.besov(s2, cfg.r);
        let ut0 = 2.0 * cfg.big_c * u0c + 4.0 * cfg.big_c * mu * a0c;
        let constants = ReferenceConstants {
            b_lower: 1.0 + a0_phys.min(),
            b_upper: 1.0 + a0_phys.max(),
            a0: a0c,
            u0: u0c,
            u_tilde0: ut0,
            pi0: cfg.pi0.unwrap_or(ut0),
            nu_upper: mu,
            m,
            m_from_data,
        };
        Ok(Self {
            cfg: cfg.clone(),
            dim,
            mu,
            t_final,
            constants,
            u0_blocks,
            f_blocks,
            a0_crit: a0_blocks.besov(s1, INF) + a0_phys.max_abs(),
            a: CheminLernerAccumulator::new(cfg.p1),
            a_tail: CheminLernerAccumulator::new(cfg.p1),
            a_sup: 0.0,
            tail_sup: 0.0,
            b_min: INF,
            b_max: 0.0,
            u_l: CheminLernerAccumulator::new(cfg.p2),
            u_tilde: CheminLernerAccumulator::new(cfg.p2),
            gp_l: CheminLernerAccumulator::new(cfg.p2),
            gp_tilde: CheminLernerAccumulator::new(cfg.p2),
            grad_a: CheminLernerAccumulator::new(cfg.p1),
            ph: CheminLernerAccumulator::new(cfg.p2),
            z_samples: Vec::new(),
            rows: Vec::new(),
            breaches: Vec::new(),
        })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.cfg
    }

    fn s2(&self) -> f64 {
        self.dim as f64 / self.cfg.p2 - 1.0
    }

    /// `(Σ_l 2^{lr(N/p2−1)}(1−e^{−κν2^{2l}T})^r(‖Δ_l u₀‖^r + (T‖Δ_l f‖)^r))^{1/r}`.
    pub fn stokes_block_sum(&self, t: f64) -> f64 {
        let (r, kappa, nu) = (self.cfg.r, self.cfg.kappa, self.mu);
        let s2 = self.s2();
        let mut acc = 0.0;
        for l in -1..=self.u0_blocks.lmax() {
            let w = 2f64.powf(l as f64 * r * s2) * (1.0 - (-kappa * nu * 4f64.powi(l) * t).exp()).powf(r);
            acc += w * (self.u0_blocks.get(l).powf(r) + (t * self.f_blocks.get(l)).powf(r));
        }
        acc.powf(1.0 / r)
    }

    /// Whether the parabolic estimate can be evaluated at the working index
    /// `s = N/p2 − 1`; returns `(α', κ)` with time exponent one.
    fn parabolic_indices(&self) -> std::result::Result<(f64, f64), String> {
        let s = self.s2();
        let alpha = self.cfg.eps / 2.0;
        let (n, p, p1) = (self.dim as f64, self.cfg.p2, self.cfg.p1);
        let range = if p1 > p {
            if 1.0 / p + 1.0 / p1 <= 1.0 {
                (-n / p1, n / p1)
            } else {
                (-n / p1 + n * (1.0 / p + 1.0 / p1 - 1.0), n / p1)
            }
        } else if p >= 2.0 {
            (-n / p, n / p)
        } else {
            (-n * (1.0 - 1.0 / p), n / p)
        };
        if !(s > range.0 && s < range.1) {
            return Err(format!("s = {s} outside ({}, {})", range.0, range.1));
        }
        // α' ≤ min(1, α, (s − 2 + 2/m)/2) with m ≥ 1 is nonempty iff s > 0
        let ap = 1f64.min(alpha).min(s / 2.0);
        if !(ap > 0.0) {
            return Err(format!("no α' > 0 with α' ≤ min(1, α, s/2) at s = {s}"));
        }
        Ok((ap, s / ap))
    }

    /// Records the state (with `H` from the last pressure solve) and
    /// evaluates every condition; returns the conditions breached now.
    pub fn observe(&mut self, state: &SolverState, h: &[SpectralField]) -> Result<Vec<Breach>> {
        let t = state.t;
        let cfg = self.cfg.clone();
        let n = self.dim as f64;
        let s1 = n / cfg.p1;
        let s2 = self.s2();
        let k = &self.constants;
        let m = k.m;
        let pou = PartitionOfUnity::default();

        let a_phys = state.a.inverse();
        let a_blocks = block_norms(&state.a, cfg.p1)?;
        let tail = high_pass(&state.a, &pou, m)?;
        self.a.record_blocks(t, a_blocks.clone())?;
        self.a_tail.record(t, &tail)?;
        self.a_sup = self.a_sup.max(a_phys.max_abs());
        self.tail_sup = self.tail_sup.max(tail.inverse().max_abs());
        self.b_min = self.b_min.min(1.0 + a_phys.min());
        self.b_max = self.b_max.max(1.0 + a_phys.max());
        self.u_l.record_vector(t, &state.u_l)?;
        self.u_tilde.record_vector(t, &state.u_tilde)?;
        self.gp_l.record_vector(t, &state.grad_pi_l)?;
        self.gp_tilde.record_vector(t, &state.grad_pi_tilde)?;
        let parabolic = self.parabolic_indices();
        if parabolic.is_ok() {
            self.grad_a.record_vector(t, &gradient(&state.a))?;
            self.ph.record_vector(t, &leray_project(h)?)?;
        }
        let crit = a_blocks.besov(s1, INF) + a_phys.max_abs();
        self.z_samples.push(crit * crit);

        let nu_up = self.mu;
        let nu_lo = self.mu * self.b_min;
        let times = self.a.times().to_vec();
        let z_m = 2f64.powf(m as f64 * cfg.eps) * nu_up * nu_up / nu_lo * time_norm(&times, &self.z_samples, 1.0);
        let a_crit_sup = self.a.norm(s1, INF, INF)? + self.a_sup;

        let h1 = Condition::new("H1", self.a_tail.norm(s1, INF, INF)? + self.tail_sup, cfg.c * nu_lo / nu_up);
        let h2 = Condition::new("H2", cfg.big_c * nu_up * nu_up * t * a_crit_sup * a_crit_sup, 2f64.powi(-2 * m) * nu_lo);
        let h3 = Condition::new("H3", (0.5 * k.b_lower / self.b_min).max(self.b_max / (2.0 * k.b_upper)), 1.0);
        let h4 = Condition::new("H4", self.a.norm(s1 + cfg.eps / 2.0, INF, INF)? + self.a_sup, k.a0);
        let h5 = Condition::new("H5", self.u_l.norm(s2 + 2.0, cfg.r, 1.0)?, cfg.eta);
        let h6 = Condition::new(
            "H6",
            self.u_tilde.norm(s2, cfg.r, INF)? + nu_lo * self.u_tilde.norm(s2 + 2.0, cfg.r, 1.0)?,
            k.u_tilde0 * cfg.eta,
        );
        let h7 = Condition::new("H7", self.gp_l.norm(s2, cfg.r, 1.0)?, cfg.eta);
        let h8 = Condition::new("H8", self.gp_tilde.norm(s2, cfg.r, 1.0)?, k.pi0 * cfg.eta);

        let kappa_nu = cfg.kappa * self.mu;
        let derived = vec![
            Condition::new("stokes-smoothing", kappa_nu * self.u_l.norm(s2 + 2.0, cfg.r, 1.0)?, self.stokes_block_sum(t)),
            Condition::new("stokes-horizon", self.stokes_block_sum(self.t_final), kappa_nu * cfg.eta),
            Condition::new("forcing-time", cfg.c_g * t, cfg.big_c * nu_up * cfg.eta),
            Condition::new(
                "eta-transport",
                cfg.big_c / std::f64::consts::LN_2 * (1.0 + self.a0_crit) * (1.0 + k.u_tilde0 / nu_lo) * cfg.eta,
                cfg.c * nu_lo / (2.0 * nu_up),
            ),
            Condition::new("cutoff-time", t, 2f64.powi(-2 * m) * nu_lo / (cfg.big_c * nu_up * nu_up * k.a0 * k.a0)),
            Condition::new("eta-exponential", cfg.big_c * (1.0 + k.u_tilde0 / nu_lo) * cfg.eta, std::f64::consts::LN_2),
        ];

        let parabolic = match parabolic {
            Err(reason) => ParabolicStatus::NotApplicable { reason },
            Ok((ap, kp)) => {
                let (p, r) = (cfg.p2, cfg.r);
                let calc_a = 1.0 + self.grad_a.norm(s1 + cfg.eps / 2.0 - 1.0, INF, INF)? / k.b_lower;
                let lhs = self.u_tilde.norm(s2, r, INF)? + kp * nu_lo * self.u_tilde.norm(s2 + 2.0, r, 1.0)?;
                let extra = (nu_lo * (p - 1.0) / (p * p)) * (nu_lo * (p - 1.0) / p) * calc_a
                    * self.u_tilde.norm(s2 + 2.0 - ap, r, 1.0)?;
                let rhs = (cfg.big_c * z_m).exp() * calc_a.powf(kp) * (self.ph.norm(s2, r, 1.0)? + extra);
                ParabolicStatus::Evaluated { condition: Condition::new("parabolic", lhs, rhs) }
            }
        };

        let conditions = vec![h1, h2, h3, h4, h5, h6, h7, h8];
        let mut now = Vec::new();
        for c in &conditions {
            if !c.holds() {
                let suggestion = if c.name == "H1" { Some(self.suggest_cutoff(state, &a_blocks, nu_lo)?) } else { None };
                now.push(Breach { t, condition: c.name.clone(), lhs: c.lhs, rhs: c.rhs, suggestion });
            }
        }
        self.rows.push(MonitorRow {
            t,
            conditions,
            derived,
            nu_lower: nu_lo,
            z_m,
            parabolic,
            a_besov: a_blocks.besov(s1, INF),
            u_besov: vector_block_norms(&state.u()?, cfg.p2)?.besov(s2, cfg.r),
        });
        self.breaches.extend(now.iter().cloned());
        Ok(now)
    }

    fn suggest_cutoff(&self, state: &SolverState, a_blocks: &BlockNorms, nu_lo: f64) -> Result<String> {
        let m = self.constants.m;
        let by_def = cutoff_from_blocks(a_blocks, self.dim, self.cfg.c);
        let pou = PartitionOfUnity::default();
        let s1 = self.dim as f64 / self.cfg.p1;
        let bound = self.cfg.c * nu_lo / self.mu;
        let mut direct = None;
        for q in (m + 1)..=(a_blocks.lmax() + 1) {
            let tail = high_pass(&state.a, &pou, q)?;
            if block_norms(&tail, self.cfg.p1)?.besov(s1, INF) + tail.inverse().max_abs() <= bound {
                direct = Some(q);
                break;
            }
        }
        let q = direct.unwrap_or(a_blocks.lmax() + 1).max(by_def);
        Ok(format!("cutoff m = {m} too small; the cutoff rule on the current density gives m = {by_def}, raise m to at least {q}"))
    }

    pub fn last(&self) -> Option<&MonitorRow> {
        self.rows.last()
    }
}
