use serde::{Deserialize, Serialize};

use crate::elliptic::{PressureOptions, Reference};
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, ProductRule, TorusGrid};

/// How the density transport is interleaved with the momentum update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `a` and `ũ` advance together inside each Runge-Kutta stage.
    #[default]
    Coupled,
    /// Transport `a` over the step with the current `u`, then momentum.
    Lie,
    /// Half transport, momentum, half transport.
    Strang,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorPolicy {
    #[default]
    Warn,
    Abort,
}

/// Indices and constants of the bootstrap conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub enabled: bool,
    pub p1: f64,
    pub p2: f64,
    pub r: f64,
    pub eps: f64,
    /// Index shift in `A₀ = 1 + 2‖a₀‖_{B^{N/p1+ε'}_{p1,∞}}`.
    pub eps_prime: f64,
    /// The small constant `c` of the cutoff and of (H1).
    pub c: f64,
    /// The large constant `C`.
    pub big_c: f64,
    /// `C_g` of the time condition `C_g T < C ν̄ η`.
    pub c_g: f64,
    pub eta: f64,
    pub kappa: f64,
    /// Fixed cutoff; chosen from the data when `None`.
    pub m: Option<i32>,
    /// `Π̃₀`; defaults to `Ũ₀`.
    pub pi0: Option<f64>,
    pub policy: MonitorPolicy,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            p1: 2.0,
            p2: 2.0,
            r: 1.0,
            eps: 0.5,
            eps_prime: 0.5,
            c: 0.25,
            big_c: 1.0,
            c_g: 1.0,
            eta: 1.0,
            kappa: 9.0 / 16.0,
            m: None,
            pi0: None,
            policy: MonitorPolicy::Warn,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        if !(self.p1 >= 1.0 && self.p1.is_finite()) || !(self.p2 > 1.0 && self.p2.is_finite()) {
            return Err(Error::Parameter(format!("monitor needs 1 <= p1 < ∞ and 1 < p2 < ∞, got {}, {}", self.p1, self.p2)));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(Error::Parameter(format!("monitor needs 1 <= r < ∞, got {}", self.r)));
        }
        if !(self.eps > 0.0) || !(self.eps_prime > 0.0) {
            return Err(Error::Parameter("monitor needs ε > 0 and ε' > 0".into()));
        }
        if !(n / self.p1 + self.eps < n / self.p2 + 1.0) || !(n / self.p2 - 1.0 <= n / self.p1) {
            return Err(Error::Parameter(format!(
                "monitor indices need N/p1 + ε < N/p2 + 1 and N/p2 - 1 <= N/p1, got p1 = {}, p2 = {}, ε = {}",
                self.p1, self.p2, self.eps
            )));
        }
        for (name, v) in [("c", self.c), ("C", self.big_c), ("C_g", self.c_g), ("eta", self.eta), ("kappa", self.kappa)] {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("monitor constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Everything the time stepper needs apart from the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub mu: f64,
    /// Requested step; the run uses `T / n` with `n` from [`step_count`](crate::transport::step_count).
    pub dt: f64,
    pub t_final: f64,
    /// 2/3 rule on every nonlinear product (native products otherwise).
    pub dealias: bool,
    /// Replace the data by `S_n` of the data before starting.
    pub smoothing: Option<i32>,
    pub coupling: Coupling,
    /// Tolerance, iteration cap and reference of the pressure fixed point;
    /// its product rule is overridden by `dealias`.
    pub pressure: PressureOptions,
    /// Solve `div(b∇Π̃₁) = div(μaΔũ)` and `div(b∇Π̃₂) = div H` separately.
    pub split_pressure: bool,
    pub cfl_limit: f64,
    /// Abort when `max|div u|` exceeds this multiple of `max|u|·k_max`.
    pub divergence_tol: f64,
    pub record_every: usize,
    pub snapshot_every: Option<usize>,
    pub monitor: BootstrapConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec { sizes: vec![64, 64], periods: None },
            mu: 0.1,
            dt: 1e-2,
            t_final: 0.5,
            dealias: true,
            smoothing: None,
            coupling: Coupling::Coupled,
            pressure: PressureOptions { reference: Reference::Midrange, ..Default::default() },
            split_pressure: false,
            cfl_limit: 0.5,
            divergence_tol: 1e-10,
            record_every: 1,
            snapshot_every: None,
            monitor: BootstrapConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::from_spec(&self.grid)
    }

    pub fn rule(&self) -> ProductRule {
        if self.dealias {
            ProductRule::Dealiased23
        } else {
            ProductRule::Native
        }
    }

    pub fn pressure_options(&self) -> PressureOptions {
        PressureOptions { rule: self.rule(), ..self.pressure }
    }

    /// Number of steps and the step actually used.
    pub fn steps(&self) -> (usize, f64) {
        let steps = crate::transport::step_count(self.t_final, self.dt);
        let dt = if steps == 0 { 0.0 } else { self.t_final / steps as f64 };
        (steps, dt)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if !(self.mu > 0.0) {
            return Err(Error::Parameter(format!("viscosity must be positive, got {}", self.mu)));
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::Parameter(format!("need dt > 0 and T >= 0, got dt = {}, T = {}", self.dt, self.t_final)));
        }
        if self.record_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::Parameter("record and snapshot intervals must be positive".into()));
        }
        if !(self.cfl_limit > 0.0) || !(self.divergence_tol > 0.0) {
            return Err(Error::Parameter("CFL limit and divergence tolerance must be positive".into()));
        }
        if self.monitor.enabled {
            self.monitor.validate(grid.dim())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = SolverConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SolverConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: SolverConfig = serde_json::from_str(r#"{"mu": 0.2, "coupling": "strang"}"#).unwrap();
        assert_eq!(partial.mu, 0.2);
        assert_eq!(partial.coupling, Coupling::Strang);
        assert_eq!(partial.dt, cfg.dt);
    }

    #[test]
    fn step_count_covers_horizon() {
        let cfg = SolverConfig { dt: 0.03, t_final: 0.1, ..Default::default() };
        let (n, dt) = cfg.steps();
        assert_eq!(n, 4);
        assert!((dt * n as f64 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SolverConfig { mu: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { record_every: 0, ..Default::default() }.validate().is_err());
        let mut m = BootstrapConfig::default();
        m.p1 = 1.0;
        m.eps = 0.5;
        // N/p1 + ε = 2.5 is not below N/p2 + 1 = 2
        assert!(SolverConfig { monitor: m, ..Default::default() }.validate().is_err());
    }
}
