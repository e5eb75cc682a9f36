use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{block_norms, vector_block_norms, CheminLernerAccumulator};
use crate::spectral::SpectralField;

use super::config::SolverConfig;
use super::data::InitialData;
use super::run::run;
use super::state::{sum, SolverState};

/// One time sample of the difference of two solutions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSample {
    pub t: f64,
    /// `‖δa(t)‖_{B^{N/p1−1}_{p1,∞}}`.
    pub da: f64,
    /// `‖δu(t)‖_{B^{N/p2−2}_{p2,r}}`.
    pub du: f64,
    /// `‖∇δΠ(t)‖_{B^{N/p2−2}_{p2,r}}`.
    pub dgrad_pi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub delta: f64,
    pub samples: Vec<DifferenceSample>,
    /// `‖δa‖_{L̃^∞_T(B^{N/p1−1}_{p1,∞})}`.
    pub da_norm: f64,
    /// `‖δu‖_{L̃^∞_T(B^{N/p2−2}_{p2,r}) ∩ L̃¹_T(B^{N/p2}_{p2,r})}`.
    pub du_norm: f64,
    /// `‖∇δΠ‖_{L̃¹_T(B^{N/p2−2}_{p2,r})}`.
    pub dgrad_pi_norm: f64,
    /// `‖δa₀‖ + ‖δu₀‖` in the weak norms.
    pub initial: f64,
    /// `sup_t (‖δa(t)‖ + ‖δu(t)‖) / initial`, zero when `initial = 0`.
    pub constant: f64,
    pub terminal_du: f64,
}

fn differences(x: &[SpectralField], y: &[SpectralField]) -> Result<Vec<SpectralField>> {
    x.iter().zip(y).map(|(a, b)| a.sub(b)).collect()
}

/// Runs from `(a₀, u₀)` and from `(a₀ + δ·da, u₀ + δ·du)` and measures the
/// difference in the norms one derivative below the solution space.
/// `du` is Leray-projected before use.
pub fn stability_experiment(
    a0: &SpectralField,
    u0: &[SpectralField],
    f: &[SpectralField],
    direction: (&SpectralField, &[SpectralField]),
    delta: f64,
    cfg: &SolverConfig,
) -> Result<StabilityReport> {
    if !delta.is_finite() {
        return Err(Error::Parameter(format!("perturbation size must be finite, got {delta}")));
    }
    let mut cfg = cfg.clone();
    cfg.monitor.enabled = false;
    cfg.snapshot_every = Some(cfg.record_every);
    let mut a1 = a0.clone();
    a1.axpy(delta, direction.0)?;
    let pdu = crate::spectral::ops::leray_project(direction.1)?;
    let u1: Vec<_> = u0.iter().zip(&pdu).map(|(u, d)| {
        let mut v = u.clone();
        v.axpy(delta, d)?;
        Ok(v)
    }).collect::<Result<_>>()?;
    let r0 = run(a0, u0, f, &cfg)?;
    let r1 = run(&a1, &u1, f, &cfg)?;
    difference_report(delta, &r0.snapshots, &r1.snapshots, &cfg)
}

fn difference_report(delta: f64, s0: &[SolverState], s1: &[SolverState], cfg: &SolverConfig) -> Result<StabilityReport> {
    let n = cfg.grid()?.dim() as f64;
    let (p1, p2, r) = (cfg.monitor.p1, cfg.monitor.p2, cfg.monitor.r);
    let mut acc_a = CheminLernerAccumulator::new(p1);
    let mut acc_u = CheminLernerAccumulator::new(p2);
    let mut acc_p = CheminLernerAccumulator::new(p2);
    let mut samples = Vec::new();
    for (x, y) in s0.iter().zip(s1) {
        let da = x.a.sub(&y.a)?;
        let du = differences(&x.u()?, &y.u()?)?;
        let dp = differences(&x.grad_pi()?, &y.grad_pi()?)?;
        let ba = block_norms(&da, p1)?;
        let bu = vector_block_norms(&du, p2)?;
        let bp = vector_block_norms(&dp, p2)?;
        samples.push(DifferenceSample {
            t: x.t,
            da: ba.besov(n / p1 - 1.0, f64::INFINITY),
            du: bu.besov(n / p2 - 2.0, r),
            dgrad_pi: bp.besov(n / p2 - 2.0, r),
        });
        acc_a.record_blocks(x.t, ba)?;
        acc_u.record_blocks(x.t, bu)?;
        acc_p.record_blocks(x.t, bp)?;
    }
    let first = samples.first().ok_or_else(|| Error::State("stability run produced no snapshots".into()))?;
    let initial = first.da + first.du;
    let constant = if initial > 0.0 {
        samples.iter().map(|s| (s.da + s.du) / initial).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(StabilityReport {
        delta,
        da_norm: acc_a.norm(n / p1 - 1.0, f64::INFINITY, f64::INFINITY)?,
        du_norm: acc_u.norm(n / p2 - 2.0, r, f64::INFINITY)? + acc_u.norm(n / p2, r, 1.0)?,
        dgrad_pi_norm: acc_p.norm(n / p2 - 2.0, r, 1.0)?,
        initial,
        constant,
        terminal_du: samples.last().map(|s| s.du).unwrap_or(0.0),
        samples,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Shape("slope fit needs at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate("log-log fit of nonpositive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("slope fit with a single abscissa".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub l: f64,
    pub err_a: f64,
    pub err_u: f64,
    pub err_grad_pi: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evolves `data` on `cfg` and the rescaled data `(a₀(l·), l u₀(l·), l³ f(l·))`
/// on the box shrunk by `l` with `(dt/l², T/l²)`, then compares
/// `a`, `u/l` and `∇Π/l³` node by node at the final time.
pub fn scaling_check(cfg: &SolverConfig, data: &InitialData, l: f64, tol: f64) -> Result<ScalingReport> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Parameter(format!("scaling factor must be positive, got {l}")));
    }
    let mut cfg = cfg.clone();
    cfg.monitor.enabled = false;
    let grid = cfg.grid()?;
    let small = grid.rescaled(1.0 / l)?;
    let mut scfg = cfg.clone();
    scfg.grid = small.spec();
    scfg.dt = cfg.dt / (l * l);
    scfg.t_final = cfg.t_final / (l * l);

    let d = data.build(grid)?;
    let sd = data.build(small)?;
    let su: Vec<_> = sd.u0.iter().map(|c| c.scale(l)).collect();
    let sf: Vec<_> = sd.f.iter().map(|c| c.scale(l.powi(3))).collect();
    let base = run(&d.a0, &d.u0, &d.f, &cfg)?;
    let scaled = run(&sd.a0, &su, &sf, &scfg)?;

    let nodal = |x: &SpectralField, y: &SpectralField, c: f64| -> f64 {
        let (x, y) = (x.inverse(), y.inverse());
        x.values().iter().zip(y.values()).map(|(a, b)| (a - b / c).abs()).fold(0.0, f64::max)
    };
    let vmax = |x: &[SpectralField], y: &[SpectralField], c: f64| -> f64 {
        x.iter().zip(y).map(|(a, b)| nodal(a, b, c)).fold(0.0, f64::max)
    };
    let err_a = nodal(&base.state.a, &scaled.state.a, 1.0);
    let err_u = vmax(&base.state.u()?, &scaled.state.u()?, l);
    let err_grad_pi = vmax(
        &sum(&base.state.grad_pi_l, &base.state.grad_pi_tilde)?,
        &sum(&scaled.state.grad_pi_l, &scaled.state.grad_pi_tilde)?,
        l.powi(3),
    );
    Ok(ScalingReport { l, err_a, err_u, err_grad_pi, tol, pass: err_a.max(err_u).max(err_grad_pi) <= tol })
}
