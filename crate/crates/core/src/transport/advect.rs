use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{block_norms, low_gradient_norms, time_norm, CheminLernerAccumulator};
use crate::spectral::ops::{advective_derivative, divergence};
use crate::spectral::{vector_lp_norm, ProductRule, SpectralField};

/// Time-dependent velocity `t ↦ v(t)`.
pub type Velocity<'a> = &'a dyn Fn(f64) -> Result<Vec<SpectralField>>;
/// Time-dependent scalar source `t ↦ g(t)`.
pub type Source<'a> = &'a dyn Fn(f64) -> Result<SpectralField>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransportOptions {
    pub t_final: f64,
    /// Requested step; the run uses `T / n` with `n` from [`step_count`](crate::transport::step_count).
    pub dt: f64,
    pub cfl_limit: f64,
    /// Lebesgue exponent of the recorded block norms of `a` and `g`.
    #[serde(with = "crate::harness::extended")]
    pub p: f64,
    /// Lebesgue exponent used for `‖∇S_j v‖` (the `V'` functionals).
    #[serde(with = "crate::harness::extended")]
    pub p1: f64,
    pub record_every: usize,
    /// Record `‖∇S_j v‖` (needed by the loss reports).
    pub record_velocity: bool,
    /// Keep a copy of `a` every this many steps (never when `None`).
    pub snapshot_every: Option<usize>,
    pub divergence_tol: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: 1e-2,
            cfl_limit: 0.5,
            p: 2.0,
            p1: f64::INFINITY,
            record_every: 1,
            record_velocity: true,
            snapshot_every: None,
            divergence_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportDiagnostics {
    pub t: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub lp: f64,
}

/// Output of [`advect`]: the final state plus everything recorded on the way.
#[derive(Clone, Debug)]
pub struct TransportRun {
    pub a0: SpectralField,
    pub a: SpectralField,
    pub dt: f64,
    pub steps: usize,
    pub p1: f64,
    /// Block norms of `a` at the record times.
    pub acc: CheminLernerAccumulator,
    /// Block norms of `g` at the same times, when a source is present.
    pub source_acc: Option<CheminLernerAccumulator>,
    /// `‖∇S_j v‖_{L^{p1}}` for `j = 0..=lmax+1` at the record times.
    pub grad_lows: Vec<Vec<f64>>,
    pub diagnostics: Vec<TransportDiagnostics>,
    pub snapshots: Vec<(f64, SpectralField)>,
}

impl TransportRun {
    pub fn times(&self) -> &[f64] {
        self.acc.times()
    }

    /// `V'_{p1,α}(t) = sup_{j≥0} 2^{jN/p1}‖∇S_j v‖_{L^{p1}}/(j+1)^α` at each record time.
    pub fn v_prime_series(&self, alpha: f64) -> Vec<f64> {
        let n = self.a0.grid().dim() as f64;
        self.grad_lows
            .iter()
            .map(|g| {
                g.iter()
                    .enumerate()
                    .map(|(j, x)| 2f64.powf(j as f64 * n / self.p1) * x / ((j + 1) as f64).powf(alpha))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Running integral `∫_0^t V'_{p1,α}` at each record time (trapezoid).
    pub fn v_prime_integral(&self, alpha: f64) -> Vec<f64> {
        cumulative(self.times(), &self.v_prime_series(alpha))
    }
}

pub(crate) fn cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += time_norm(&times[i - 1..=i], &values[i - 1..=i], 1.0);
        }
        out.push(acc);
    }
    out
}

/// Steps of size at most `dt` covering `[0, T]`; ratios within rounding of an
/// integer are not pushed to the next one.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    let x = t_final / dt;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// A velocity that does not depend on time.
pub fn frozen(v: Vec<SpectralField>) -> impl Fn(f64) -> Result<Vec<SpectralField>> {
    move |_| Ok(v.clone())
}

fn check_velocity(v: &[SpectralField], a: &SpectralField, opts: &TransportOptions, dt: f64) -> Result<()> {
    let grid = a.grid();
    if v.len() != grid.dim() || v.iter().any(|c| c.grid() != grid) {
        return Err(Error::Shape("velocity must be a vector field on the transported grid".into()));
    }
    let size: f64 = v.iter().map(|c| c.l2_norm()).sum::<f64>() * grid.wavenumbers().kmax();
    let div = divergence(v)?.l2_norm();
    if div > opts.divergence_tol * size.max(1.0) {
        return Err(Error::Parameter(format!("velocity is not divergence-free: ‖div v‖ = {div:.3e}")));
    }
    let phys: Vec<_> = v.iter().map(SpectralField::inverse).collect();
    let vmax = vector_lp_norm(&phys, f64::INFINITY)?;
    let number = vmax * dt / grid.min_spacing();
    if number > opts.cfl_limit {
        return Err(Error::Cfl { number, limit: opts.cfl_limit });
    }
    Ok(())
}

struct Rhs<'a> {
    v: Velocity<'a>,
    g: Option<Source<'a>>,
    opts: &'a TransportOptions,
    dt: f64,
}

impl Rhs<'_> {
    /// `−(v·∇a) + g` with the 2/3 rule on the advection product.
    fn eval(&self, a: &SpectralField, t: f64) -> Result<SpectralField> {
        let v = (self.v)(t)?;
        check_velocity(&v, a, self.opts, self.dt)?;
        let mut out = advective_derivative(&v, a, ProductRule::Dealiased23)?.scale(-1.0);
        if let Some(g) = self.g {
            out.axpy(1.0, &g(t)?)?;
        }
        Ok(out)
    }
}

fn combine(terms: &[(f64, &SpectralField)]) -> Result<SpectralField> {
    let mut out = SpectralField::zeros(*terms[0].1.grid());
    for (c, f) in terms {
        out.axpy(*c, f)?;
    }
    Ok(out)
}

/// One SSP-RK3 step of `∂_t a + v·∇a = 0` with `v` frozen over the step.
pub fn transport_step(a: &SpectralField, v: &[SpectralField], dt: f64) -> Result<SpectralField> {
    let f = |x: &SpectralField| -> Result<SpectralField> { Ok(advective_derivative(v, x, ProductRule::Dealiased23)?.scale(-1.0)) };
    let a1 = combine(&[(1.0, a), (dt, &f(a)?)])?;
    let a2 = combine(&[(0.75, a), (0.25, &a1), (0.25 * dt, &f(&a1)?)])?;
    combine(&[(1.0 / 3.0, a), (2.0 / 3.0, &a2), (2.0 / 3.0 * dt, &f(&a2)?)])
}

/// Solves `∂_t a + v·∇a = g` with SSP-RK3 and records block norms,
/// `V'` ingredients and scalar diagnostics along the way.
pub fn advect(a0: &SpectralField, v: Velocity<'_>, g: Option<Source<'_>>, opts: &TransportOptions) -> Result<TransportRun> {
    if !(opts.t_final >= 0.0) || !(opts.dt > 0.0) || opts.record_every == 0 {
        return Err(Error::Parameter(format!(
            "transport needs T >= 0, dt > 0 and record_every > 0, got T = {}, dt = {}",
            opts.t_final, opts.dt
        )));
    }
    let steps = step_count(opts.t_final, opts.dt);
    let dt = if steps == 0 { 0.0 } else { opts.t_final / steps as f64 };
    let rhs = Rhs { v, g, opts, dt };
    let mut run = TransportRun {
        a0: a0.clone(),
        a: a0.clone(),
        dt,
        steps,
        p1: opts.p1,
        acc: CheminLernerAccumulator::new(opts.p),
        source_acc: g.map(|_| CheminLernerAccumulator::new(opts.p)),
        grad_lows: Vec::new(),
        diagnostics: Vec::new(),
        snapshots: Vec::new(),
    };
    let record = |run: &mut TransportRun, t: f64| -> Result<()> {
        let a = &run.a;
        run.acc.record_blocks(t, block_norms(a, opts.p)?)?;
        if let (Some(acc), Some(g)) = (run.source_acc.as_mut(), g) {
            acc.record_blocks(t, block_norms(&g(t)?, opts.p)?)?;
        }
        if opts.record_velocity {
            run.grad_lows.push(low_gradient_norms(&v(t)?, opts.p1)?);
        }
        let phys = a.inverse();
        run.diagnostics.push(TransportDiagnostics {
            t,
            mean: phys.mean(),
            min: phys.min(),
            max: phys.max(),
            lp: phys.lp_norm(opts.p)?,
        });
        Ok(())
    };
    record(&mut run, 0.0)?;
    if opts.snapshot_every.is_some() {
        run.snapshots.push((0.0, a0.clone()));
    }
    for n in 0..steps {
        let t = n as f64 * dt;
        let a = &run.a;
        let a1 = combine(&[(1.0, a), (dt, &rhs.eval(a, t)?)])?;
        let a2 = combine(&[(0.75, a), (0.25, &a1), (0.25 * dt, &rhs.eval(&a1, t + dt)?)])?;
        let next = combine(&[(1.0 / 3.0, a), (2.0 / 3.0, &a2), (2.0 / 3.0 * dt, &rhs.eval(&a2, t + 0.5 * dt)?)])?;
        run.a = next;
        let t1 = (n + 1) as f64 * dt;
        if (n + 1) % opts.record_every == 0 || n + 1 == steps {
            record(&mut run, t1)?;
        }
        if let Some(k) = opts.snapshot_every {
            if k > 0 && ((n + 1) % k == 0 || n + 1 == steps) {
                run.snapshots.push((t1, run.a.clone()));
            }
        }
    }
    log::debug!("transport: {steps} steps of dt = {dt:.3e}");
    Ok(run)
}
