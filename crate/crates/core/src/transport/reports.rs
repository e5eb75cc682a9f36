use serde::{Deserialize, Serialize};

use super::advect::{cumulative, TransportRun};
use crate::error::{Error, Result};
use crate::inequality::InequalitySample;
use crate::lp::{block_norms, time_norm, CheminLernerAccumulator};

const INF: f64 = f64::INFINITY;

fn conj(p: f64) -> f64 {
    if p == 1.0 {
        INF
    } else {
        p / (p - 1.0)
    }
}

/// Indices of the limited-loss estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitedLossIndices {
    pub sigma: f64,
    pub eps: f64,
    #[serde(with = "crate::harness::extended")]
    pub p: f64,
    #[serde(with = "crate::harness::extended")]
    pub p1: f64,
    pub alpha: f64,
}

impl LimitedLossIndices {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        if !(self.eps > 0.0) {
            return Err(Error::Parameter(format!("loss epsilon must be positive, got {}", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!("limited loss needs 0 < alpha < 1, got {}", self.alpha)));
        }
        if !(1.0 <= self.p && self.p <= self.p1) {
            return Err(Error::Parameter(format!("limited loss needs 1 <= p <= p1, got p = {}, p1 = {}", self.p, self.p1)));
        }
        let lo = -1.0 - n * (1.0 / self.p1).min(1.0 / conj(self.p));
        if !(self.sigma > lo) {
            return Err(Error::Parameter(format!(
                "limited loss needs sigma > -1 - N min(1/p1, 1/p') = {lo}, got {}",
                self.sigma
            )));
        }
        if !(self.sigma < 1.0 + n / self.p1) {
            return Err(Error::Parameter(format!(
                "limited loss needs sigma < 1 + N/p1 = {}, got {}",
                1.0 + n / self.p1,
                self.sigma
            )));
        }
        Ok(())
    }

    /// `exp(c ε^{−α/(1−α)} V^{1/(1−α)})`.
    pub fn growth(&self, v: f64, c: f64) -> f64 {
        let a = self.alpha;
        (c * self.eps.powf(-a / (1.0 - a)) * v.powf(1.0 / (1.0 - a))).exp()
    }
}

fn check_velocity_records(run: &TransportRun) -> Result<()> {
    if run.grad_lows.len() != run.times().len() {
        return Err(Error::State("transport run did not record the velocity functionals".into()));
    }
    Ok(())
}

fn check_run(run: &TransportRun, p: f64, p1: f64) -> Result<()> {
    check_velocity_records(run)?;
    if run.acc.p() != p {
        return Err(Error::Parameter(format!("run recorded L^{} block norms, report asks for L^{p}", run.acc.p())));
    }
    if run.p1 != p1 {
        return Err(Error::Parameter(format!("run recorded V' with p1 = {}, report asks for p1 = {p1}", run.p1)));
    }
    Ok(())
}

/// `‖a_0‖_{B^σ_{p,∞}} + ‖g‖_{L̃^1_T(B^σ_{p,∞})}`.
fn data_norm(run: &TransportRun, sigma: f64, p: f64) -> Result<f64> {
    let a0 = block_norms(&run.a0, p)?.besov(sigma, INF);
    let g = match &run.source_acc {
        Some(acc) => acc.norm(sigma, INF, 1.0)?,
        None => 0.0,
    };
    Ok(a0 + g)
}

/// `‖a‖_{L̃^∞_T(B^{σ−ε}_{p,∞})}` against
/// `(‖a_0‖_{B^σ_{p,∞}} + ‖g‖_{L̃^1_T(B^σ_{p,∞})}) exp(c ε^{−α/(1−α)} V_{p1,α}(T)^{1/(1−α)})`,
/// where `c` is the constant inside the exponential.
pub fn limited_loss_report(run: &TransportRun, idx: &LimitedLossIndices, c: f64) -> Result<InequalitySample> {
    idx.validate(run.a0.grid().dim())?;
    check_run(run, idx.p, idx.p1)?;
    let lhs = run.acc.norm(idx.sigma - idx.eps, INF, INF)?;
    let v = run.v_prime_integral(idx.alpha).last().copied().unwrap_or(0.0);
    let rhs = data_norm(run, idx.sigma, idx.p)? * idx.growth(v, c);
    Ok(InequalitySample::new(lhs, rhs))
}

/// High-frequency variant:
/// `Σ_{l≥m} 2^{(σ−ε)l}‖Δ_l a‖_{L^∞_T(L^p)}` against
/// `Σ_{l≥m} 2^{σl}‖Δ_l a_0‖_{L^p} + η^{α/(1−α)} ∫_0^T V'(t)(data) exp(c ε^{..} V(t)^{1/(1−α)}) dt`.
pub fn high_frequency_report(
    run: &TransportRun,
    idx: &LimitedLossIndices,
    m: i32,
    eta: f64,
    c: f64,
) -> Result<InequalitySample> {
    idx.validate(run.a0.grid().dim())?;
    check_run(run, idx.p, idx.p1)?;
    if !(eta > 0.0) {
        return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
    }
    let lhs = run.acc.tail_norm(idx.sigma - idx.eps, 1.0, INF, m)?;
    let head = block_norms(&run.a0, idx.p)?.tail(idx.sigma, 1.0, m);
    let data = data_norm(run, idx.sigma, idx.p)?;
    let vp = run.v_prime_series(idx.alpha);
    let vi = run.v_prime_integral(idx.alpha);
    let integrand: Vec<f64> = vp.iter().zip(&vi).map(|(d, v)| d * data * idx.growth(*v, c)).collect();
    let integral = time_norm(run.times(), &integrand, 1.0);
    let rhs = head + eta.powf(idx.alpha / (1.0 - idx.alpha)) * integral;
    Ok(InequalitySample::new(lhs, rhs))
}

/// `σ_t = σ − λ∫_0^t (V'_{p1,1} + W)`, valid while `σ_t ≥ s1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSchedule {
    pub sigma: f64,
    pub lambda: f64,
    /// The floor `s1`.
    pub floor: f64,
    /// Samples of `W` at the run's record times; empty means `W = 0`.
    #[serde(default)]
    pub w: Vec<f64>,
}

impl LossSchedule {
    pub fn new(sigma: f64, lambda: f64, floor: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!("loss slope lambda must be positive, got {lambda}")));
        }
        if !(sigma > floor) {
            return Err(Error::Parameter(format!("initial index {sigma} must exceed the floor {floor}")));
        }
        Ok(Self { sigma, lambda, floor, w: Vec::new() })
    }

    pub fn with_w(mut self, w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Parameter("W must be nonnegative".into()));
        }
        self.w = w;
        Ok(self)
    }

    fn w_at(&self, i: usize) -> f64 {
        self.w.get(i).copied().unwrap_or(0.0)
    }

    /// `σ_t` at `times` given `V'_{p1,1}` samples; errors at the first time
    /// the floor is breached.
    pub fn indices(&self, times: &[f64], v_prime: &[f64]) -> Result<Vec<f64>> {
        if !self.w.is_empty() && self.w.len() != times.len() {
            return Err(Error::Shape(format!("{} W samples for {} times", self.w.len(), times.len())));
        }
        let rate: Vec<f64> = v_prime.iter().enumerate().map(|(i, v)| v + self.w_at(i)).collect();
        let integral = cumulative(times, &rate);
        let mut out = Vec::with_capacity(times.len());
        for (t, i) in times.iter().zip(integral) {
            let s = self.sigma - self.lambda * i;
            if s < self.floor {
                return Err(Error::ScheduleExhausted { time: *t, sigma: s, floor: self.floor });
            }
            out.push(s);
        }
        Ok(out)
    }
}

/// Source split for the linear-loss estimate; both accumulators must share
/// the run's record times.
#[derive(Clone, Copy, Debug, Default)]
pub struct SourceSplit<'a> {
    pub g1: Option<&'a CheminLernerAccumulator>,
    pub g2: Option<&'a CheminLernerAccumulator>,
}

#[derive(Clone, Debug)]
pub struct LinearLossReport {
    pub sigma_t: Vec<f64>,
    pub sample: InequalitySample,
}

/// `sup_t ‖a(t)‖_{B^{σ_t}_{p,∞}}` (or with `m`, `sup_t Σ_{l≥m} 2^{lσ_t}‖Δ_l a(t)‖`)
/// against `λ/(λ−C)(‖a_0‖_{B^σ_{p,∞}} + ∫_0^T ‖g_1‖_{B^σ_{p,∞}})`.
pub fn linear_loss_report(
    run: &TransportRun,
    schedule: &LossSchedule,
    c: f64,
    split: SourceSplit<'_>,
    m: Option<i32>,
) -> Result<LinearLossReport> {
    if !(schedule.lambda > c) {
        return Err(Error::Parameter(format!(
            "linear loss needs lambda > C, got lambda = {}, C = {c}",
            schedule.lambda
        )));
    }
    check_velocity_records(run)?;
    let times = run.times();
    let sigma_t = schedule.indices(times, &run.v_prime_series(1.0))?;
    let p = run.acc.p();
    for acc in [split.g1, split.g2].into_iter().flatten() {
        if acc.times() != times || acc.p() != p {
            return Err(Error::Shape("source records must share the run's times and exponent".into()));
        }
    }
    if let Some(g2) = split.g2 {
        for (i, rec) in g2.records().iter().enumerate() {
            let st = sigma_t[i];
            let a_norm = run.acc.snapshot_norm(i, st, INF)?;
            for (b, n) in rec.iter().enumerate() {
                let j = b as f64 - 1.0;
                let bound = 2f64.powf(-j * st) * (2.0 + j) * schedule.w_at(i) * a_norm;
                if *n > bound * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::Parameter(format!(
                        "g2 block bound violated at t = {}, j = {j}: {n:e} > {bound:e}",
                        times[i]
                    )));
                }
            }
        }
    }
    let mut lhs: f64 = 0.0;
    for (i, st) in sigma_t.iter().enumerate() {
        let v = match m {
            Some(m) => run.acc.snapshot_tail(i, *st, 1.0, m)?,
            None => run.acc.snapshot_norm(i, *st, INF)?,
        };
        lhs = lhs.max(v);
    }
    let g1 = match split.g1 {
        Some(acc) => acc.plain_norm(schedule.sigma, INF, 1.0)?,
        None => 0.0,
    };
    let data = block_norms(&run.a0, p)?.besov(schedule.sigma, INF) + g1;
    let rhs = schedule.lambda / (schedule.lambda - c) * data;
    Ok(LinearLossReport { sigma_t, sample: InequalitySample::new(lhs, rhs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{RealField, SpectralField, TorusGrid};
    use crate::transport::{advect, frozen, TransportOptions};

    fn still_run(p1: f64, with_source: bool) -> TransportRun {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let v = frozen(vec![SpectralField::zeros(g), SpectralField::zeros(g)]);
        let a0 = RealField::from_fn(g, |x| x[0].cos() + 0.2 * (5.0 * x[1]).sin()).transform();
        let src = move |_: f64| Ok(RealField::from_fn(g, |x| 0.1 * (3.0 * x[0]).cos()).transform());
        let opts = TransportOptions { t_final: 0.2, dt: 0.05, p1, ..Default::default() };
        advect(&a0, &v, if with_source { Some(&src) } else { None }, &opts).unwrap()
    }

    #[test]
    fn no_loss_without_velocity() {
        let run = still_run(INF, false);
        let idx = LimitedLossIndices { sigma: 0.5, eps: 0.1, p: 2.0, p1: INF, alpha: 0.5 };
        let smp = limited_loss_report(&run, &idx, 1.0).unwrap();
        let a0 = block_norms(&run.a0, 2.0).unwrap().besov(0.5, INF);
        assert!((smp.rhs - a0).abs() < 1e-14 * a0);
        // only the block l = -1 gains from lowering the index: 2^{ε}
        assert!(smp.ratio().unwrap() <= 2f64.powf(idx.eps));
        let hf = high_frequency_report(&run, &idx, 1, 1.0, 1.0).unwrap();
        assert!(hf.ratio().unwrap() <= 1.0);
    }

    #[test]
    fn source_enters_the_data_norm() {
        let run = still_run(INF, true);
        let idx = LimitedLossIndices { sigma: 0.5, eps: 0.1, p: 2.0, p1: INF, alpha: 0.5 };
        let smp = limited_loss_report(&run, &idx, 1.0).unwrap();
        let a0 = block_norms(&run.a0, 2.0).unwrap().besov(0.5, INF);
        let g = run.source_acc.as_ref().unwrap().norm(0.5, INF, 1.0).unwrap();
        assert!(g > 0.0);
        assert!((smp.rhs - a0 - g).abs() < 1e-14 * smp.rhs);
        assert!(smp.ratio().unwrap() <= 2f64.powf(idx.eps));
    }

    #[test]
    fn index_constraints() {
        let ok = LimitedLossIndices { sigma: 0.5, eps: 0.1, p: 2.0, p1: INF, alpha: 0.5 };
        assert!(ok.validate(2).is_ok());
        assert!(LimitedLossIndices { sigma: 1.0, ..ok }.validate(2).is_err());
        assert!(LimitedLossIndices { sigma: -1.5, ..ok }.validate(2).is_err());
        assert!(LimitedLossIndices { p: 4.0, p1: 2.0, ..ok }.validate(2).is_err());
        assert!(LimitedLossIndices { eps: 0.0, ..ok }.validate(2).is_err());
        let run = still_run(INF, false);
        assert!(limited_loss_report(&run, &LimitedLossIndices { p1: 4.0, ..ok }, 1.0).is_err());
    }

    #[test]
    fn linear_loss_without_velocity() {
        let run = still_run(INF, false);
        let sch = LossSchedule::new(0.5, 4.0, 0.0).unwrap();
        let rep = linear_loss_report(&run, &sch, 1.0, SourceSplit::default(), None).unwrap();
        assert!(rep.sigma_t.iter().all(|s| *s == 0.5));
        assert!((rep.sample.ratio().unwrap() - 0.75).abs() < 1e-14);
        let tail = linear_loss_report(&run, &sch, 1.0, SourceSplit::default(), Some(2)).unwrap();
        assert!(tail.sample.lhs < rep.sample.lhs);
        assert!(linear_loss_report(&run, &sch, 4.0, SourceSplit::default(), None).is_err());
    }

    #[test]
    fn schedule_exhaustion_reports_time() {
        let sch = LossSchedule::new(0.5, 1.0, 0.0).unwrap();
        let times = [0.0, 0.1, 0.2, 0.3];
        let v = [2.0; 4];
        match sch.indices(&times, &v) {
            Err(Error::ScheduleExhausted { time, sigma, floor }) => {
                assert!((time - 0.3).abs() < 1e-15 && sigma < floor);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
        let s = sch.indices(&times[..3], &v[..3]).unwrap();
        assert!((s[2] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn g2_bound_is_enforced() {
        let run = still_run(INF, true);
        let g2 = run.source_acc.as_ref().unwrap();
        let sch = LossSchedule::new(0.5, 4.0, 0.0).unwrap();
        let split = SourceSplit { g1: None, g2: Some(g2) };
        assert!(matches!(linear_loss_report(&run, &sch, 1.0, split, None), Err(Error::Parameter(_))));
        let sch = LossSchedule::new(0.5, 1.5, 0.0).unwrap().with_w(vec![0.2; run.times().len()]).unwrap();
        let rep = linear_loss_report(&run, &sch, 1.0, split, None).unwrap();
        assert!((rep.sigma_t.last().unwrap() - (0.5 - 1.5 * 0.2 * 0.2)).abs() < 1e-12);
    }
}
