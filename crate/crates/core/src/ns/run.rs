use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{partial_sum, PartitionOfUnity};
use crate::spectral::ops::{divergence, strain_tensor};
use crate::spectral::SpectralField;

use super::config::{MonitorPolicy, SolverConfig};
use super::monitor::{Breach, BootstrapMonitor};
use super::state::SolverState;
use super::step::{Forcing, Stepper};

/// Energy balance at one time:
/// `residual = (E(t) + ∫₀ᵗ D − E(0) − ∫₀ᵗ W) / E(0)` with `E = ‖√ρ u‖²`,
/// `D = 4μ‖Du‖²` and `W = 2∫ρ f·u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub work: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureRecord {
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
    pub contraction: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: usize,
    /// Data after smoothing.
    pub a0: SpectralField,
    pub u0: Vec<SpectralField>,
    pub f: Vec<SpectralField>,
    pub state: SolverState,
    pub energy: Vec<EnergyRecord>,
    pub pressure: Vec<PressureRecord>,
    pub snapshots: Vec<SolverState>,
    pub monitor: Option<BootstrapMonitor>,
    pub breaches: Vec<Breach>,
}

impl Trajectory {
    pub fn final_energy_residual(&self) -> f64 {
        self.energy.last().map(|e| e.residual).unwrap_or(0.0)
    }
}

/// Running integral of uniformly spaced samples: Simpson on pairs of
/// intervals, the three-point end correction on the odd one.
pub(crate) fn cumulative_simpson(h: f64, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for i in 1..f.len() {
        out[i] = if i == 1 {
            if f.len() > 2 {
                out[0] + h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
            } else {
                0.5 * h * (f[0] + f[1])
            }
        } else if i % 2 == 0 {
            out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i])
        } else {
            out[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i])
        };
    }
    out
}

fn dissipation(state: &SolverState, mu: f64) -> Result<f64> {
    let d = strain_tensor(&state.u()?)?;
    let vol = state.grid().volume();
    Ok(4.0 * mu * d.iter().flatten().map(|c| c.energy() * vol).sum::<f64>())
}

fn work(state: &SolverState, f: &[SpectralField]) -> Result<f64> {
    if f.iter().all(|c| c.max_abs_coeff() == 0.0) {
        return Ok(0.0);
    }
    let a = state.a_field();
    let u: Vec<_> = state.u()?.iter().map(SpectralField::inverse).collect();
    let fp: Vec<_> = f.iter().map(SpectralField::inverse).collect();
    let n = a.values().len();
    let mut s = 0.0;
    for i in 0..n {
        let dot: f64 = u.iter().zip(&fp).map(|(x, y)| x.values()[i] * y.values()[i]).sum();
        s += dot / (1.0 + a.values()[i]);
    }
    Ok(2.0 * s / n as f64 * state.grid().volume())
}

fn check_data(a0: &SpectralField, u0: &[SpectralField], cfg: &SolverConfig) -> Result<()> {
    let grid = cfg.grid()?;
    if *a0.grid() != grid {
        return Err(Error::Shape("density does not live on the configured grid".into()));
    }
    let scale = u0.iter().map(|c| c.max_abs_coeff()).fold(0.0, f64::max) * grid.wavenumbers().kmax();
    let div = divergence(u0)?.max_abs_coeff();
    if div > cfg.divergence_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Parameter(format!("initial velocity is not divergence-free: max|div û₀| = {div:.3e}")));
    }
    if !(1.0 + a0.inverse().min() > 0.0) {
        return Err(Error::Parameter("1 + a₀ must be bounded away from zero".into()));
    }
    Ok(())
}

fn check_density(state: &SolverState, b_lower: f64) -> Result<()> {
    let min_b = 1.0 + state.a_field().min();
    if min_b < 0.5 * b_lower {
        return Err(Error::DensityBound { time: state.t, min_b, bound: 0.5 * b_lower });
    }
    Ok(())
}

/// Time-steps the reformulated density-dependent system from `(a₀, u₀)`
/// with time-independent forcing `f`, monitoring the energy balance and the
/// bootstrap conditions.
pub fn run(a0: &SpectralField, u0: &[SpectralField], f: &[SpectralField], cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let (a0, u0, f) = match cfg.smoothing {
        Some(n) => {
            let pou = PartitionOfUnity::default();
            let s = |x: &SpectralField| partial_sum(x, &pou, n);
            (s(a0), u0.iter().map(s).collect::<Vec<_>>(), f.iter().map(s).collect::<Vec<_>>())
        }
        None => (a0.clone(), u0.to_vec(), f.to_vec()),
    };
    check_data(&a0, &u0, cfg)?;
    let (steps, dt) = cfg.steps();
    let forcing = Forcing::new(&f)?;
    let stepper = Stepper::new(cfg, &forcing);
    let mut state = SolverState::initial(&a0, &u0, &f)?;
    let b_lower = 1.0 + a0.inverse().min();
    let mut monitor = if cfg.monitor.enabled {
        Some(BootstrapMonitor::new(&cfg.monitor, cfg.mu, cfg.t_final, &a0, &u0, &f)?)
    } else {
        None
    };
    let mut traj = Trajectory {
        dt,
        steps,
        a0: a0.clone(),
        u0: u0.clone(),
        f: f.clone(),
        state: state.clone(),
        energy: Vec::new(),
        pressure: Vec::new(),
        snapshots: Vec::new(),
        monitor: None,
        breaches: Vec::new(),
    };
    let (mut es, mut ds, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..=steps {
        let k1 = stepper.eval(&state.a, &state.u_l, &state.u_tilde)?;
        state.grad_pi_tilde = k1.grad_pi_tilde.clone();
        traj.pressure.push(PressureRecord {
            t: state.t,
            iterations: k1.pressure_iterations,
            residual: k1.pressure_residual,
            contraction: k1.pressure_contraction,
        });

        es.push(state.kinetic_energy()?);
        ds.push(dissipation(&state, cfg.mu)?);
        ws.push(work(&state, &f)?);
        let di = cumulative_simpson(dt, &ds);
        let wi = cumulative_simpson(dt, &ws);
        let last = es.len() - 1;
        let scale = if es[0] > 0.0 { es[0] } else { 1.0 };
        traj.energy.push(EnergyRecord {
            t: state.t,
            energy: es[last],
            dissipation: ds[last],
            work: ws[last],
            residual: (es[last] + di[last] - es[0] - wi[last]) / scale,
        });

        let at_end = n == steps;
        if let Some(mon) = monitor.as_mut() {
            if n % cfg.record_every == 0 || at_end {
                let now = mon.observe(&state, &k1.h)?;
                for b in &now {
                    let first = !mon.breaches.iter().any(|x| x.condition == b.condition && x.t < b.t);
                    let level = if first { log::Level::Warn } else { log::Level::Debug };
                    log::log!(level, "t = {:.6}: {} breached ({:.3e} > {:.3e})", b.t, b.condition, b.lhs, b.rhs);
                    if let Some(s) = &b.suggestion {
                        log::log!(level, "{s}");
                    }
                }
                if let (MonitorPolicy::Abort, Some(b)) = (cfg.monitor.policy, now.first()) {
                    return Err(Error::MonitorBreach {
                        condition: b.condition.clone(),
                        time: b.t,
                        detail: match &b.suggestion {
                            Some(s) => format!("{:.6e} > {:.6e}; {s}", b.lhs, b.rhs),
                            None => format!("{:.6e} > {:.6e}", b.lhs, b.rhs),
                        },
                    });
                }
            }
        }
        if let Some(k) = cfg.snapshot_every {
            if n % k == 0 || at_end {
                traj.snapshots.push(state.clone());
            }
        }
        if at_end {
            break;
        }

        let number = stepper.cfl_number(&state.u()?, dt)?;
        if number > cfg.cfl_limit {
            return Err(Error::Cfl { number, limit: cfg.cfl_limit });
        }
        state = stepper.step(&state, Some(k1), dt)?;
        // the step ends on an exact multiple of dt
        state.t = (n + 1) as f64 * dt;
        check_density(&state, b_lower)?;
        let defect = state.divergence_defect()?;
        if defect > cfg.divergence_tol {
            return Err(Error::DivergenceDefect { time: state.t, defect });
        }
    }
    log::debug!("navier-stokes: {steps} steps of dt = {dt:.3e}");
    traj.breaches = monitor.as_ref().map(|m| m.breaches.clone()).unwrap_or_default();
    traj.monitor = monitor;
    traj.state = state;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ns::data::{ModeTerm, ScalarFamily, VectorFamily};
    use crate::ns::state::zeros;
    use crate::spectral::{GridSpec, TorusGrid};

    fn cfg(n: usize, dt: f64, t: f64) -> SolverConfig {
        SolverConfig { grid: GridSpec { sizes: vec![n, n], periods: None }, dt, t_final: t, ..Default::default() }
    }

    #[test]
    fn simpson_integrates_quadratics_exactly() {
        let h = 0.1;
        let f: Vec<f64> = (0..8).map(|i| 3.0 * (i as f64 * h).powi(2) - 2.0).collect();
        let c = cumulative_simpson(h, &f);
        for (i, v) in c.iter().enumerate() {
            let t = i as f64 * h;
            let exact = t.powi(3) - 2.0 * t;
            assert!((v - exact).abs() < 1e-14, "{i}: {v} vs {exact}");
        }
    }

    #[test]
    fn no_flow_freezes_density() {
        let c = cfg(32, 0.05, 0.25);
        let g = c.grid().unwrap();
        let a0 = ScalarFamily::Bump { amp: 0.5, width: 0.7 }.build(g).unwrap();
        let tr = run(&a0, &zeros(g), &zeros(g), &c).unwrap();
        assert_eq!(tr.state.a, a0);
        assert!(tr.state.u().unwrap().iter().all(|x| x.max_abs_coeff() == 0.0));
        assert!(tr.energy.iter().all(|e| e.energy == 0.0 && e.residual == 0.0));
    }

    #[test]
    fn momentum_is_conserved_and_energy_decreases() {
        let c = cfg(32, 0.02, 0.3);
        let g = c.grid().unwrap();
        let a0 = ScalarFamily::Modes { terms: vec![ModeTerm { amp: 0.2, k: vec![1, 2], phase: 0.0 }] }.build(g).unwrap();
        let u0 = VectorFamily::Random { amp: 1.0, seed: 7, kmax: 3, decay: 1.0 }.build(g).unwrap();
        let mut c2 = c.clone();
        c2.snapshot_every = Some(5);
        let tr = run(&a0, &u0, &zeros(g), &c2).unwrap();
        let m0 = tr.snapshots[0].momentum().unwrap();
        for s in &tr.snapshots {
            let m = s.momentum().unwrap();
            for (x, y) in m.iter().zip(&m0) {
                assert!((x - y).abs() < 1e-6, "momentum drift {x} vs {y}");
            }
        }
        assert!(tr.energy.windows(2).all(|w| w[1].energy < w[0].energy));
        assert!(tr.final_energy_residual().abs() < 1e-4);
        assert!(tr.pressure.iter().all(|p| p.residual <= 1e-10));
    }

    #[test]
    fn velocity_mean_is_constant_without_density() {
        let c = cfg(32, 0.02, 0.2);
        let g = c.grid().unwrap();
        let mut u0 = VectorFamily::Random { amp: 1.0, seed: 2, kmax: 3, decay: 1.0 }.build(g).unwrap();
        u0[0].set_mode([0, 0, 0], num_complex::Complex64::new(0.3, 0.0));
        let tr = run(&SpectralField::zeros(g), &u0, &zeros(g), &c).unwrap();
        let u = tr.state.u().unwrap();
        assert!((u[0].mean() - 0.3).abs() < 1e-14);
        assert!(u[1].mean().abs() < 1e-14);
    }

    #[test]
    fn density_bound_is_half_the_initial_infimum() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let a = ScalarFamily::Constant { value: -0.6 }.build(g).unwrap();
        let st = SolverState::initial(&a, &zeros(g), &zeros(g)).unwrap();
        assert!(check_density(&st, 0.8).is_ok());
        match check_density(&st, 0.9) {
            Err(Error::DensityBound { min_b, bound, .. }) => assert!(min_b < bound && (bound - 0.45).abs() < 1e-15),
            other => panic!("expected a density abort, got {other:?}"),
        }
    }

    #[test]
    fn smoothing_truncates_data() {
        let mut c = cfg(32, 0.05, 0.05);
        c.smoothing = Some(1);
        let g: TorusGrid = c.grid().unwrap();
        let a0 = ScalarFamily::Modes { terms: vec![ModeTerm { amp: 0.1, k: vec![9, 0], phase: 0.0 }] }.build(g).unwrap();
        let tr = run(&a0, &zeros(g), &zeros(g), &c).unwrap();
        assert!(tr.a0.max_abs_coeff() < 1e-15);
    }
}
