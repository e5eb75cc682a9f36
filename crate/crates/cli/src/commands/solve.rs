//! `solve-elliptic`, `solve-transport` and `solve-ns`.

use anyhow::Result;
use densflow::elliptic::{elliptic_estimate_check, solve_pressure, CoefficientField, EllipticIndices, PressureOptions};
use densflow::io::{write_monitors_csv, write_snapshot, write_state, write_trajectory, SnapshotFormat};
use densflow::ns::{run, InitialData, ModeTerm, ScalarFamily, SolverConfig, VectorFamily};
use densflow::spectral::ops::gradient;
use densflow::spectral::{GridSpec, RealField, SpectralField, TorusGrid};
use densflow::transport::{advect, frozen, limited_loss_report, LimitedLossIndices, TransportOptions};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Outcome;
use crate::rundir::{num, RunDir};
use crate::svg::{Plot, Series};

fn grid64() -> GridSpec {
    GridSpec { sizes: vec![64, 64], periods: None }
}

fn cos_mode(amp: f64) -> ScalarFamily {
    ScalarFamily::Modes { terms: vec![ModeTerm { amp, k: vec![1, 0], phase: 0.0 }] }
}

/// `div((1+a)∇Π) = div F` with `F = ∇φ + w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticConfig {
    pub grid: GridSpec,
    pub coefficient: ScalarFamily,
    /// `φ`.
    pub potential: ScalarFamily,
    /// `w`; drops out of the pressure.
    pub solenoidal: VectorFamily,
    pub pressure: PressureOptions,
    /// Evaluate the stationary estimate on the solution.
    pub estimate: Option<EllipticIndices>,
    pub format: SnapshotFormat,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        Self {
            grid: grid64(),
            coefficient: cos_mode(0.1),
            potential: ScalarFamily::Random { amp: 1.0, seed: 0, kmax: 8, decay: 1.0 },
            solenoidal: VectorFamily::Zero,
            pressure: PressureOptions::default(),
            estimate: None,
            format: SnapshotFormat::Bin,
        }
    }
}

pub fn solve_elliptic(cfg: &EllipticConfig, out: &mut RunDir) -> Result<Outcome> {
    let grid = TorusGrid::from_spec(&cfg.grid)?;
    if let Some(idx) = &cfg.estimate {
        idx.validate(grid.dim())?;
    }
    let coef = CoefficientField::from_spectral(&cfg.coefficient.build(grid)?)?;
    let w = cfg.solenoidal.build(grid)?;
    let f: Vec<SpectralField> = gradient(&cfg.potential.build(grid)?)
        .iter()
        .zip(&w)
        .map(|(g, w)| g.add(w))
        .collect::<densflow::Result<_>>()?;
    log::info!("coefficient bounds [{:.4}, {:.4}]", coef.lower_bound(), coef.upper_bound());
    let sol = solve_pressure(&coef, &f, &cfg.pressure)?;

    let mut log_csv = out.csv("solver_log.csv", &["iter", "residual", "contraction_estimate"])?;
    for r in &sol.history {
        log_csv.write_record([r.iter.to_string(), num(r.residual), num(r.contraction)])?;
    }
    log_csv.flush()?;
    let pi = sol.pi.inverse();
    let grads: Vec<RealField> = sol.grad.iter().map(SpectralField::inverse).collect();
    let names: Vec<String> = (0..grads.len()).map(|i| format!("grad_pi{i}")).collect();
    let mut fields: Vec<(&str, &RealField)> = vec![("pi", &pi)];
    fields.extend(names.iter().map(String::as_str).zip(&grads));
    write_snapshot(out.root(), "pressure", 0.0, &fields, cfg.format)?;
    out.path("pressure");
    let estimate = match &cfg.estimate {
        Some(idx) => {
            let s = elliptic_estimate_check(&coef, &f, &sol.grad, idx)?;
            Some(json!({ "lhs": s.lhs, "rhs": s.rhs, "ratio": s.ratio().ok() }))
        }
        None => None,
    };
    out.json(
        "elliptic.json",
        &json!({
            "iterations": sol.iterations,
            "residual": sol.residual,
            "contraction": sol.contraction(),
            "b_lower": coef.lower_bound(),
            "b_upper": coef.upper_bound(),
            "estimate": estimate,
        }),
    )?;
    let pts = sol.history.iter().map(|r| (r.iter as f64, r.residual)).collect();
    out.svg("residual.svg", &Plot::new("pressure fixed point", "iteration", "relative residual", true).with(Series::new("residual", pts)))?;
    Ok(Outcome::pass(format!(
        "converged in {} iterations, residual {:e}, contraction {:.4}",
        sol.iterations,
        sol.residual,
        sol.contraction()
    )))
}

/// `∂_t a + v·∇a = 0` with a time-independent `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub grid: GridSpec,
    pub density: ScalarFamily,
    pub velocity: VectorFamily,
    pub options: TransportOptions,
    /// Evaluate the limited-loss estimate on the run.
    pub loss: Option<LimitedLossIndices>,
    /// Constant inside the exponential of the loss estimate.
    pub loss_constant: f64,
    pub format: SnapshotFormat,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec { sizes: vec![128, 128], periods: None },
            density: ScalarFamily::Random { amp: 1.0, seed: 0, kmax: 8, decay: 1.0 },
            velocity: VectorFamily::TaylorGreen { amp: 1.0, k: 1 },
            options: TransportOptions::default(),
            loss: None,
            loss_constant: 1.0,
            format: SnapshotFormat::Bin,
        }
    }
}

pub fn solve_transport(cfg: &TransportConfig, out: &mut RunDir) -> Result<Outcome> {
    let grid = TorusGrid::from_spec(&cfg.grid)?;
    let mut opts = cfg.options;
    if let Some(idx) = &cfg.loss {
        idx.validate(grid.dim())?;
        opts.p = idx.p;
        opts.p1 = idx.p1;
        opts.record_velocity = true;
    }
    let a0 = cfg.density.build(grid)?;
    let v = frozen(cfg.velocity.build(grid)?);
    let run = advect(&a0, &v, None, &opts)?;

    let vint = match (&cfg.loss, opts.record_velocity) {
        (Some(idx), _) => Some(run.v_prime_integral(idx.alpha)),
        (None, true) => Some(run.v_prime_integral(0.5)),
        _ => None,
    };
    let mut w = out.csv("diagnostics.csv", &["t", "mean", "min", "max", "lp", "v_prime_integral"])?;
    for (i, d) in run.diagnostics.iter().enumerate() {
        let vi = vint.as_ref().map(|x| num(x[i])).unwrap_or_default();
        w.write_record([num(d.t), num(d.mean), num(d.min), num(d.max), num(d.lp), vi])?;
    }
    w.flush()?;
    let (first, last) = (run.diagnostics[0], *run.diagnostics.last().unwrap());
    let rel = |x: f64, y: f64| if y != 0.0 { (x - y).abs() / y.abs() } else { (x - y).abs() };
    let initial = a0.inverse();
    let fin = run.a.inverse();
    write_snapshot(out.root(), "initial", 0.0, &[("a", &initial)], cfg.format)?;
    write_snapshot(out.root(), "final", last.t, &[("a", &fin)], cfg.format)?;
    out.path("initial");
    out.path("final");
    if !run.snapshots.is_empty() {
        let dir = out.root().join("snapshots");
        for (i, (t, a)) in run.snapshots.iter().enumerate() {
            write_snapshot(&dir, &format!("a_{i:05}"), *t, &[("a", &a.inverse())], cfg.format)?;
        }
        out.path("snapshots");
    }
    let loss = match &cfg.loss {
        Some(idx) => {
            let s = limited_loss_report(&run, idx, cfg.loss_constant)?;
            Some(json!({ "lhs": s.lhs, "rhs": s.rhs, "ratio": s.ratio().ok() }))
        }
        None => None,
    };
    out.json(
        "transport.json",
        &json!({
            "steps": run.steps,
            "dt": run.dt,
            "mean_drift": (last.mean - first.mean).abs(),
            "lp_drift": rel(last.lp, first.lp),
            "max_drift": rel(last.max, first.max),
            "min_drift": rel(last.min, first.min),
            "loss": loss,
        }),
    )?;
    let lp: Vec<(f64, f64)> = run.diagnostics.iter().map(|d| (d.t, d.lp)).collect();
    let max: Vec<(f64, f64)> = run.diagnostics.iter().map(|d| (d.t, d.max)).collect();
    out.svg(
        "norms.svg",
        &Plot::new("transported density", "t", "norm", false).with(Series::new("L^p", lp)).with(Series::new("max", max)),
    )?;
    Ok(Outcome::pass(format!(
        "{} steps of dt = {:e}, relative L^p drift {:e}",
        run.steps,
        run.dt,
        rel(last.lp, first.lp)
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NsConfig {
    pub solver: SolverConfig,
    pub data: InitialData,
    pub format: SnapshotFormat,
    /// Write the trajectory store (the final state otherwise).
    pub trajectory: bool,
}

impl Default for NsConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            data: InitialData {
                density: cos_mode(0.1),
                velocity: VectorFamily::TaylorGreen { amp: 1.0, k: 1 },
                forcing: VectorFamily::Zero,
            },
            format: SnapshotFormat::Bin,
            trajectory: true,
        }
    }
}

pub fn solve_ns(cfg: &NsConfig, out: &mut RunDir) -> Result<Outcome> {
    cfg.solver.validate()?;
    let grid = cfg.solver.grid()?;
    let d = cfg.data.build(grid)?;
    let traj = run(&d.a0, &d.u0, &d.f, &cfg.solver)?;

    write_monitors_csv(&traj, out.file("monitors.csv")?)?;
    let mut w = out.csv("energy.csv", &["t", "energy", "dissipation", "work", "residual"])?;
    for e in &traj.energy {
        w.write_record([num(e.t), num(e.energy), num(e.dissipation), num(e.work), num(e.residual)])?;
    }
    w.flush()?;
    let mut w = out.csv("pressure.csv", &["t", "iterations", "residual", "contraction"])?;
    for p in &traj.pressure {
        w.write_record([num(p.t), p.iterations.to_string(), num(p.residual), num(p.contraction)])?;
    }
    w.flush()?;
    if cfg.trajectory {
        write_trajectory(&out.root().join("trajectory"), &traj, cfg.format)?;
        out.path("trajectory");
    } else {
        write_state(out.root(), "final", &traj.state, cfg.format)?;
        out.path("final");
    }
    let monitor = traj.monitor.as_ref();
    out.json(
        "breaches.json",
        &json!({
            "constants": monitor.map(|m| &m.constants),
            "breaches": traj.breaches,
            "derived": monitor.and_then(|m| m.rows.last()).map(|r| &r.derived),
        }),
    )?;
    let residual = traj.final_energy_residual();
    out.json(
        "ns.json",
        &json!({
            "steps": traj.steps,
            "dt": traj.dt,
            "t_final": traj.state.t,
            "energy_residual": residual,
            "breaches": traj.breaches.len(),
            "pressure_iterations_max": traj.pressure.iter().map(|p| p.iterations).max(),
        }),
    )?;
    let energy: Vec<(f64, f64)> = traj.energy.iter().map(|e| (e.t, e.energy)).collect();
    let resid: Vec<(f64, f64)> = traj.energy.iter().map(|e| (e.t, e.residual.abs())).collect();
    out.svg("energy.svg", &Plot::new("kinetic energy", "t", "|sqrt(rho) u|^2", false).with(Series::new("energy", energy)))?;
    out.svg("residual.svg", &Plot::new("energy identity", "t", "|relative residual|", true).with(Series::new("residual", resid)))?;
    if let Some(m) = monitor {
        let mut plot = Plot::new("bootstrap margins", "t", "1 - lhs/rhs", false);
        let names: Vec<String> = m.rows.first().map(|r| r.conditions.iter().map(|c| c.name.clone()).collect()).unwrap_or_default();
        for (i, name) in names.iter().enumerate() {
            let pts = m.rows.iter().map(|r| (r.t, r.conditions[i].margin())).collect();
            plot = plot.with(Series::new(name.clone(), pts));
        }
        out.svg("monitors.svg", &plot)?;
    }
    if !traj.breaches.is_empty() {
        let first = &traj.breaches[0];
        log::warn!("{} monitor breaches, first {} at t = {:.4}", traj.breaches.len(), first.condition, first.t);
    }
    Ok(Outcome::pass(format!(
        "{} steps of dt = {:e}, terminal energy residual {residual:e}, {} monitor breaches",
        traj.steps,
        traj.dt,
        traj.breaches.len()
    )))
}
