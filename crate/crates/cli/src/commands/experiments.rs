//! `verify`, `stability` and `scaling-check`.

use anyhow::{bail, Result};
use densflow::harness::{run_suite, SuiteConfig};
use densflow::ns::{log_log_slope, scaling_check, stability_experiment, InitialData, ScalarFamily, SolverConfig, VectorFamily};
use densflow::spectral::GridSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::solve::NsConfig;
use super::Outcome;
use crate::rundir::{num, RunDir};
use crate::svg::{Plot, Series};

pub fn verify(cfg: &SuiteConfig, out: &mut RunDir) -> Result<Outcome> {
    let res = run_suite(cfg)?;
    res.write_csv(out.file("reports.csv")?)?;
    out.json("summary.json", &res.summary_json())?;
    let mut w = out.csv("constants.csv", &["law_id", "resolution", "c_emp", "stability", "skipped"])?;
    for r in &res.reports {
        w.write_record([
            r.law.clone(),
            r.resolution.to_string(),
            num(r.c_emp),
            r.stability.map(num).unwrap_or_default(),
            r.skipped.to_string(),
        ])?;
    }
    w.flush()?;
    let lines: Vec<String> = res
        .summary
        .iter()
        .map(|s| {
            let mut line = format!("{} {}", if s.pass { "PASS" } else { "FAIL" }, s.law);
            if !s.reasons.is_empty() {
                line += &format!(" ({})", s.reasons.join("; "));
            }
            line
        })
        .collect();
    let text = lines.join("\n");
    Ok(if res.pass { Outcome::pass(text) } else { Outcome::fail(text) })
}

/// Direction of the initial perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub density: ScalarFamily,
    pub velocity: VectorFamily,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            density: ScalarFamily::Random { amp: 1.0, seed: 1, kmax: 4, decay: 1.0 },
            velocity: VectorFamily::Random { amp: 1.0, seed: 2, kmax: 4, decay: 1.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub solver: SolverConfig,
    pub data: InitialData,
    pub perturbation: Perturbation,
    pub deltas: Vec<f64>,
    /// Admissible distance of the log-log slope from one.
    pub slope_tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let base = NsConfig::default();
        Self {
            solver: SolverConfig {
                grid: GridSpec { sizes: vec![32, 32], periods: None },
                t_final: 0.2,
                record_every: 5,
                ..base.solver
            },
            data: base.data,
            perturbation: Perturbation::default(),
            deltas: vec![1e-2, 1e-3, 1e-4],
            slope_tol: 0.1,
        }
    }
}

pub fn stability(cfg: &StabilityConfig, out: &mut RunDir) -> Result<Outcome> {
    cfg.solver.validate()?;
    if cfg.deltas.len() < 2 || cfg.deltas.iter().any(|d| !(*d > 0.0)) {
        bail!("stability needs at least two positive perturbation sizes, got {:?}", cfg.deltas);
    }
    let grid = cfg.solver.grid()?;
    let d = cfg.data.build(grid)?;
    let da = cfg.perturbation.density.build(grid)?;
    let du = cfg.perturbation.velocity.build(grid)?;
    let mut reports = Vec::new();
    for &delta in &cfg.deltas {
        log::info!("stability run with delta = {delta:e}");
        reports.push(stability_experiment(&d.a0, &d.u0, &d.f, (&da, &du), delta, &cfg.solver)?);
    }
    let mut w = out.csv("stability.csv", &["delta", "t", "da", "du", "dgrad_pi"])?;
    for r in &reports {
        for s in &r.samples {
            w.write_record([num(r.delta), num(s.t), num(s.da), num(s.du), num(s.dgrad_pi)])?;
        }
    }
    w.flush()?;
    let deltas: Vec<f64> = reports.iter().map(|r| r.delta).collect();
    let terminal: Vec<f64> = reports.iter().map(|r| r.terminal_du).collect();
    let slope = log_log_slope(&deltas, &terminal)?;
    let pass = (slope - 1.0).abs() <= cfg.slope_tol;
    out.json(
        "stability.json",
        &json!({
            "slope": slope,
            "slope_tol": cfg.slope_tol,
            "pass": pass,
            "runs": reports.iter().map(|r| json!({
                "delta": r.delta,
                "initial": r.initial,
                "constant": r.constant,
                "terminal_du": r.terminal_du,
                "da_norm": r.da_norm,
                "du_norm": r.du_norm,
                "dgrad_pi_norm": r.dgrad_pi_norm,
            })).collect::<Vec<_>>(),
        }),
    )?;
    let mut plot = Plot::new("difference of solutions", "t", "|δu|", true);
    for r in &reports {
        plot = plot.with(Series::new(format!("δ = {:e}", r.delta), r.samples.iter().map(|s| (s.t, s.du)).collect()));
    }
    out.svg("stability.svg", &plot)?;
    let text = format!("terminal |δu| against δ has log-log slope {slope:.4}");
    Ok(if pass { Outcome::pass(text) } else { Outcome::fail(text) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub solver: SolverConfig,
    pub data: InitialData,
    pub l: f64,
    pub tol: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        let base = NsConfig::default();
        Self {
            solver: SolverConfig { t_final: 0.1, ..base.solver },
            data: base.data,
            l: 2.0,
            tol: 1e-10,
        }
    }
}

pub fn scaling(cfg: &ScalingConfig, out: &mut RunDir) -> Result<Outcome> {
    cfg.solver.validate()?;
    let rep = scaling_check(&cfg.solver, &cfg.data, cfg.l, cfg.tol)?;
    out.json("scaling.json", &rep)?;
    let text = format!(
        "l = {}: max errors a {:e}, u {:e}, grad pi {:e} (tol {:e})",
        rep.l, rep.err_a, rep.err_u, rep.err_grad_pi, rep.tol
    );
    Ok(if rep.pass { Outcome::pass(text) } else { Outcome::fail(text) })
}
