//! Sweeps of laws over random samples and resolutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use super::laws::{Law, LawKind};
use crate::error::{Error, Result};
use crate::spectral::ProductRule;

/// Samples needed before an empirical constant is estimated.
pub const MIN_SAMPLES: usize = 20;
/// Largest admissible share of degenerate samples.
pub const MAX_SKIPPED: f64 = 0.1;
pub const MAX_STABILITY: f64 = 2.0;

pub const REPORT_COLUMNS: [&str; 9] = ["sample_id", "law_id", "s", "p", "r", "lhs", "rhs", "ratio", "resolution"];

/// A law given by id (default indices) or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawEntry {
    Id(String),
    Full(Law),
}

impl LawEntry {
    pub fn resolve(&self) -> Result<Law> {
        match self {
            LawEntry::Id(id) => Law::from_id(id),
            LawEntry::Full(law) => Ok(law.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub laws: Vec<LawEntry>,
    pub samples: usize,
    /// Grid points per axis, coarse to fine.
    pub resolutions: Vec<usize>,
    pub dim: usize,
    pub seed: u64,
    /// Upper bound on every ratio of the inequality laws.
    pub ceiling: Option<f64>,
    pub rule: ProductRule,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            laws: Vec::new(),
            samples: 100,
            resolutions: vec![64, 128],
            dim: 2,
            seed: 0,
            ceiling: None,
            rule: ProductRule::Padded32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub law: String,
    /// `(s, p, r)` of the left-hand norm.
    pub indices: (f64, f64, f64),
    pub resolution: usize,
    pub samples: Vec<SampleRecord>,
    pub skipped: usize,
    /// Largest ratio.
    pub c_emp: f64,
    /// `C_emp` here over `C_emp` at the next coarser resolution.
    pub stability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawSummary {
    pub law: String,
    pub kind: LawKind,
    /// `(resolution, C_emp)` pairs.
    pub c_emp: Vec<(usize, f64)>,
    /// Largest factor between consecutive resolutions.
    pub stability: Option<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ceiling: Option<f64>,
    pub skipped: usize,
    pub valid: bool,
    pub pass: bool,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub config: SuiteConfig,
    pub reports: Vec<InequalityReport>,
    pub summary: Vec<LawSummary>,
    pub pass: bool,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<Vec<Law>> {
        if self.laws.is_empty() {
            return Err(Error::Parameter("suite lists no laws".into()));
        }
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Parameter(format!("suites run in dimension 2 or 3, got {}", self.dim)));
        }
        if self.samples == 0 {
            return Err(Error::Parameter("suite needs at least one sample".into()));
        }
        if self.resolutions.is_empty() || self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(format!("resolutions must be increasing and nonempty, got {:?}", self.resolutions)));
        }
        if let Some(c) = self.ceiling {
            if !(c > 0.0) {
                return Err(Error::Parameter(format!("ratio ceiling must be positive, got {c}")));
            }
        }
        let laws = self.laws.iter().map(LawEntry::resolve).collect::<Result<Vec<_>>>()?;
        for law in &laws {
            law.validate(self.dim)?;
            if law.kind() == LawKind::Inequality && self.samples < MIN_SAMPLES {
                return Err(Error::Parameter(format!(
                    "law {} needs at least {MIN_SAMPLES} samples to estimate its constant, got {}",
                    law.id(),
                    self.samples
                )));
            }
        }
        Ok(laws)
    }
}

fn sweep(law: &Law, cfg: &SuiteConfig, n: usize) -> Result<InequalityReport> {
    let outcomes: Vec<Result<Option<SampleRecord>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| match law.evaluate(cfg.dim, n, cfg.seed, i, cfg.rule).and_then(|s| Ok((s, s.ratio()?))) {
            Ok((s, ratio)) => Ok(Some(SampleRecord { index: i, lhs: s.lhs, rhs: s.rhs, ratio })),
            Err(Error::Degenerate(msg)) => {
                log::debug!("{} sample {i} at n = {n} skipped: {msg}", law.label());
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect();
    let mut samples = Vec::with_capacity(cfg.samples);
    for o in outcomes {
        if let Some(r) = o? {
            samples.push(r);
        }
    }
    let skipped = cfg.samples - samples.len();
    let c_emp = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(InequalityReport {
        law: law.label(),
        indices: law.indices(cfg.dim),
        resolution: n,
        samples,
        skipped,
        c_emp,
        stability: None,
    })
}

fn summarize(law: &Law, reports: &[InequalityReport], cfg: &SuiteConfig) -> LawSummary {
    let kind = law.kind();
    let ratios = || reports.iter().flat_map(|r| r.samples.iter().map(|s| s.ratio));
    let min_ratio = ratios().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios().fold(0.0, f64::max);
    let stability = reports.iter().filter_map(|r| r.stability).fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
    let skipped = reports.iter().map(|r| r.skipped).sum();
    let mut reasons = Vec::new();
    let valid = reports.iter().all(|r| (r.skipped as f64) <= MAX_SKIPPED * cfg.samples as f64);
    if !valid {
        reasons.push(format!("more than {}% of samples degenerate", MAX_SKIPPED * 100.0));
    }
    if ratios().any(|r| !r.is_finite() || r < 0.0) {
        reasons.push("non-finite or negative ratio".into());
    }
    let ceiling = match kind {
        LawKind::Identity { tol } => Some(tol),
        LawKind::Bracket { hi, .. } => Some(hi),
        LawKind::Inequality => cfg.ceiling,
    };
    if let Some(c) = ceiling {
        if max_ratio > c {
            reasons.push(format!("ratio {max_ratio:.6e} exceeds ceiling {c:.6e}"));
        }
    }
    if let LawKind::Bracket { lo, .. } = kind {
        if min_ratio < lo {
            reasons.push(format!("ratio {min_ratio:.6e} below bracket {lo:.6e}"));
        }
    }
    if !matches!(kind, LawKind::Identity { .. }) {
        if let Some(s) = stability {
            if !(s <= MAX_STABILITY) {
                reasons.push(format!("stability factor {s:.4} exceeds {MAX_STABILITY}"));
            }
        }
    }
    LawSummary {
        law: law.label(),
        kind,
        c_emp: reports.iter().map(|r| (r.resolution, r.c_emp)).collect(),
        stability,
        min_ratio,
        max_ratio,
        ceiling,
        skipped,
        valid,
        pass: reasons.is_empty(),
        reasons,
    }
}

/// Runs every law at every resolution.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let laws = cfg.validate()?;
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for law in &laws {
        let mut rs: Vec<InequalityReport> = Vec::with_capacity(cfg.resolutions.len());
        for &n in &cfg.resolutions {
            let mut r = sweep(law, cfg, n)?;
            if let Some(prev) = rs.last() {
                r.stability = (prev.c_emp > 0.0).then(|| r.c_emp / prev.c_emp);
            }
            rs.push(r);
        }
        let s = summarize(law, &rs, cfg);
        log::info!(
            "{}: C_emp {:?}, stability {:?}, {}",
            s.law,
            s.c_emp,
            s.stability,
            if s.pass { "PASS" } else { "FAIL" }
        );
        summary.push(s);
        reports.extend(rs);
    }
    let pass = summary.iter().all(|s| s.pass);
    Ok(SuiteResult { config: cfg.clone(), reports, summary, pass })
}

impl SuiteResult {
    /// One row per sample: `sample_id,law_id,s,p,r,lhs,rhs,ratio,resolution`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
        for r in &self.reports {
            let (is, ip, ir) = r.indices;
            for s in &r.samples {
                w.write_record([
                    s.index.to_string(),
                    r.law.clone(),
                    is.to_string(),
                    ip.to_string(),
                    ir.to_string(),
                    format!("{:e}", s.lhs),
                    format!("{:e}", s.rhs),
                    format!("{:e}", s.ratio),
                    r.resolution.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `{law: {c_emp, stability, pass, ...}}`.
    pub fn summary_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .summary
            .iter()
            .map(|s| (s.law.clone(), serde_json::to_value(s).unwrap_or(serde_json::Value::Null)))
            .collect();
        serde_json::json!({ "pass": self.pass, "laws": map })
    }

    /// Writes `reports.csv` and `summary.json` into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("reports.csv"))?)?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary_json())?)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
