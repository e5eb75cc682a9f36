//! `norm` and `decompose`.

use anyhow::{bail, Context, Result};
use densflow::harness::{extended, generate_spectral, SampleSpec};
use densflow::io::{read_snapshot, write_snapshot, SnapshotFormat};
use densflow::lp::{block_norms, decompose, PartitionOfUnity};
use densflow::ns::ScalarFamily;
use densflow::spectral::{GridSpec, RealField, SpectralField, TorusGrid};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;

use super::Outcome;
use crate::rundir::{num, RunDir};
use crate::svg::{Plot, Series};

/// Where the analysed scalar field comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSource {
    Family { grid: GridSpec, data: ScalarFamily },
    Sample { spec: SampleSpec },
    /// Component `component` of snapshot `dir/name`.
    Snapshot { dir: PathBuf, name: String, #[serde(default)] component: usize },
}

impl Default for FieldSource {
    fn default() -> Self {
        FieldSource::Family {
            grid: GridSpec { sizes: vec![64, 64], periods: None },
            data: ScalarFamily::Random { amp: 1.0, seed: 0, kmax: 16, decay: 1.0 },
        }
    }
}

impl FieldSource {
    /// Checks that referenced files exist before anything is computed.
    pub fn check(&self) -> Result<()> {
        if let FieldSource::Snapshot { dir, name, .. } = self {
            let header = dir.join(format!("{name}.json"));
            if !header.is_file() {
                bail!("snapshot header {} does not exist", header.display());
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<SpectralField> {
        Ok(match self {
            FieldSource::Family { grid, data } => data.build(TorusGrid::from_spec(grid)?)?,
            FieldSource::Sample { spec } => generate_spectral(spec)?,
            FieldSource::Snapshot { dir, name, component } => {
                let (header, fields) = read_snapshot(dir, name).with_context(|| format!("cannot read snapshot {name}"))?;
                let f: &RealField = fields
                    .get(*component)
                    .with_context(|| format!("snapshot {name} has {} components, asked for {component}", header.components))?;
                f.transform()
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub field: FieldSource,
    pub s: f64,
    #[serde(with = "extended")]
    pub p: f64,
    #[serde(with = "extended")]
    pub r: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { field: FieldSource::default(), s: 0.0, p: 2.0, r: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub field: FieldSource,
    /// Exponent of the tabulated block norms.
    #[serde(with = "extended")]
    pub p: f64,
    /// Write every block as one snapshot component.
    pub write_blocks: bool,
    pub format: SnapshotFormat,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { field: FieldSource::default(), p: 2.0, write_blocks: true, format: SnapshotFormat::Bin }
    }
}

pub fn norm(cfg: &NormConfig, out: &mut RunDir) -> Result<Outcome> {
    cfg.field.check()?;
    let u = cfg.field.build()?;
    let bn = block_norms(&u, cfg.p)?;
    let besov = bn.besov(cfg.s, cfg.r);
    let phys = u.inverse();
    let mut w = out.csv("blocks.csv", &["l", "norm", "weighted"])?;
    let mut pts = Vec::new();
    for l in -1..=bn.lmax() {
        let n = bn.get(l);
        let weighted = 2f64.powf(l as f64 * cfg.s) * n;
        w.write_record([l.to_string(), num(n), num(weighted)])?;
        pts.push((l as f64, weighted));
    }
    w.flush()?;
    out.json(
        "norm.json",
        &json!({
            "s": cfg.s,
            "p": extended_json(cfg.p),
            "r": extended_json(cfg.r),
            "besov": besov,
            "lmax": bn.lmax(),
            "l2": phys.lp_norm(2.0)?,
            "linf": phys.max_abs(),
            "mean": phys.mean(),
        }),
    )?;
    out.svg(
        "blocks.svg",
        &Plot::new("weighted block norms", "l", "2^{ls} |Δ_l u|_p", true).with(Series::new("u", pts)),
    )?;
    Ok(Outcome::pass(format!("B^{}_{{{},{}}} norm = {besov:e}", cfg.s, cfg.p, cfg.r)))
}

pub fn decompose_field(cfg: &DecomposeConfig, out: &mut RunDir) -> Result<Outcome> {
    cfg.field.check()?;
    let u = cfg.field.build()?;
    let dec = decompose(&u, &PartitionOfUnity::default());
    let phys = u.inverse();
    let err = dec.reconstruct()?.inverse().sub(&phys)?.max_abs();
    let rel = if phys.max_abs() > 0.0 { err / phys.max_abs() } else { err };
    let blocks = dec.physical_blocks();
    let mut w = out.csv("blocks.csv", &["l", "l2", "lp", "linf"])?;
    let mut pts = Vec::new();
    for ((l, _), b) in dec.iter().zip(&blocks) {
        let l2 = b.lp_norm(2.0)?;
        w.write_record([l.to_string(), num(l2), num(b.lp_norm(cfg.p)?), num(b.max_abs())])?;
        pts.push((l as f64, l2));
    }
    w.flush()?;
    if cfg.write_blocks {
        let names: Vec<String> = dec.iter().map(|(l, _)| format!("block{l}")).collect();
        let fields: Vec<(&str, &RealField)> = names.iter().map(String::as_str).zip(&blocks).collect();
        let dir = out.root().join("blocks");
        write_snapshot(&dir, "blocks", 0.0, &fields, cfg.format)?;
        out.path("blocks");
    }
    out.json(
        "decompose.json",
        &json!({ "lmax": dec.lmax(), "p": extended_json(cfg.p), "reconstruction_error": rel }),
    )?;
    out.svg(
        "blocks.svg",
        &Plot::new("block energies", "l", "|Δ_l u|_2", true).with(Series::new("u", pts)),
    )?;
    Ok(Outcome::pass(format!("{} blocks, relative reconstruction error {rel:e}", dec.lmax() + 2)))
}

pub fn extended_json(x: f64) -> serde_json::Value {
    if x.is_infinite() {
        json!("inf")
    } else {
        json!(x)
    }
}
