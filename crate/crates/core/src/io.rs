//! Field snapshots, trajectory stores and the monitor table.
//!
//! A snapshot `name` is a header `name.json` next to the node values in
//! `name.bin` (little-endian `f64`) or `name.csv`. Values are row-major with
//! the last axis fastest; components follow one another.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ns::{SolverState, Trajectory};
use crate::spectral::{RealField, TorusGrid};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    #[default]
    Bin,
    Csv,
}

impl SnapshotFormat {
    fn ext(self) -> &'static str {
        match self {
            SnapshotFormat::Bin => "bin",
            SnapshotFormat::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dim: usize,
    pub sizes: Vec<usize>,
    pub periods: Vec<f64>,
    pub components: usize,
    pub names: Vec<String>,
    pub t: f64,
    pub format: SnapshotFormat,
}

fn io_err(e: impl std::error::Error + Send + Sync + 'static) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes `fields` (all on one grid) as snapshot `dir/name`.
pub fn write_snapshot(dir: &Path, name: &str, t: f64, fields: &[(&str, &RealField)], format: SnapshotFormat) -> Result<SnapshotHeader> {
    let (_, first) = fields.first().ok_or_else(|| Error::Shape("snapshot needs at least one field".into()))?;
    let grid = *first.grid();
    if fields.iter().any(|(_, f)| *f.grid() != grid) {
        return Err(Error::Shape("snapshot fields live on different grids".into()));
    }
    std::fs::create_dir_all(dir)?;
    let header = SnapshotHeader {
        version: SNAPSHOT_VERSION,
        dim: grid.dim(),
        sizes: grid.sizes()[..grid.dim()].to_vec(),
        periods: grid.periods()[..grid.dim()].to_vec(),
        components: fields.len(),
        names: fields.iter().map(|(n, _)| n.to_string()).collect(),
        t,
        format,
    };
    let data = dir.join(format!("{name}.{}", format.ext()));
    match format {
        SnapshotFormat::Bin => {
            let mut buf = Vec::with_capacity(8 * grid.len() * fields.len());
            for (_, f) in fields {
                for v in f.values() {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            std::fs::write(&data, buf)?;
        }
        SnapshotFormat::Csv => {
            let mut w = csv::Writer::from_path(&data).map_err(io_err)?;
            let mut head: Vec<String> = (0..grid.dim()).map(|a| format!("x{a}")).collect();
            head.extend(header.names.iter().cloned());
            w.write_record(&head).map_err(io_err)?;
            for idx in 0..grid.len() {
                let x = grid.node(idx);
                let mut row: Vec<String> = x[..grid.dim()].iter().map(|v| format!("{v:e}")).collect();
                row.extend(fields.iter().map(|(_, f)| format!("{:e}", f.values()[idx])));
                w.write_record(&row).map_err(io_err)?;
            }
            w.flush()?;
        }
    }
    std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&header)?)?;
    Ok(header)
}

/// Reads snapshot `dir/name` back.
pub fn read_snapshot(dir: &Path, name: &str) -> Result<(SnapshotHeader, Vec<RealField>)> {
    let header: SnapshotHeader = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json")))?)?;
    if header.version != SNAPSHOT_VERSION {
        return Err(Error::Parameter(format!("snapshot version {} is not supported", header.version)));
    }
    let grid = TorusGrid::new(&header.sizes, &header.periods)?;
    let n = grid.len();
    let data = dir.join(format!("{name}.{}", header.format.ext()));
    let values: Vec<f64> = match header.format {
        SnapshotFormat::Bin => {
            let bytes = std::fs::read(&data)?;
            if bytes.len() != 8 * n * header.components {
                return Err(Error::Shape(format!("{} holds {} bytes, expected {}", data.display(), bytes.len(), 8 * n * header.components)));
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect()
        }
        SnapshotFormat::Csv => {
            let mut r = csv::Reader::from_path(&data).map_err(io_err)?;
            let mut cols = vec![Vec::with_capacity(n); header.components];
            for rec in r.records() {
                let rec = rec.map_err(io_err)?;
                for (c, col) in cols.iter_mut().enumerate() {
                    let s = rec.get(header.dim + c).ok_or_else(|| Error::Shape("short snapshot row".into()))?;
                    col.push(s.parse::<f64>().map_err(io_err)?);
                }
            }
            cols.concat()
        }
    };
    if values.len() != n * header.components {
        return Err(Error::Shape(format!("snapshot holds {} values, expected {}", values.len(), n * header.components)));
    }
    let fields = values.chunks(n).map(|c| RealField::from_values(grid, c.to_vec())).collect::<Result<_>>()?;
    Ok((header, fields))
}

/// `a`, the velocity and the pressure gradient of a state.
pub fn write_state(dir: &Path, name: &str, state: &SolverState, format: SnapshotFormat) -> Result<SnapshotHeader> {
    let a = state.a.inverse();
    let u: Vec<RealField> = state.u()?.iter().map(|c| c.inverse()).collect();
    let g: Vec<RealField> = state.grad_pi()?.iter().map(|c| c.inverse()).collect();
    let un: Vec<String> = (0..u.len()).map(|i| format!("u{i}")).collect();
    let gn: Vec<String> = (0..g.len()).map(|i| format!("grad_pi{i}")).collect();
    let mut fields: Vec<(&str, &RealField)> = vec![("a", &a)];
    fields.extend(un.iter().map(String::as_str).zip(&u));
    fields.extend(gn.iter().map(String::as_str).zip(&g));
    write_snapshot(dir, name, state.t, &fields, format)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub dt: f64,
    pub steps: usize,
    pub resolution: Vec<usize>,
    pub periods: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<String>,
}

/// Writes every stored snapshot (or the final state when none were kept)
/// and `trajectory.json` into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, format: SnapshotFormat) -> Result<TrajectoryManifest> {
    std::fs::create_dir_all(dir)?;
    let states: Vec<&SolverState> = if traj.snapshots.is_empty() { vec![&traj.state] } else { traj.snapshots.iter().collect() };
    let mut names = Vec::new();
    for (i, s) in states.iter().enumerate() {
        let name = format!("state_{i:05}");
        write_state(dir, &name, s, format)?;
        names.push(name);
    }
    let g = traj.state.grid();
    let m = TrajectoryManifest {
        dt: traj.dt,
        steps: traj.steps,
        resolution: g.sizes()[..g.dim()].to_vec(),
        periods: g.periods()[..g.dim()].to_vec(),
        times: states.iter().map(|s| s.t).collect(),
        snapshots: names,
    };
    std::fs::write(dir.join("trajectory.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(m)
}

pub const MONITOR_COLUMNS: [&str; 18] = [
    "t", "energy", "dissipation", "work", "energy_residual", "H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8", "nu_lower",
    "z_m", "a_besov", "u_besov", "breaches",
];

/// Monitor table: one row per monitor evaluation (per energy record when
/// the monitor is off). `H1..H8` hold the margins `1 − lhs/rhs`.
pub fn write_monitors_csv(traj: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MONITOR_COLUMNS).map_err(io_err)?;
    let energy_at = |t: f64| {
        traj.energy
            .iter()
            .min_by(|x, y| (x.t - t).abs().total_cmp(&(y.t - t).abs()))
            .copied()
    };
    let full = |x: f64| format!("{x:e}");
    match &traj.monitor {
        Some(mon) => {
            for row in &mon.rows {
                let e = energy_at(row.t).ok_or_else(|| Error::State("trajectory has no energy records".into()))?;
                let mut rec = vec![full(row.t), full(e.energy), full(e.dissipation), full(e.work), full(e.residual)];
                rec.extend(row.conditions.iter().map(|c| full(c.margin())));
                rec.extend([full(row.nu_lower), full(row.z_m), full(row.a_besov), full(row.u_besov)]);
                let broken: Vec<&str> = row.conditions.iter().filter(|c| !c.holds()).map(|c| c.name.as_str()).collect();
                rec.push(broken.join(" "));
                w.write_record(&rec).map_err(io_err)?;
            }
        }
        None => {
            for e in &traj.energy {
                let mut rec = vec![full(e.t), full(e.energy), full(e.dissipation), full(e.work), full(e.residual)];
                rec.extend(std::iter::repeat_n(String::new(), 12));
                rec.push(String::new());
                w.write_record(&rec).map_err(io_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Path of snapshot data for `name` in `dir`.
pub fn snapshot_data_path(dir: &Path, header: &SnapshotHeader, name: &str) -> PathBuf {
    dir.join(format!("{name}.{}", header.format.ext()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ns::{run, InitialData, ScalarFamily, SolverConfig, VectorFamily};
    use crate::spectral::GridSpec;

    #[test]
    fn snapshot_round_trip_both_formats() {
        let g = TorusGrid::new(&[16, 8], &[1.0, 2.0]).unwrap();
        let a = RealField::from_fn(g, |x| x[0].sin() + 0.1 * x[1]);
        let b = RealField::from_fn(g, |x| (3.0 * x[1]).cos() * 1e-7);
        let dir = tempfile::tempdir().unwrap();
        for fmt in [SnapshotFormat::Bin, SnapshotFormat::Csv] {
            let name = format!("s_{:?}", fmt);
            let h = write_snapshot(dir.path(), &name, 0.25, &[("a", &a), ("b", &b)], fmt).unwrap();
            assert!(snapshot_data_path(dir.path(), &h, &name).exists());
            let (h2, f) = read_snapshot(dir.path(), &name).unwrap();
            assert_eq!(h, h2);
            assert_eq!(f[0], a);
            assert_eq!(f[1], b);
        }
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let g = TorusGrid::cubic(2, 8).unwrap();
        let a = RealField::constant(g, 1.0);
        let dir = tempfile::tempdir().unwrap();
        write_snapshot(dir.path(), "x", 0.0, &[("a", &a)], SnapshotFormat::Bin).unwrap();
        std::fs::write(dir.path().join("x.bin"), [0u8; 12]).unwrap();
        assert!(matches!(read_snapshot(dir.path(), "x"), Err(Error::Shape(_))));
    }

    #[test]
    fn trajectory_and_monitor_table() {
        let cfg = SolverConfig {
            grid: GridSpec { sizes: vec![16, 16], periods: None },
            dt: 0.05,
            t_final: 0.2,
            snapshot_every: Some(2),
            record_every: 2,
            ..Default::default()
        };
        let data = InitialData {
            density: ScalarFamily::Bump { amp: 0.1, width: 1.0 },
            velocity: VectorFamily::TaylorGreen { amp: 0.3, k: 1 },
            forcing: VectorFamily::Zero,
        };
        let d = data.build(cfg.grid().unwrap()).unwrap();
        let tr = run(&d.a0, &d.u0, &d.f, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_trajectory(dir.path(), &tr, SnapshotFormat::Bin).unwrap();
        assert_eq!(m.times, vec![0.0, 0.1, 0.2]);
        let (h, f) = read_snapshot(dir.path(), "state_00002").unwrap();
        assert_eq!(h.names, vec!["a", "u0", "u1", "grad_pi0", "grad_pi1"]);
        assert_eq!(f[1], tr.state.u().unwrap()[0].inverse());

        let mut buf = Vec::new();
        write_monitors_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], MONITOR_COLUMNS.join(","));
        assert_eq!(lines.len(), 1 + tr.monitor.as_ref().unwrap().rows.len());
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert_eq!(last[4].parse::<f64>().unwrap(), tr.final_energy_residual());
    }
}
