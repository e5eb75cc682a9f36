use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn densflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densflow")).args(args).output().expect("spawn densflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn verify_identity_law_passes_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&["verify", "--law", "bony-identity", "--samples", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("reports.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "sample_id,law_id,s,p,r,lhs,rhs,ratio,resolution");
    assert_eq!(lines.count(), 10);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config"]["samples"], 5);
}

#[test]
fn huge_coefficient_aborts_with_divergence_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&[
        "solve-elliptic",
        "--set",
        r#"coefficient={"family":"constant","value":5}"#,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("fixed-point iteration diverged"), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["status"], "abort");
    assert!(m["message"].as_str().unwrap().contains("contraction factor 5.000"));
}

#[test]
fn energy_run_meets_residual_and_reruns_bit_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("energy.json");
    std::fs::write(
        &cfg,
        r#"{
            "version": 1,
            "solver": {"grid": {"sizes": [64, 64]}, "mu": 0.1, "dt": 0.01, "t_final": 0.5},
            "data": {
                "density": {"family": "modes", "terms": [{"amp": 0.1, "k": [1, 0]}]},
                "velocity": {"family": "taylor-green", "amp": 1.0, "k": 1}
            }
        }"#,
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&["solve-ns", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let monitors = std::fs::read_to_string(out.join("monitors.csv")).unwrap();
    let header: Vec<&str> = monitors.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "energy_residual").unwrap();
    let last = monitors.lines().last().unwrap().split(',').nth(col).unwrap().parse::<f64>().unwrap();
    assert!(last.abs() <= 1e-4, "terminal residual {last}");
    assert!(out.join("trajectory/trajectory.json").is_file());

    let again = tmp.path().join("again");
    let o = densflow(&["solve-ns", "--config", out.join("config.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["monitors.csv", "energy.csv", "pressure.csv", "config.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn unknown_names_are_usage_errors_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&["solve-ns", "--set", "data.density.family=vortex-sheet", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("vortex-sheet"), "{}", stderr(&o));
    assert!(!out.join("monitors.csv").exists());
    assert_eq!(manifest(&out)["status"], "error");

    let o = densflow(&["verify", "--law", "no-such-law", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown law"));

    let o = densflow(&["norm", "--config", tmp.path().join("missing.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.json"));

    let o = densflow(&["solve-ns", "--set", "solver.mu=-1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("viscosity"));

    let o = densflow(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn suite_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&[
        "verify",
        "--law",
        "product-tame",
        "--samples",
        "20",
        "--resolutions",
        "16,32",
        "--set",
        "ceiling=1e-6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL product-tame"));
    assert_eq!(manifest(&out)["status"], "fail");
}

#[test]
fn seed_offsets_every_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&["norm", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["config"]["field"]["data"]["seed"], 7);
    assert_eq!(m["seed_offset"], 7);
    let cfg: Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg, m["config"]);
    assert_eq!(cfg["version"], 1);
}

#[test]
fn monitor_abort_names_the_cutoff() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = densflow(&[
        "solve-ns",
        "--set",
        r#"data.density={"family":"modes","terms":[{"amp":0.05,"k":[1,0]},{"amp":0.2,"k":[20,3]}]}"#,
        "--set",
        r#"data.velocity={"family":"random","amp":0.2,"seed":2,"kmax":3,"decay":1.0}"#,
        "--set",
        "solver.monitor.m=1",
        "--set",
        "solver.monitor.policy=abort",
        "--set",
        "solver.t_final=0.02",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("H1") && err.contains("m = 1"), "{err}");
}

#[test]
fn snapshots_feed_back_into_norm() {
    let tmp = tempfile::tempdir().unwrap();
    let solve = tmp.path().join("solve");
    let o = densflow(&["solve-elliptic", "--set", "format=csv", "--out", solve.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = std::fs::read_to_string(solve.join("solver_log.csv")).unwrap();
    assert!(log.starts_with("iter,residual,contraction_estimate\n"));
    let last: f64 = log.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-10);

    let norm = tmp.path().join("norm");
    let src = format!(r#"field={{"source":"snapshot","dir":{:?},"name":"pressure","component":1}}"#, solve.to_str().unwrap());
    let o = densflow(&["norm", "--set", &src, "--set", "s=1", "--set", "r=inf", "--out", norm.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let n: Value = serde_json::from_str(&std::fs::read_to_string(norm.join("norm.json")).unwrap()).unwrap();
    assert_eq!(n["r"], "inf");
    assert!(n["besov"].as_f64().unwrap() > 0.0);

    let missing = format!(r#"field={{"source":"snapshot","dir":{:?},"name":"nothing"}}"#, solve.to_str().unwrap());
    let o = densflow(&["norm", "--set", &missing, "--out", norm.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn transport_and_decompose_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path().join("t");
    let o = densflow(&["solve-transport", "--set", "grid.sizes=[32,32]", "--set", "options.t_final=0.2", "--out", t.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let diag = std::fs::read_to_string(t.join("diagnostics.csv")).unwrap();
    // header plus t = 0 and 20 steps
    assert_eq!(diag.lines().count(), 22);
    assert!(t.join("norms.svg").is_file() && t.join("final.json").is_file());

    let d = tmp.path().join("d");
    let o = densflow(&["decompose", "--out", d.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j: Value = serde_json::from_str(&std::fs::read_to_string(d.join("decompose.json")).unwrap()).unwrap();
    assert!(j["reconstruction_error"].as_f64().unwrap() < 1e-12);
    assert!(d.join("blocks/blocks.json").is_file());
}

#[test]
fn experiments_pass_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s");
    let o = densflow(&["scaling-check", "--set", "solver.grid.sizes=[32,32]", "--out", s.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let st = tmp.path().join("st");
    let o = densflow(&["stability", "--out", st.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j: Value = serde_json::from_str(&std::fs::read_to_string(st.join("stability.json")).unwrap()).unwrap();
    assert!((j["slope"].as_f64().unwrap() - 1.0).abs() <= 0.1);
}
