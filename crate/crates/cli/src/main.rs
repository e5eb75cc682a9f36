//! `densflow`: batch front end for norms, solves, suites and experiments.
//!
//! Exit status: 0 success or PASS, 1 suite FAIL, 2 usage, parameter or I/O
//! error, 3 numerical abort.

mod commands;
mod config;
mod rundir;
mod svg;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use commands::Outcome;
use rundir::{Manifest, RunDir};

#[derive(Parser, Debug)]
#[command(name = "densflow", version, about = "Littlewood-Paley diagnostics and density-dependent Navier-Stokes runs on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON config of the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory (default `runs/<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Added to every `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config entry, e.g. `--set solver.mu=0.05`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Besov norm and block norms of a field.
    Norm,
    /// Littlewood-Paley blocks of a field.
    Decompose,
    /// Variable-coefficient pressure equation.
    SolveElliptic,
    /// Transport by a divergence-free velocity.
    SolveTransport,
    /// Density-dependent Navier-Stokes run with the bootstrap monitor.
    SolveNs,
    /// Sweep of inequality and identity laws.
    Verify(VerifyArgs),
    /// Linear response of the solution to perturbed data.
    Stability,
    /// Scaling covariance of the solver.
    ScalingCheck,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Law id (repeatable); replaces the laws of the config.
    #[arg(long = "law")]
    laws: Vec<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated grid sizes, coarse to fine.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long)]
    dim: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::Decompose => "decompose",
            Command::SolveElliptic => "solve-elliptic",
            Command::SolveTransport => "solve-transport",
            Command::SolveNs => "solve-ns",
            Command::Verify(_) => "verify",
            Command::Stability => "stability",
            Command::ScalingCheck => "scaling-check",
        }
    }
}

enum Failure {
    Usage(anyhow::Error),
    Abort(anyhow::Error),
}

impl Failure {
    fn classify(e: anyhow::Error) -> Self {
        let abort = e
            .chain()
            .find_map(|c| c.downcast_ref::<densflow::Error>())
            .is_some_and(densflow::Error::is_numerical_abort);
        if abort {
            Failure::Abort(e)
        } else {
            Failure::Usage(e)
        }
    }
}

/// Config value from file, flags, overrides and seed offset, then typed.
fn build_config<T: Serialize + DeserializeOwned>(mut value: Value, g: &Global) -> Result<(T, Value)> {
    for o in &g.overrides {
        config::apply_override(&mut value, o)?;
    }
    let typed: T = config::resolve(value)?;
    let mut canonical = config::versioned(&typed)?;
    if let Some(s) = g.seed {
        config::offset_seeds(&mut canonical, s);
    }
    let typed: T = config::resolve(canonical.clone())?;
    Ok((typed, canonical))
}

fn verify_flags(value: &mut Value, a: &VerifyArgs) {
    let obj = value.as_object_mut().expect("config is an object");
    if !a.laws.is_empty() {
        obj.insert("laws".into(), json!(a.laws));
    }
    if let Some(n) = a.samples {
        obj.insert("samples".into(), json!(n));
    }
    if let Some(r) = &a.resolutions {
        obj.insert("resolutions".into(), json!(r));
    }
    if let Some(d) = a.dim {
        obj.insert("dim".into(), json!(d));
    }
}

type Runner = Box<dyn FnOnce(&mut RunDir) -> Result<Outcome>>;

fn prepare(cli: &Cli) -> Result<(Runner, Value)> {
    let mut value = config::load(cli.global.config.as_deref())?;
    if let Command::Verify(a) = &cli.command {
        verify_flags(&mut value, a);
    }
    let g = &cli.global;
    macro_rules! runner {
        ($ty:ty, $f:path) => {{
            let (cfg, canonical) = build_config::<$ty>(value, g)?;
            let run: Runner = Box::new(move |out| $f(&cfg, out));
            (run, canonical)
        }};
    }
    Ok(match &cli.command {
        Command::Norm => runner!(commands::NormConfig, commands::norm),
        Command::Decompose => runner!(commands::DecomposeConfig, commands::decompose_field),
        Command::SolveElliptic => runner!(commands::EllipticConfig, commands::solve_elliptic),
        Command::SolveTransport => runner!(commands::TransportConfig, commands::solve_transport),
        Command::SolveNs => runner!(commands::NsConfig, commands::solve_ns),
        Command::Verify(_) => {
            let (cfg, canonical) = build_config::<densflow::harness::SuiteConfig>(value, g)?;
            // unknown law ids are rejected before any compute
            cfg.validate()?;
            let run: Runner = Box::new(move |out| commands::verify(&cfg, out));
            (run, canonical)
        }
        Command::Stability => runner!(commands::StabilityConfig, commands::stability),
        Command::ScalingCheck => runner!(commands::ScalingConfig, commands::scaling),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let name = cli.command.name();
    let root = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(name));
    let start = Instant::now();

    let (result, canonical, outputs) = match prepare(&cli) {
        Err(e) => (Err(Failure::classify(e)), None, Vec::new()),
        Ok((run, canonical)) => match RunDir::create(&root) {
            Err(e) => (Err(Failure::Usage(e)), Some(canonical), Vec::new()),
            Ok(mut dir) => {
                let r = run(&mut dir).map_err(Failure::classify);
                (r, Some(canonical), dir.outputs().to_vec())
            }
        },
    };
    let (status, code, message) = match &result {
        Ok(o) if o.pass => ("ok", 0, o.message.clone()),
        Ok(o) => ("fail", 1, o.message.clone()),
        Err(Failure::Usage(e)) => ("error", 2, format!("{e:#}")),
        Err(Failure::Abort(e)) => ("abort", 3, format!("{e:#}")),
    };
    let manifest = Manifest {
        command: name,
        argv: std::env::args().collect(),
        config: canonical.as_ref(),
        seed_offset: cli.global.seed,
        status,
        exit_code: code,
        message: &message,
        outputs: &outputs,
        elapsed: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = manifest.write(&root) {
        eprintln!("densflow: cannot write manifest: {e:#}");
    }
    match code {
        0 => println!("{message}"),
        1 => println!("{message}"),
        2 => eprintln!("densflow {name}: {message}"),
        _ => eprintln!("densflow {name}: numerical abort: {message}"),
    }
    ExitCode::from(code as u8)
}
