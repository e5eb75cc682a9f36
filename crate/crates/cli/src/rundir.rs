//! Run directories: every artifact of a command plus `manifest.json`.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::svg::Plot;

pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create run directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), outputs: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of an artifact, recorded in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("cannot create {}", p.display()))?))
    }

    pub fn csv(&mut self, name: &str, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
        let mut w = csv::Writer::from_writer(self.file(name)?);
        w.write_record(header)?;
        Ok(w)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("cannot write {}", p.display()))
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, plot.render()).with_context(|| format!("cannot write {}", p.display()))
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }
}

/// Full-precision decimal.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub struct Manifest<'a> {
    pub command: &'a str,
    pub argv: Vec<String>,
    pub config: Option<&'a Value>,
    pub seed_offset: Option<u64>,
    pub status: &'a str,
    pub exit_code: i32,
    pub message: &'a str,
    pub outputs: &'a [String],
    pub elapsed: f64,
}

impl Manifest<'_> {
    pub fn write(&self, root: &Path) -> Result<()> {
        std::fs::create_dir_all(root)?;
        let v = json!({
            "tool": "densflow",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "config_file": self.config.map(|_| "config.json"),
            "seed_offset": self.seed_offset,
            "rerun": self.config.map(|_| format!("densflow {} --config {}", self.command, root.join("config.json").display())),
            "status": self.status,
            "exit_code": self.exit_code,
            "message": self.message,
            "outputs": self.outputs,
            "elapsed_seconds": self.elapsed,
        });
        if let Some(cfg) = self.config {
            std::fs::write(root.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
        }
        std::fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&v)? + "\n")?;
        Ok(())
    }
}
