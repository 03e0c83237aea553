use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub const OUTPUT_ROOT_ENV: &str = "AUGPU_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "augpu-out";

/// Provenance written next to every set of outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub subcommand: &'a str,
    pub config: &'a C,
    pub seeds: Vec<u64>,
    pub version: &'static str,
    pub duration_secs: f64,
    pub outputs: Vec<String>,
}

/// `--out` if given, else `$AUGPU_OUTPUT_ROOT/<subcommand>`.
pub fn resolve_out_dir(out: Option<PathBuf>, subcommand: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT), PathBuf::from);
        root.join(subcommand)
    })
}

/// Files are staged in a sibling temporary directory and moved into place
/// only by [`Staging::commit`], so an interrupted run leaves no partial
/// output or manifest behind.
pub struct Staging {
    target: PathBuf,
    dir: tempfile::TempDir,
    files: Vec<String>,
    started: Instant,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
        if target.exists() && !target.is_dir() {
            bail!("{} exists and is not a directory", target.display());
        }
        let dir = tempfile::Builder::new()
            .prefix(".augpu-staging-")
            .tempdir_in(&parent)
            .with_context(|| format!("cannot stage output in {}", parent.display()))?;
        Ok(Self {
            target: target.to_path_buf(),
            dir,
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.path(name), bytes).with_context(|| format!("cannot write {name}"))?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Note a file written directly under [`Staging::path`].
    pub fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    /// Write the manifest and move the staged directory to the target,
    /// replacing any previous contents.
    pub fn commit<C: Serialize>(
        mut self,
        subcommand: &str,
        config: &C,
        seeds: Vec<u64>,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            subcommand,
            config,
            seeds,
            version: env!("CARGO_PKG_VERSION"),
            duration_secs: self.started.elapsed().as_secs_f64(),
            outputs: self.files.clone(),
        };
        self.write_json("manifest.json", &manifest)?;
        let staged = self.dir.keep();
        if self.target.exists() {
            let old = staged.with_file_name(format!(
                ".augpu-replaced-{}",
                staged.file_name().and_then(|n| n.to_str()).unwrap_or("old")
            ));
            fs::rename(&self.target, &old)
                .with_context(|| format!("cannot replace {}", self.target.display()))?;
            fs::rename(&staged, &self.target)?;
            fs::remove_dir_all(&old).ok();
        } else {
            fs::rename(&staged, &self.target)
                .with_context(|| format!("cannot create {}", self.target.display()))?;
        }
        Ok(self.target)
    }
}

/// Read and parse a JSON config; parse errors carry the path, line and column.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}
