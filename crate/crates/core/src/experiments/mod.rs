//! Named, seeded experiment recipes that write CSV tables, a gnuplot script
//! and a manifest into an output directory.

mod config;
mod recipes;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};

pub use config::{Experiment, ExperimentConfig, Manifold};
pub use recipes::{compare_d2, zeroing_comparison, D2Case, D2_CASES};

/// One file produced by a recipe, held in memory until the run writes it.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Artifact { name: name.into(), contents }
    }
}

/// Seed actually used by one unit of work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub artifacts: Vec<Artifact>,
    pub seeds: Vec<SeedRecord>,
}

impl Outputs {
    pub(crate) fn file(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact::new(name, contents));
    }

    pub(crate) fn seed(&mut self, label: impl Into<String>, seed: u64) {
        self.seeds.push(SeedRecord { label: label.into(), seed });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub library_version: String,
    pub config: ExperimentConfig,
    /// The same configuration in key-value form; also written to `config.txt`.
    pub config_text: String,
    pub seeds: Vec<SeedRecord>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Compute the experiment's artifacts without touching the filesystem.
pub fn compute(config: &ExperimentConfig) -> Result<Outputs> {
    config.validate()?;
    recipes::dispatch(config)
}

/// Run the experiment and write its artifacts, `config.txt` and finally
/// `manifest.json` into `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let outputs = compute(config)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let config_text = config.to_kv_string();
    let mut files = Vec::with_capacity(outputs.artifacts.len() + 1);
    let mut write = |name: &str, contents: &str| -> Result<()> {
        let path: PathBuf = out.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        files.push(OutputFile {
            path: name.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    };
    write(CONFIG_FILE, &config_text)?;
    for a in &outputs.artifacts {
        if a.name == MANIFEST_FILE || a.name == CONFIG_FILE || a.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("recipe produced a reserved file name {}", a.name)));
        }
        write(&a.name, &a.contents)?;
    }
    let manifest = RunManifest {
        experiment: config.name.name().to_string(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_text,
        seeds: outputs.seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: files,
    };
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Re-run the configuration recorded in a manifest into `out`.
pub fn rerun(manifest: &RunManifest, out: &Path) -> Result<RunManifest> {
    run(&manifest.config, out)
}

/// Files whose digest differs from the manifest, or that are missing.
pub fn verify(manifest: &RunManifest, dir: &Path) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.outputs {
        let path = dir.join(&f.path);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            Ok(_) => bad.push(f.path.clone()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => bad.push(f.path.clone()),
            Err(e) => return Err(Error::Io { path, source: e }),
        }
    }
    Ok(bad)
}

/// Build the global worker pool, capped by `GLSPEC_THREADS` when set.
/// Returns the number of threads in use.
pub fn init_thread_pool() -> Result<usize> {
    let requested = match std::env::var("GLSPEC_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|t| *t > 0)
                .ok_or_else(|| Error::Config(format!("GLSPEC_THREADS must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = requested {
        builder = builder.num_threads(t);
    }
    // A pool that already exists is kept; report its size.
    let _ = builder.build_global();
    Ok(rayon::current_num_threads())
}
