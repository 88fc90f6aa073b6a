//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored, lists are comma separated.
//! Keys not present keep the per-experiment defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandwidth::OmegaGrid;
use crate::data_gen::LambdaBase;
use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    PhaseSweep,
    AccuracyLowSnr,
    AccuracyModerate,
    AccuracyLarge,
    DimensionSweep,
    HistogramBulk,
    OmegaSweep,
    ManifoldRmse,
    StieltjesCompare,
    D2Comparison,
    ZeroingComparison,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::PhaseSweep,
        Experiment::AccuracyLowSnr,
        Experiment::AccuracyModerate,
        Experiment::AccuracyLarge,
        Experiment::DimensionSweep,
        Experiment::HistogramBulk,
        Experiment::OmegaSweep,
        Experiment::ManifoldRmse,
        Experiment::StieltjesCompare,
        Experiment::D2Comparison,
        Experiment::ZeroingComparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhaseSweep => "phase_sweep",
            Experiment::AccuracyLowSnr => "accuracy_low_snr",
            Experiment::AccuracyModerate => "accuracy_moderate",
            Experiment::AccuracyLarge => "accuracy_large",
            Experiment::DimensionSweep => "dimension_sweep",
            Experiment::HistogramBulk => "histogram_bulk",
            Experiment::OmegaSweep => "omega_sweep",
            Experiment::ManifoldRmse => "manifold_rmse",
            Experiment::StieltjesCompare => "stieltjes_compare",
            Experiment::D2Comparison => "d2_comparison",
            Experiment::ZeroingComparison => "zeroing_comparison",
        }
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| *c != '_' && *c != '-').flat_map(char::to_lowercase).collect()
}

impl FromStr for Experiment {
    type Err = Error;

    /// Accepts `accuracy_low_snr`, `AccuracyLowSNR`, `accuracy-low-snr`, ...
    fn from_str(s: &str) -> Result<Self> {
        let key = squash(s.trim());
        Experiment::ALL
            .into_iter()
            .find(|e| squash(e.name()) == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    CurveM1,
    KleinBottle,
}

impl Manifold {
    pub fn name(self) -> &'static str {
        match self {
            Manifold::CurveM1 => "curve_m1",
            Manifold::KleinBottle => "klein_bottle",
        }
    }
}

impl FromStr for Manifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match squash(s.trim()).as_str() {
            "curvem1" | "m1" => Ok(Manifold::CurveM1),
            "kleinbottle" | "klein" => Ok(Manifold::KleinBottle),
            _ => Err(Error::Config(format!("unknown manifold '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: Experiment,
    pub n: usize,
    /// Sample sizes for the dimension sweep.
    pub n_grid: Vec<usize>,
    /// Aspect ratios c = n/p; p = round(n/c).
    pub c_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    /// λ = base^α.
    pub lambda_base: LambdaBase,
    pub upsilon: f64,
    pub seeds: Vec<u64>,
    /// Monte Carlo replicates, seeded by child seeds of the first seed.
    pub reps: usize,
    /// Threshold s for the bandwidth search; resampled when absent.
    pub s: Option<f64>,
    pub resample_reps: usize,
    pub resample_level: f64,
    pub omega: OmegaGrid,
    pub bins: usize,
    /// First eigenvalue index (1-based) counted as bulk.
    pub bulk_from: usize,
    /// Rigidity is measured up to index (1 − eps)n.
    pub rigidity_eps: f64,
    pub stieltjes_a: f64,
    pub stieltjes_energies: usize,
    pub stieltjes_etas: usize,
    pub manifold: Manifold,
    /// Manifold scale a = amplitude·√p.
    pub amplitude: f64,
    pub vectors: usize,
    /// Bandwidth of the zeroed-out transition matrix.
    pub zero_h: f64,
    /// 1-based eigenvector compared in the zeroing study.
    pub eigvec_index: usize,
    pub fast: bool,
    pub output_dir: Option<PathBuf>,
}

const FIVE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

impl ExperimentConfig {
    pub fn defaults(name: Experiment) -> Self {
        let mut cfg = ExperimentConfig {
            name,
            n: 200,
            n_grid: vec![50, 100, 150, 200, 250, 300, 350, 400],
            c_grid: vec![0.5, 1.0, 2.0],
            alpha_grid: vec![0.2],
            lambda_base: LambdaBase::P,
            upsilon: 0.5,
            seeds: FIVE_SEEDS.to_vec(),
            reps: 1,
            s: None,
            resample_reps: 200,
            resample_level: 0.95,
            omega: OmegaGrid::default(),
            bins: 60,
            bulk_from: 10,
            rigidity_eps: 0.1,
            stieltjes_a: 0.2,
            stieltjes_energies: 40,
            stieltjes_etas: 20,
            manifold: Manifold::CurveM1,
            amplitude: 20.0,
            vectors: 9,
            zero_h: 35.0,
            eigvec_index: 3,
            fast: false,
            output_dir: None,
        };
        match name {
            Experiment::PhaseSweep => {
                cfg.n = 300;
                cfg.c_grid = vec![1.0];
                cfg.alpha_grid = vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
                cfg.seeds = vec![1];
            }
            Experiment::AccuracyLowSnr => {}
            Experiment::HistogramBulk => {
                cfg.reps = 1000;
                cfg.seeds = vec![1];
            }
            Experiment::AccuracyModerate => cfg.alpha_grid = vec![1.9],
            Experiment::AccuracyLarge => cfg.alpha_grid = vec![5.0],
            Experiment::DimensionSweep => {
                cfg.c_grid = vec![1.0];
                cfg.alpha_grid = vec![0.2, 1.9, 5.0];
            }
            Experiment::OmegaSweep => {
                cfg.n = 300;
                cfg.alpha_grid = vec![0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
                cfg.lambda_base = LambdaBase::N;
                cfg.seeds = vec![1];
            }
            Experiment::ManifoldRmse => {
                cfg.n = 400;
                cfg.reps = 20;
                cfg.seeds = vec![1];
            }
            Experiment::StieltjesCompare => cfg.alpha_grid = vec![1.0],
            Experiment::D2Comparison => cfg.seeds = vec![1],
            Experiment::ZeroingComparison => {
                cfg.n = 400;
                cfg.c_grid = vec![2.0];
                cfg.alpha_grid = vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0];
            }
        }
        cfg
    }

    /// Smaller replicate counts for quick runs.
    pub fn make_fast(&mut self) {
        self.fast = true;
        self.seeds.truncate(2);
        self.resample_reps = self.resample_reps.min(50);
        self.reps = match self.name {
            Experiment::HistogramBulk => self.reps.min(100),
            Experiment::ManifoldRmse => self.reps.min(3),
            _ => self.reps,
        };
    }

    /// Defaults for `name`, optionally reduced by `fast`, then overridden by
    /// the keys in `text`. An `experiment` key must agree with `name` when both
    /// are given.
    pub fn parse(text: &str, name: Option<Experiment>, fast: bool) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut file_name = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "experiment" {
                file_name = Some(v.parse::<Experiment>()?);
            } else {
                pairs.push((lineno + 1, k.to_string(), v.to_string()));
            }
        }
        let name = match (name, file_name) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("config is for {} but {} was requested", b.name(), a.name())))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Config("no experiment named".into())),
        };
        let mut cfg = Self::defaults(name);
        if fast {
            cfg.make_fast();
        }
        for (lineno, k, v) in pairs {
            cfg.set(&k, &v).map_err(|e| Error::Config(format!("line {lineno}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, name: Option<Experiment>, fast: bool) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, name, fast).map_err(|e| match e {
            Error::Config(msg) => Error::Parse { path: path.to_path_buf(), msg },
            other => other,
        })
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "n" => self.n = num(key, v)?,
            "n_grid" => self.n_grid = list(key, v)?,
            "c_grid" => self.c_grid = list(key, v)?,
            "alpha_grid" => self.alpha_grid = list(key, v)?,
            "lambda_base" => {
                self.lambda_base = match v {
                    "n" => LambdaBase::N,
                    "p" => LambdaBase::P,
                    _ => return Err(format!("lambda_base must be n or p, got '{v}'")),
                }
            }
            "upsilon" => self.upsilon = num(key, v)?,
            "seeds" => self.seeds = list(key, v)?,
            "reps" => self.reps = num(key, v)?,
            "s" => self.s = if v == "resample" { None } else { Some(num(key, v)?) },
            "resample_reps" => self.resample_reps = num(key, v)?,
            "resample_level" => self.resample_level = num(key, v)?,
            "omega_l" => self.omega.omega_l = num(key, v)?,
            "omega_u" => self.omega.omega_u = num(key, v)?,
            "omega_t" => self.omega.t = num(key, v)?,
            "bins" => self.bins = num(key, v)?,
            "bulk_from" => self.bulk_from = num(key, v)?,
            "rigidity_eps" => self.rigidity_eps = num(key, v)?,
            "stieltjes_a" => self.stieltjes_a = num(key, v)?,
            "stieltjes_energies" => self.stieltjes_energies = num(key, v)?,
            "stieltjes_etas" => self.stieltjes_etas = num(key, v)?,
            "manifold" => self.manifold = v.parse().map_err(|e: Error| e.to_string())?,
            "amplitude" => self.amplitude = num(key, v)?,
            "vectors" => self.vectors = num(key, v)?,
            "zero_h" => self.zero_h = num(key, v)?,
            "eigvec_index" => self.eigvec_index = num(key, v)?,
            "fast" => self.fast = num(key, v)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 20 || self.n_grid.iter().any(|n| *n < 20) {
            return bad("sample sizes must be at least 20".into());
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return bad("c_grid must be nonempty with positive entries".into());
        }
        if self.alpha_grid.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return bad("alpha_grid entries must be finite and >= 0".into());
        }
        if !(self.upsilon > 0.0 && self.upsilon.is_finite()) {
            return bad(format!("upsilon must be positive, got {}", self.upsilon));
        }
        if self.seeds.is_empty() || self.reps == 0 {
            return bad("need at least one seed and one replicate".into());
        }
        if self.s.is_none() && self.resample_reps < 50 {
            return bad("resample_reps must be at least 50".into());
        }
        if !(self.resample_level > 0.0 && self.resample_level < 1.0) {
            return bad("resample_level must lie in (0,1)".into());
        }
        self.omega.validate()?;
        if self.bins == 0 || self.bulk_from == 0 || self.vectors == 0 || self.eigvec_index == 0 {
            return bad("bins, bulk_from, vectors and eigvec_index must be positive".into());
        }
        if !(self.zero_h > 0.0) || !(self.amplitude > 0.0) {
            return bad("zero_h and amplitude must be positive".into());
        }
        if !(self.rigidity_eps > 0.0 && self.rigidity_eps < 1.0) {
            return bad("rigidity_eps must lie in (0,1)".into());
        }
        Ok(())
    }

    /// The configuration in the same key-value form `parse` reads, with every
    /// field written out.
    pub fn to_kv_string(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        }
        let mut o = String::new();
        let _ = writeln!(o, "experiment = {}", self.name.name());
        let _ = writeln!(o, "n = {}", self.n);
        let _ = writeln!(o, "n_grid = {}", join(&self.n_grid));
        let _ = writeln!(o, "c_grid = {}", join(&self.c_grid));
        let _ = writeln!(o, "alpha_grid = {}", join(&self.alpha_grid));
        let _ = writeln!(o, "lambda_base = {}", if self.lambda_base == LambdaBase::N { "n" } else { "p" });
        let _ = writeln!(o, "upsilon = {}", self.upsilon);
        let _ = writeln!(o, "seeds = {}", join(&self.seeds));
        let _ = writeln!(o, "reps = {}", self.reps);
        let _ = writeln!(o, "s = {}", self.s.map_or("resample".to_string(), |s| s.to_string()));
        let _ = writeln!(o, "resample_reps = {}", self.resample_reps);
        let _ = writeln!(o, "resample_level = {}", self.resample_level);
        let _ = writeln!(o, "omega_l = {}", self.omega.omega_l);
        let _ = writeln!(o, "omega_u = {}", self.omega.omega_u);
        let _ = writeln!(o, "omega_t = {}", self.omega.t);
        let _ = writeln!(o, "bins = {}", self.bins);
        let _ = writeln!(o, "bulk_from = {}", self.bulk_from);
        let _ = writeln!(o, "rigidity_eps = {}", self.rigidity_eps);
        let _ = writeln!(o, "stieltjes_a = {}", self.stieltjes_a);
        let _ = writeln!(o, "stieltjes_energies = {}", self.stieltjes_energies);
        let _ = writeln!(o, "stieltjes_etas = {}", self.stieltjes_etas);
        let _ = writeln!(o, "manifold = {}", self.manifold.name());
        let _ = writeln!(o, "amplitude = {}", self.amplitude);
        let _ = writeln!(o, "vectors = {}", self.vectors);
        let _ = writeln!(o, "zero_h = {}", self.zero_h);
        let _ = writeln!(o, "eigvec_index = {}", self.eigvec_index);
        let _ = writeln!(o, "fast = {}", self.fast);
        if let Some(d) = &self.output_dir {
            let _ = writeln!(o, "output_dir = {}", d.display());
        }
        o
    }

    /// p = round(n/c), at least 1.
    pub fn p_for(n: usize, c: f64) -> usize {
        ((n as f64 / c).round() as usize).max(1)
    }

    pub fn lambda(&self, alpha: f64, n: usize, p: usize) -> f64 {
        let base = match self.lambda_base {
            LambdaBase::N => n,
            LambdaBase::P => p,
        };
        (base as f64).powf(alpha)
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("bad value for {key}: '{v}'"))
}

fn list<T: FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s.trim())).collect()
}
