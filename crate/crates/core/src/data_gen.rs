//! Synthetic point clouds: the spiked model and noisy manifolds.
//!
//! Clean and noise parts are kept separate; the observation is their sum.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::matrix::{parse_rows, Matrix};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CloudKind {
    Spiked,
    Circle,
    CurveM1,
    KleinBottle,
}

impl CloudKind {
    pub fn name(self) -> &'static str {
        match self {
            CloudKind::Spiked => "spiked",
            CloudKind::Circle => "circle",
            CloudKind::CurveM1 => "curve_m1",
            CloudKind::KleinBottle => "klein_bottle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spiked" => Some(CloudKind::Spiked),
            "circle" => Some(CloudKind::Circle),
            "curve_m1" => Some(CloudKind::CurveM1),
            "klein_bottle" => Some(CloudKind::KleinBottle),
            _ => None,
        }
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> Option<Self> {
        [CloudKind::Spiked, CloudKind::Circle, CloudKind::CurveM1, CloudKind::KleinBottle]
            .get(c as usize)
            .copied()
    }
}

#[derive(Debug, Clone)]
pub struct PointCloud {
    /// Rows are the clean signals z_i.
    pub clean: Matrix,
    /// Rows are the noise vectors y_i.
    pub noise: Matrix,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    /// Per-coordinate signal variances. For manifolds these are the sample
    /// variances of the nonzero coordinates before rotation.
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub kind: CloudKind,
}

impl PointCloud {
    /// The observed points x_i = z_i + y_i.
    pub fn noisy(&self) -> Matrix {
        Matrix::from_fn(self.n, self.p, |i, j| self.clean[(i, j)] + self.noise[(i, j)])
    }

    /// Total signal strength Σ λ_l.
    pub fn signal_strength(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn c(&self) -> f64 {
        self.n as f64 / self.p as f64
    }

    /// Apply an orthogonal map to the clean rows.
    pub fn rotate_clean(&mut self, q: &Matrix) -> Result<()> {
        if q.nrows() != self.p || q.ncols() != self.p {
            return Err(Error::ShapeMismatch(q.nrows(), q.ncols(), self.p, self.p));
        }
        self.clean = &self.clean * q.transpose();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseDist {
    GaussianStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaBase {
    N,
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Strengths {
    Explicit(Vec<f64>),
    /// λ_l = base^{α_l}
    Exponents { alpha: Vec<f64>, base: LambdaBase },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub strengths: Strengths,
    pub noise_dist: NoiseDist,
    pub rotate: bool,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn spiked(n: usize, p: usize, lambdas: Vec<f64>, seed: u64) -> Self {
        GeneratorConfig {
            n,
            p,
            d: lambdas.len(),
            strengths: Strengths::Explicit(lambdas),
            noise_dist: NoiseDist::GaussianStd,
            rotate: false,
            seed,
        }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        match &self.strengths {
            Strengths::Explicit(l) => l.clone(),
            Strengths::Exponents { alpha, base } => {
                let b = match base {
                    LambdaBase::N => self.n,
                    LambdaBase::P => self.p,
                } as f64;
                alpha.iter().map(|a| b.powf(*a)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.d < 1 || self.p < self.d {
            return Err(Error::Config(format!("need p >= d >= 1, got p={} d={}", self.p, self.d)));
        }
        let len = match &self.strengths {
            Strengths::Explicit(l) => {
                if l.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Config("signal strengths must be finite and >= 0".into()));
                }
                l.len()
            }
            Strengths::Exponents { alpha, .. } => {
                if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                    return Err(Error::Config("exponents must be finite and >= 0".into()));
                }
                alpha.len()
            }
        };
        if len != self.d {
            return Err(Error::Config(format!("{len} signal strengths given for d={}", self.d)));
        }
        Ok(())
    }
}

/// n×p matrix of standard normals, drawn row by row from the noise stream.
pub fn gaussian_noise(n: usize, p: usize, seed: u64) -> Matrix {
    let mut rng = stream(seed, Stream::Noise);
    let mut m = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            m[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    m
}

pub fn gen_spiked(cfg: &GeneratorConfig) -> Result<PointCloud> {
    cfg.validate()?;
    let lambdas = cfg.lambdas();
    let (n, p, d) = (cfg.n, cfg.p, cfg.d);
    let mut rng = stream(cfg.seed, Stream::Signal);
    let mut clean = Matrix::zeros(n, p);
    for i in 0..n {
        for (l, lam) in lambdas.iter().enumerate() {
            let g: f64 = StandardNormal.sample(&mut rng);
            if *lam > 0.0 {
                clean[(i, l)] = lam.sqrt() * g;
            }
        }
    }
    let mut cloud = PointCloud {
        clean,
        noise: gaussian_noise(n, p, cfg.seed),
        n,
        p,
        d,
        lambdas,
        seed: cfg.seed,
        kind: CloudKind::Spiked,
    };
    if cfg.rotate {
        cloud.rotate_clean(&random_rotation(p, cfg.seed))?;
    }
    Ok(cloud)
}

pub fn gen_circle(n: usize, p: usize, lambda: f64, seed: u64) -> Result<PointCloud> {
    if p < 2 {
        return Err(Error::Config(format!("circle needs p >= 2, got {p}")));
    }
    if n < 2 || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("circle needs n >= 2 and lambda > 0, got n={n} lambda={lambda}")));
    }
    let mut rng = stream(seed, Stream::Signal);
    let r = lambda.sqrt();
    let mut clean = Matrix::zeros(n, p);
    for i in 0..n {
        let theta = rng.random::<f64>() * 2.0 * PI;
        clean[(i, 0)] = r * theta.cos();
        clean[(i, 1)] = r * theta.sin();
    }
    Ok(PointCloud {
        clean,
        noise: gaussian_noise(n, p, seed),
        n,
        p,
        d: 2,
        lambdas: vec![lambda / 2.0, lambda / 2.0],
        seed,
        kind: CloudKind::Circle,
    })
}

/// Unscaled parametrization of the closed curve used in the manifold study.
pub fn curve_m1_point(u: f64) -> [f64; 3] {
    let damp = 1.0 - 0.8 * (-8.0 * u.cos().powi(2)).exp();
    let s = u / (2.0 * PI);
    [2.0 * u.cos(), 3.0 * damp * (2.0 * PI * s * s).cos(), damp * u.sin()]
}

/// Unscaled Klein bottle parametrization in four coordinates.
pub fn klein_bottle_point(u1: f64, u2: f64) -> [f64; 4] {
    let r = 2.0 * u1.cos() + 1.0;
    [
        r * u2.cos(),
        r * u2.sin(),
        2.0 * u1.sin() * (u2 / 2.0).cos(),
        2.0 * u1.sin() * (u2 / 2.0).sin(),
    ]
}

fn manifold_cloud<const K: usize>(
    n: usize,
    p: usize,
    a: f64,
    rotate: bool,
    seed: u64,
    kind: CloudKind,
    mut sample: impl FnMut(&mut rand_chacha::ChaCha20Rng) -> [f64; K],
) -> Result<PointCloud> {
    if p < K {
        return Err(Error::Config(format!("{} needs p >= {K}, got {p}", kind.name())));
    }
    if n < 2 || !(a > 0.0 && a.is_finite()) {
        return Err(Error::Config(format!("need n >= 2 and a > 0, got n={n} a={a}")));
    }
    let mut rng = stream(seed, Stream::Signal);
    let mut clean = Matrix::zeros(n, p);
    for i in 0..n {
        let pt = sample(&mut rng);
        for (k, v) in pt.iter().enumerate() {
            clean[(i, k)] = a * v;
        }
    }
    let lambdas = (0..K)
        .map(|k| {
            let mean = (0..n).map(|i| clean[(i, k)]).sum::<f64>() / n as f64;
            (0..n).map(|i| (clean[(i, k)] - mean).powi(2)).sum::<f64>() / n as f64
        })
        .collect();
    let mut cloud = PointCloud {
        clean,
        noise: gaussian_noise(n, p, seed),
        n,
        p,
        d: K,
        lambdas,
        seed,
        kind,
    };
    if rotate {
        cloud.rotate_clean(&random_rotation(p, seed))?;
    }
    Ok(cloud)
}

pub fn gen_curve_m1(n: usize, p: usize, a: f64, rotate: bool, seed: u64) -> Result<PointCloud> {
    manifold_cloud(n, p, a, rotate, seed, CloudKind::CurveM1, |rng| {
        // u uniform on (0, 2π]
        let u = (1.0 - rng.random::<f64>()) * 2.0 * PI;
        curve_m1_point(u)
    })
}

pub fn gen_klein_bottle(n: usize, p: usize, a: f64, rotate: bool, seed: u64) -> Result<PointCloud> {
    manifold_cloud(n, p, a, rotate, seed, CloudKind::KleinBottle, |rng| {
        let u1 = rng.random::<f64>() * 2.0 * PI;
        let u2 = rng.random::<f64>() * 2.0 * PI;
        klein_bottle_point(u1, u2)
    })
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q.
pub fn random_rotation(p: usize, seed: u64) -> Matrix {
    let mut rng = stream(seed, Stream::Rotation);
    let g = Matrix::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

const BINARY_MAGIC: &[u8; 8] = b"GLSPCLD1";

fn header_line(c: &PointCloud) -> String {
    let mut s = format!("{},{},{},{},{}", c.n, c.p, c.d, c.kind.name(), c.seed);
    for l in &c.lambdas {
        let _ = write!(s, ",{l}");
    }
    s
}

fn push_rows(out: &mut String, m: &Matrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
}

/// CSV layout: a names line `n,p,d,kind,seed`, a values line (followed by
/// the d signal strengths), n clean rows, then n noise rows.
pub fn write_cloud_csv(path: &Path, c: &PointCloud) -> Result<()> {
    let mut out = String::from("n,p,d,kind,seed\n");
    out.push_str(&header_line(c));
    out.push('\n');
    push_rows(&mut out, &c.clean);
    push_rows(&mut out, &c.noise);
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_cloud_csv(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("n,p,d,kind,seed") {
        return Err(bad("expected header `n,p,d,kind,seed`".into()));
    }
    let meta: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("missing header values".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    if meta.len() < 5 {
        return Err(bad("header values need at least 5 fields".into()));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(format!("bad {what}")));
    let (n, p, d) = (num(meta[0], "n")?, num(meta[1], "p")?, num(meta[2], "d")?);
    let kind = CloudKind::parse(meta[3]).ok_or_else(|| bad(format!("unknown kind `{}`", meta[3])))?;
    let seed = meta[4].parse::<u64>().map_err(|_| bad("bad seed".into()))?;
    let lambdas = meta[5..]
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad lambda `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    if lambdas.len() != d {
        return Err(bad(format!("expected {d} lambdas, got {}", lambdas.len())));
    }
    let clean = parse_rows(&mut lines, n, p).map_err(&bad)?;
    let noise = parse_rows(&mut lines, n, p).map_err(&bad)?;
    Ok(PointCloud { clean, noise, n, p, d, lambdas, seed, kind })
}

/// Little-endian binary layout: magic, n, p, d (u64), kind (u8), seed (u64),
/// d lambdas, clean row-major, noise row-major (f64).
pub fn write_cloud_binary(path: &Path, c: &PointCloud) -> Result<()> {
    let mut out = Vec::with_capacity(48 + 8 * (c.d + 2 * c.n * c.p));
    out.extend_from_slice(BINARY_MAGIC);
    for v in [c.n as u64, c.p as u64, c.d as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(c.kind.code());
    out.extend_from_slice(&c.seed.to_le_bytes());
    for l in &c.lambdas {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for m in [&c.clean, &c.noise] {
        for i in 0..c.n {
            for j in 0..c.p {
                out.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_cloud_binary(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |msg: &str| Error::Parse { path: path.to_path_buf(), msg: msg.to_string() };
    if bytes.len() < 41 || &bytes[..8] != BINARY_MAGIC {
        return Err(bad("not a cloud file"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (n, p, d) = (u64_at(8) as usize, u64_at(16) as usize, u64_at(24) as usize);
    let kind = CloudKind::from_code(bytes[32]).ok_or_else(|| bad("unknown kind"))?;
    let seed = u64_at(33);
    let need = 41 + 8 * (d + 2 * n * p);
    if bytes.len() != need {
        return Err(bad("truncated or oversized body"));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let lambdas = (0..d).map(|l| f64_at(41 + 8 * l)).collect();
    let base = 41 + 8 * d;
    let clean = Matrix::from_fn(n, p, |i, j| f64_at(base + 8 * (i * p + j)));
    let base = base + 8 * n * p;
    let noise = Matrix::from_fn(n, p, |i, j| f64_at(base + 8 * (i * p + j)));
    Ok(PointCloud { clean, noise, n, p, d, lambdas, seed, kind })
}
