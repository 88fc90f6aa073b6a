//! Eigendecompositions and the spectral diagnostics built on them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Once;

use faer::Side;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::matrix::{is_finite, same_shape, symmetrize, Matrix};
use crate::mp_law::MpMeasure;

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Leading eigenvectors as columns, in the same order.
    pub eigenvectors: Option<Matrix>,
    pub source: String,
}

/// One decomposition is one sequential job; concurrency comes from running
/// several at once. This also keeps results independent of the thread count.
fn sequential_kernels() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

fn check_square(m: &Matrix) -> Result<()> {
    sequential_kernels();
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(m.nrows(), m.ncols(), m.ncols(), m.nrows()));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Descending eigenvalues of the symmetric part of `m`.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    check_square(m)?;
    let s = symmetrize(m);
    let mut ev = s.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::NoConvergence)?;
    ev.reverse();
    Ok(ev)
}

/// Full descending spectrum plus the top `want_vectors` eigenvectors.
pub fn sym_eigs(m: &Matrix, want_vectors: usize, source: &str) -> Result<SpectrumResult> {
    if want_vectors == 0 {
        return Ok(SpectrumResult { eigenvalues: eigenvalues(m)?, eigenvectors: None, source: source.into() });
    }
    check_square(m)?;
    let n = m.nrows();
    let k = want_vectors.min(n);
    let s = symmetrize(m);
    let evd = s.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence)?;
    let diag = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues: Vec<f64> = (0..n).rev().map(|i| diag[i]).collect();
    let vecs = Matrix::from_fn(n, k, |i, j| u[(i, n - 1 - j)]);
    Ok(SpectrumResult { eigenvalues, eigenvectors: Some(vecs), source: source.into() })
}

/// ‖Ma − Mb‖ for the symmetrized difference.
pub fn op_norm_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    same_shape(a, b)?;
    let d = a - b;
    let ev = eigenvalues(&d)?;
    Ok(ev.first().map_or(0.0, |x| x.abs()).max(ev.last().map_or(0.0, |x| x.abs())))
}

/// max over skip < i ≤ (1−eps)n of |λ_i − γ(i)| with 1-based i.
pub fn bulk_rigidity(eigs: &[f64], measure: &MpMeasure, skip: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("eps must lie in (0,1), got {eps}")));
    }
    let n = eigs.len();
    let upper = ((1.0 - eps) * n as f64 + 1e-9).floor() as usize;
    let mut sup = 0.0f64;
    for i in (skip + 1)..=upper.min(n) {
        sup = sup.max((eigs[i - 1] - measure.typical_location(i, n)?).abs());
    }
    Ok(sup)
}

/// m(z) = (1/n) Σ 1/(λ_i − z).
pub fn stieltjes(eigs: &[f64], z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane(z.im));
    }
    let s: Complex64 = eigs.iter().map(|l| 1.0 / (Complex64::new(*l, 0.0) - z)).sum();
    Ok(s / eigs.len() as f64)
}

/// Spectral parameters E + iη with a ≤ E ≤ 1/a and n^{−1/2+α/4+a} ≤ η ≤ 1/a.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StieltjesGrid {
    pub a: f64,
    pub alpha: f64,
    pub eta_min: f64,
    pub points: Vec<(f64, f64)>,
}

impl StieltjesGrid {
    pub fn new(a: f64, alpha: f64, n: usize, n_energy: usize, n_eta: usize) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("domain constant must lie in (0,1), got {a}")));
        }
        let eta_min = (n as f64).powf(-0.5 + alpha / 4.0 + a);
        let eta_max = 1.0 / a;
        if eta_min > eta_max || n_energy == 0 || n_eta == 0 {
            return Err(Error::EmptyGrid);
        }
        let (e0, e1) = (a, 1.0 / a);
        let mut points = Vec::with_capacity(n_energy * n_eta);
        for k in 0..n_eta {
            let t = if n_eta == 1 { 0.0 } else { k as f64 / (n_eta - 1) as f64 };
            let eta = eta_min * (eta_max / eta_min).powf(t);
            for i in 0..n_energy {
                let s = if n_energy == 1 { 0.0 } else { i as f64 / (n_energy - 1) as f64 };
                points.push((e0 + (e1 - e0) * s, eta));
            }
        }
        Ok(StieltjesGrid { a, alpha, eta_min, points })
    }

    pub fn contains(&self, e: f64, eta: f64, n: usize) -> bool {
        let lo = (n as f64).powf(-0.5 + self.alpha / 4.0 + self.a);
        let tol = 1e-12;
        e >= self.a - tol && e <= 1.0 / self.a + tol && eta >= lo - tol && eta <= 1.0 / self.a + tol
    }
}

/// sup over grid points of |m_a(z) − m_b(z)| from precomputed spectra.
pub fn stieltjes_compare_eigs(ea: &[f64], eb: &[f64], grid: &StieltjesGrid) -> Result<f64> {
    if ea.len() != eb.len() {
        return Err(Error::ShapeMismatch(ea.len(), 1, eb.len(), 1));
    }
    if grid.points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut sup = 0.0f64;
    for &(e, eta) in &grid.points {
        let z = Complex64::new(e, eta);
        sup = sup.max((stieltjes(ea, z)? - stieltjes(eb, z)?).norm());
    }
    Ok(sup)
}

pub fn stieltjes_compare(a: &Matrix, b: &Matrix, grid: &StieltjesGrid) -> Result<f64> {
    same_shape(a, b)?;
    stieltjes_compare_eigs(&eigenvalues(a)?, &eigenvalues(b)?, grid)
}

/// Per-column min(‖u−v‖, ‖u+v‖)/√n.
pub fn eigvec_rmse(u: &Matrix, v: &Matrix) -> Result<Vec<f64>> {
    same_shape(u, v)?;
    let n = u.nrows() as f64;
    Ok((0..u.ncols())
        .map(|j| {
            let (mut minus, mut plus) = (0.0, 0.0);
            for i in 0..u.nrows() {
                minus += (u[(i, j)] - v[(i, j)]).powi(2);
                plus += (u[(i, j)] + v[(i, j)]).powi(2);
            }
            f64::min(minus, plus).sqrt() / n.sqrt()
        })
        .collect())
}

/// True when two of the first `k + 1` eigenvalues are closer than 1e−8, in
/// which case individual eigenvectors are not well defined.
pub fn near_degenerate(eigs: &[f64], k: usize) -> bool {
    eigs.iter().take(k + 1).collect::<Vec<_>>().windows(2).any(|w| (w[0] - w[1]).abs() < 1e-8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[k], self.edges[k + 1], c);
        }
        fs::write(path, out).map_err(io_err(path))
    }
}

/// Histogram over the sample range. Eigenvalues within 1e−8 of `drop_atom_at`
/// are removed first.
pub fn esd_histogram(eigs: &[f64], bins: usize, drop_atom_at: Option<f64>) -> Result<Histogram> {
    let kept = filter_atom(eigs, drop_atom_at);
    let (mut lo, mut hi) = kept.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if kept.is_empty() {
        lo = 0.0;
        hi = 1.0;
    } else if hi - lo <= 0.0 {
        lo -= 0.5;
        hi += 0.5;
    }
    esd_histogram_range(&kept, bins, lo, hi, None)
}

fn filter_atom(eigs: &[f64], atom: Option<f64>) -> Vec<f64> {
    match atom {
        Some(a) => eigs.iter().copied().filter(|v| (v - a).abs() > 1e-8).collect(),
        None => eigs.to_vec(),
    }
}

/// Histogram on [lo, hi]; values outside are ignored, `hi` falls in the last bin.
pub fn esd_histogram_range(eigs: &[f64], bins: usize, lo: f64, hi: f64, drop_atom_at: Option<f64>) -> Result<Histogram> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::Config(format!("need bins >= 1 and hi > lo, got {bins}, [{lo}, {hi}]")));
    }
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    for v in filter_atom(eigs, drop_atom_at) {
        if v < lo || v > hi {
            continue;
        }
        let k = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// `index,eigenvalue` with 1-based indices.
pub fn write_spectrum_csv(path: &Path, eigs: &[f64]) -> Result<()> {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in eigs.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, v);
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Leading right eigenvectors of the row-stochastic matrix D⁻¹W, obtained
/// from the symmetric D^{−1/2}WD^{−1/2} and rescaled to unit length.
pub fn transition_eigvecs(w: &Matrix, k: usize, source: &str) -> Result<SpectrumResult> {
    check_square(w)?;
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[(i, j)]).sum()).collect();
    if let Some(i) = deg.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::DegenerateRow(i));
    }
    let s: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let sym = Matrix::from_fn(n, n, |i, j| s[i] * w[(i, j)] * s[j]);
    let mut res = sym_eigs(&sym, k.max(1), source)?;
    if let Some(v) = res.eigenvectors.as_mut() {
        for j in 0..v.ncols() {
            let mut norm = 0.0;
            for i in 0..n {
                v[(i, j)] *= s[i];
                norm += v[(i, j)] * v[(i, j)];
            }
            let norm = norm.sqrt();
            for i in 0..n {
                v[(i, j)] /= norm;
            }
        }
    }
    Ok(res)
}
