//! Distance-quantile bandwidths and the adaptive choice of the quantile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_gen::gaussian_noise;
use crate::error::{Error, Result};
use crate::kernels::{affinity, normalized_affinity, pairwise_sq_dists, KernelParams};
use crate::matrix::Matrix;
use crate::rng::child_seed;
use crate::spectrum::eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QuantileRule {
    /// The ⌈ωm⌉-th smallest of the m values.
    #[default]
    LowerOrder,
    /// Linear interpolation at position ω(m − 1), zero-based.
    Interpolated,
}

/// ⌈x⌉ that ignores round-off just above an integer.
fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Quantile of already sorted values.
pub fn sorted_quantile(sorted: &[f64], omega: f64, rule: QuantileRule) -> Result<f64> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Config(format!("quantile level must lie in (0,1), got {omega}")));
    }
    let m = sorted.len();
    if m == 0 {
        return Err(Error::EmptyGrid);
    }
    Ok(match rule {
        QuantileRule::LowerOrder => sorted[ceil_tol(omega * m as f64).clamp(1, m) - 1],
        QuantileRule::Interpolated => {
            let pos = omega * (m - 1) as f64;
            let k = pos.floor() as usize;
            if k + 1 >= m {
                sorted[m - 1]
            } else {
                sorted[k] + (pos - k as f64) * (sorted[k + 1] - sorted[k])
            }
        }
    })
}

/// Sorted off-diagonal entries of a distance matrix (upper triangle).
pub fn sorted_offdiag(d2: &Matrix) -> Vec<f64> {
    let n = d2.nrows();
    let mut v = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for j in 1..n {
        for i in 0..j {
            v.push(d2[(i, j)]);
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

/// The ⌈ω·m⌉-th order statistic of the m = n(n−1)/2 pairwise squared distances.
pub fn quantile_bandwidth(d2: &Matrix, omega: f64) -> Result<f64> {
    quantile_bandwidth_with(d2, omega, QuantileRule::LowerOrder)
}

pub fn quantile_bandwidth_with(d2: &Matrix, omega: f64, rule: QuantileRule) -> Result<f64> {
    if d2.nrows() < 2 {
        return Err(Error::Config("need at least two points".into()));
    }
    sorted_quantile(&sorted_offdiag(d2), omega, rule)
}

/// Range of k searched for eigenvalue ratio exceedances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutlierWindow {
    /// k ∈ [1, n−1].
    Full,
    /// k ∈ [1, min(n−1, limit)].
    Upto(usize),
}

impl OutlierWindow {
    /// k ≤ ⌊min(n, p)/2⌋.
    pub fn top_half(n: usize, p: usize) -> Self {
        OutlierWindow::Upto(n.min(p) / 2)
    }

    fn limit(self, n: usize) -> usize {
        match self {
            OutlierWindow::Full => n.saturating_sub(1),
            OutlierWindow::Upto(l) => l.min(n.saturating_sub(1)),
        }
    }
}

/// λ_k/λ_{k+1} for descending eigenvalues and 1-based k. A nonpositive
/// denominator under a positive numerator counts as +∞; two nonpositive
/// values give no exceedance.
fn ratio(eigs: &[f64], k: usize) -> f64 {
    let (a, b) = (eigs[k - 1], eigs[k]);
    if b > 0.0 {
        a / b
    } else if a > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Largest k with λ_k/λ_{k+1} ≥ 1 + s, or 0.
pub fn count_outliers(eigs: &[f64], s: f64) -> usize {
    count_outliers_in(eigs, s, OutlierWindow::Full)
}

pub fn count_outliers_in(eigs: &[f64], s: f64, window: OutlierWindow) -> usize {
    let kmax = window.limit(eigs.len());
    (1..=kmax).rev().find(|&k| ratio(eigs, k) >= 1.0 + s).unwrap_or(0)
}

/// Largest λ_k/λ_{k+1} over k ∈ [k_lo, k_hi].
pub fn max_ratio(eigs: &[f64], k_lo: usize, k_hi: usize) -> f64 {
    let hi = k_hi.min(eigs.len().saturating_sub(1));
    (k_lo.max(1)..=hi).map(|k| ratio(eigs, k)).fold(f64::NEG_INFINITY, f64::max)
}

/// Null calibration of the threshold s: the `quantile_level` quantile of the
/// largest bulk eigenvalue ratio over pure-noise affinity matrices, minus one.
///
/// Each replicate uses p = round(n/c), h = median pairwise squared distance
/// and ratios over k ∈ [2, ⌊min(n,p)/2⌋].
pub fn resample_threshold(c: f64, n: usize, upsilon: f64, reps: usize, quantile_level: f64, seed: u64) -> Result<f64> {
    if reps < 50 {
        return Err(Error::Config(format!("resampling needs at least 50 replicates, got {reps}")));
    }
    let stats = resample_statistics(c, n, upsilon, reps, seed)?;
    let mut sorted = stats;
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&sorted, quantile_level, QuantileRule::LowerOrder)? - 1.0)
}

/// Per-replicate statistics behind [`resample_threshold`], in replicate order.
pub fn resample_statistics(c: f64, n: usize, upsilon: f64, reps: usize, seed: u64) -> Result<Vec<f64>> {
    if !(c > 0.0) || n < 4 {
        return Err(Error::Config(format!("need c > 0 and n >= 4, got c={c} n={n}")));
    }
    let p = ((n as f64 / c).round() as usize).max(1);
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let y = gaussian_noise(n, p, child_seed(seed, r));
            let d2 = pairwise_sq_dists(&y);
            let h = quantile_bandwidth(&d2, 0.5)?;
            let w = affinity(&d2, KernelParams::new(upsilon, h)?)?;
            let ev = eigenvalues(&w)?;
            Ok(max_ratio(&ev, 2, n.min(p) / 2))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub omega_l: f64,
    pub omega_u: f64,
    pub t: usize,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        OmegaGrid { omega_l: 0.05, omega_u: 0.95, t: 91 }
    }
}

impl OmegaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.omega_l && self.omega_l < self.omega_u && self.omega_u < 1.0) || self.t < 1 {
            return Err(Error::Config(format!(
                "need 0 < omega_l < omega_u < 1 and T >= 1, got {} {} {}",
                self.omega_l, self.omega_u, self.t
            )));
        }
        Ok(())
    }

    /// ω_i = ω_L + (i/T)(ω_U − ω_L), i = 0..=T.
    pub fn points(&self) -> Vec<f64> {
        (0..=self.t)
            .map(|i| self.omega_l + (i as f64 / self.t as f64) * (self.omega_u - self.omega_l))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSelection {
    pub omega: f64,
    pub h: f64,
    pub s: f64,
    pub grid: OmegaGrid,
    pub k_profile: Vec<(f64, usize)>,
}

impl OmegaSelection {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Largest ω among the maximisers of k.
pub fn pick_largest_argmax(profile: &[(f64, usize)]) -> Option<(f64, usize)> {
    let best = profile.iter().map(|(_, k)| *k).max()?;
    profile.iter().rev().find(|(_, k)| *k == best).copied()
}

/// Which spectrum the outliers are counted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SelectionTarget {
    #[default]
    Affinity,
    /// A = D⁻¹W, through its symmetric similar matrix D^{−1/2}WD^{−1/2}.
    Transition,
}

/// Adaptive choice of ω on the observed points `x`, counting outliers of W.
pub fn select_omega(x: &Matrix, upsilon: f64, grid: OmegaGrid, s: f64, window: OutlierWindow) -> Result<OmegaSelection> {
    select_omega_with(x, upsilon, grid, s, window, SelectionTarget::Affinity)
}

pub fn select_omega_with(
    x: &Matrix,
    upsilon: f64,
    grid: OmegaGrid,
    s: f64,
    window: OutlierWindow,
    target: SelectionTarget,
) -> Result<OmegaSelection> {
    grid.validate()?;
    if !(s > 0.0) {
        return Err(Error::Config(format!("threshold s must be positive, got {s}")));
    }
    let d2 = pairwise_sq_dists(x);
    let sorted = sorted_offdiag(&d2);
    let omegas = grid.points();
    let hs = omegas
        .iter()
        .map(|w| sorted_quantile(&sorted, *w, QuantileRule::LowerOrder))
        .collect::<Result<Vec<_>>>()?;
    let ks = hs
        .par_iter()
        .map(|h| {
            let w = affinity(&d2, KernelParams::new(upsilon, *h)?)?;
            let ev = match target {
                SelectionTarget::Affinity => eigenvalues(&w)?,
                SelectionTarget::Transition => eigenvalues(&normalized_affinity(&w))?,
            };
            Ok(count_outliers_in(&ev, s, window))
        })
        .collect::<Result<Vec<usize>>>()?;
    let k_profile: Vec<(f64, usize)> = omegas.iter().copied().zip(ks).collect();
    let idx = {
        let best = k_profile.iter().map(|(_, k)| *k).max().unwrap_or(0);
        k_profile.iter().rposition(|(_, k)| *k == best).unwrap_or(0)
    };
    Ok(OmegaSelection { omega: omegas[idx], h: hs[idx], s, grid, k_profile })
}
