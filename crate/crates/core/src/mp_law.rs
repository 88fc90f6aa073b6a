//! Marchenko–Pastur measures, their shifts, typical locations and the
//! regime constants that go with them.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

const PANELS: usize = 4096;
const GL_ORDER: usize = 8;

/// Where σ² enters the bulk edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeConvention {
    /// λ± = σ²(1 ± √c)²; the continuous part then carries mass min(1, 1/c).
    #[default]
    Standard,
    /// λ± = (1 ± σ²√c)², with the continuous part rescaled so the total mass is one.
    Printed,
}

pub fn mp_edges(c: f64, sigma2: f64) -> (f64, f64) {
    mp_edges_with(c, sigma2, EdgeConvention::Standard)
}

pub fn mp_edges_with(c: f64, sigma2: f64, conv: EdgeConvention) -> (f64, f64) {
    let r = c.sqrt();
    match conv {
        EdgeConvention::Standard => (sigma2 * (1.0 - r).powi(2), sigma2 * (1.0 + r).powi(2)),
        EdgeConvention::Printed => ((1.0 - sigma2 * r).powi(2), (1.0 + sigma2 * r).powi(2)),
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 0 { 1.0 } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            dp = order as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// A (possibly shifted) MP law with an atom at the shift location.
#[derive(Debug, Clone)]
pub struct MpMeasure {
    pub c: f64,
    pub sigma2: f64,
    pub shift: f64,
    pub point_mass_at_zero: f64,
    pub convention: EdgeConvention,
    lo: f64,
    hi: f64,
    /// density normalisation applied on top of the raw formula
    scale: f64,
    /// cumulative continuous mass at panel boundaries in θ
    cum: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
}

impl MpMeasure {
    pub fn new(c: f64, sigma2: f64) -> Result<Self> {
        Self::with_convention(c, sigma2, 0.0, EdgeConvention::Standard)
    }

    pub fn with_convention(c: f64, sigma2: f64, shift: f64, convention: EdgeConvention) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && sigma2 > 0.0 && sigma2.is_finite() && shift.is_finite()) {
            return Err(Error::Config(format!("MP law needs c > 0, sigma2 > 0; got c={c} sigma2={sigma2}")));
        }
        let (lo, hi) = mp_edges_with(c, sigma2, convention);
        let atom = (1.0 - 1.0 / c).max(0.0);
        let mut m = MpMeasure {
            c,
            sigma2,
            shift,
            point_mass_at_zero: atom,
            convention,
            lo,
            hi,
            scale: 1.0,
            cum: Vec::new(),
            gl: gauss_legendre(GL_ORDER),
        };
        m.build_table();
        if convention == EdgeConvention::Printed {
            let raw = *m.cum.last().unwrap();
            m.scale = (1.0 - atom) / raw;
            m.cum.iter_mut().for_each(|v| *v *= m.scale);
        }
        Ok(m)
    }

    /// T_s applied to the measure: every mass point moves right by `s`.
    pub fn shifted(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.shift += s;
        m
    }

    /// Support of the continuous part, after shifting.
    pub fn edges(&self) -> (f64, f64) {
        (self.lo + self.shift, self.hi + self.shift)
    }

    pub fn atom_location(&self) -> f64 {
        self.shift
    }

    fn raw_density(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi || x <= 0.0 {
            return 0.0;
        }
        self.scale * ((self.hi - x) * (x - self.lo)).sqrt() / (2.0 * PI * self.sigma2 * self.c * x)
    }

    /// Continuous density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.raw_density(x - self.shift)
    }

    fn x_of_theta(&self, t: f64) -> f64 {
        self.lo + (self.hi - self.lo) * (t / 2.0).sin().powi(2)
    }

    fn theta_of_x(&self, x: f64) -> f64 {
        let u = (x - self.lo) / (self.hi - self.lo);
        2.0 * u.clamp(0.0, 1.0).sqrt().asin()
    }

    /// Density pulled back to θ, without the normalisation factor. Smooth on
    /// [0, π] even when the lower edge touches zero.
    fn theta_integrand(&self, t: f64) -> f64 {
        let half = (self.hi - self.lo) / 2.0;
        let x = self.x_of_theta(t);
        if x <= 0.0 {
            return 0.0;
        }
        half * half * t.sin().powi(2) / (2.0 * PI * self.sigma2 * self.c * x)
    }

    fn integrate_theta(&self, t0: f64, t1: f64) -> f64 {
        let (nodes, weights) = &self.gl;
        let (mid, half) = ((t0 + t1) / 2.0, (t1 - t0) / 2.0);
        nodes.iter().zip(weights).map(|(x, w)| w * self.theta_integrand(mid + half * x)).sum::<f64>() * half
    }

    fn build_table(&mut self) {
        let dt = PI / PANELS as f64;
        let mut cum = Vec::with_capacity(PANELS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for k in 0..PANELS {
            acc += self.integrate_theta(k as f64 * dt, (k + 1) as f64 * dt);
            cum.push(acc);
        }
        self.cum = cum;
    }

    /// Mass of the continuous part.
    pub fn continuous_mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn continuous_cdf_theta(&self, t: f64) -> f64 {
        let dt = PI / PANELS as f64;
        let k = ((t / dt).floor() as usize).min(PANELS - 1);
        self.cum[k] + self.scale * self.integrate_theta(k as f64 * dt, t)
    }

    fn continuous_cdf(&self, y: f64) -> f64 {
        if y <= self.lo {
            0.0
        } else if y >= self.hi {
            self.continuous_mass()
        } else {
            self.continuous_cdf_theta(self.theta_of_x(y))
        }
    }

    /// Mass of the continuous part on (a, b].
    pub fn continuous_mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.continuous_cdf(b - self.shift) - self.continuous_cdf(a - self.shift)).max(0.0)
    }

    /// μ((−∞, x]).
    pub fn cdf(&self, x: f64) -> f64 {
        let y = x - self.shift;
        let atom = if y >= 0.0 { self.point_mass_at_zero } else { 0.0 };
        (atom + self.continuous_cdf(y)).min(1.0)
    }

    /// μ([x, ∞)).
    pub fn upper_mass(&self, x: f64) -> f64 {
        let y = x - self.shift;
        let atom = if y <= 0.0 { self.point_mass_at_zero } else { 0.0 };
        atom + self.continuous_mass() - self.continuous_cdf(y)
    }

    /// Largest γ with μ([γ, ∞)) ≥ j/n.
    pub fn typical_location(&self, j: usize, n: usize) -> Result<f64> {
        if j == 0 || j > n {
            return Err(Error::Config(format!("typical location needs 1 <= j <= n, got j={j} n={n}")));
        }
        let q = j as f64 / n as f64;
        let mc = self.continuous_mass();
        if q > mc + 1e-12 && self.point_mass_at_zero > 0.0 {
            // only reachable by including the atom
            return Ok(self.atom_location());
        }
        // solve continuous_cdf(θ) = mc − q, continuous_cdf increasing in θ
        let target = (mc - q).max(0.0);
        let dt = PI / PANELS as f64;
        let k = self.cum.partition_point(|v| *v < target).clamp(1, PANELS);
        let (mut a, mut b) = ((k - 1) as f64 * dt, k as f64 * dt);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.continuous_cdf_theta(m) < target {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        Ok(self.x_of_theta(0.5 * (a + b)) + self.shift)
    }

    /// All n typical locations, descending.
    pub fn typical_locations(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n).map(|j| self.typical_location(j, n)).collect()
    }

    /// Rows (x, density, cdf) on a uniform grid covering the support.
    pub fn table(&self, points: usize) -> Vec<(f64, f64, f64)> {
        let (lo, hi) = self.edges();
        let lo = lo.min(self.atom_location());
        let pad = 0.05 * (hi - lo).max(1e-12);
        let (a, b) = (lo - pad, hi + pad);
        let m = points.max(2);
        (0..m)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (m - 1) as f64;
                (x, self.density(x), self.cdf(x))
            })
            .collect()
    }

    pub fn write_table_csv(&self, path: &Path, points: usize) -> Result<()> {
        let mut out = String::from("x,density,cdf\n");
        for (x, d, f) in self.table(points) {
            let _ = writeln!(out, "{x},{d},{f}");
        }
        fs::write(path, out).map_err(io_err(path))
    }
}

fn f(x: f64, upsilon: f64) -> f64 {
    (-upsilon * x).exp()
}

fn f_prime(x: f64, upsilon: f64) -> f64 {
    -upsilon * (-upsilon * x).exp()
}

/// τ = 2(λ/p + 1).
pub fn tau(lambda: f64, p: f64) -> f64 {
    2.0 * (lambda / p + 1.0)
}

/// ς(λ) = f(0) + 2f'(τ) − f(τ).
pub fn varsigma(lambda: f64, p: f64, upsilon: f64) -> f64 {
    let t = tau(lambda, p);
    1.0 + 2.0 * f_prime(t, upsilon) - f(t, upsilon)
}

/// ν_λ = T_{ς(λ)} μ_{c, −2f'(τ)}.
pub fn nu_lambda(c: f64, p: usize, lambda: f64, upsilon: f64) -> Result<MpMeasure> {
    nu_lambda_with(c, p, lambda, upsilon, EdgeConvention::Standard)
}

pub fn nu_lambda_with(c: f64, p: usize, lambda: f64, upsilon: f64, conv: EdgeConvention) -> Result<MpMeasure> {
    check_signal(lambda, upsilon)?;
    let p = p as f64;
    let sigma2 = -2.0 * f_prime(tau(lambda, p), upsilon);
    MpMeasure::with_convention(c, sigma2, varsigma(lambda, p, upsilon), conv)
}

/// Bulk law for the affinity matrix built with bandwidth h = λ + p.
pub fn nu_tilde0(c: f64, p: usize, lambda: f64, upsilon: f64) -> Result<MpMeasure> {
    check_signal(lambda, upsilon)?;
    let p = p as f64;
    let h = lambda + p;
    let eta = 2.0 * p * upsilon * (-2.0 * p * upsilon / h).exp() / h;
    let e = (-upsilon * tau(lambda, p) * p / h).exp();
    let shift = 1.0 - (2.0 * upsilon * p / h) * e - e;
    MpMeasure::with_convention(c, eta, shift, EdgeConvention::Standard)
}

/// Bulk law for n·A in the bounded regime: T_{ς(0)} μ_{c, −2f'(τ(0))/f(τ(λ))}.
pub fn nu_check0(c: f64, p: usize, lambda: f64, upsilon: f64) -> Result<MpMeasure> {
    check_signal(lambda, upsilon)?;
    let p = p as f64;
    let sigma2 = -2.0 * f_prime(tau(0.0, p), upsilon) / f(tau(lambda, p), upsilon);
    MpMeasure::with_convention(c, sigma2, varsigma(0.0, p, upsilon), EdgeConvention::Standard)
}

fn check_signal(lambda: f64, upsilon: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite() && upsilon > 0.0 && upsilon.is_finite()) {
        return Err(Error::Config(format!("need lambda >= 0 and upsilon > 0, got {lambda}, {upsilon}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeClass {
    Bounded,
    SlowSub,
    SlowSuper,
    Moderate,
    Large,
    VeryLarge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub alpha: f64,
    pub class: RegimeClass,
    /// Bound on the number of outliers when λ is a fixed constant.
    pub s_bound: u8,
    pub d_frak: Option<usize>,
    pub b_alpha: Option<f64>,
    pub t_alpha: Option<f64>,
}

/// ⌈x⌉ that ignores round-off just above an integer.
fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Regime constants for λ ≍ n^α. `t_const` is the constant C in T_α.
pub fn classify_regime(alpha: f64, lambda: f64, n: usize, c: f64, t: f64, t_const: f64) -> Result<ScalingRegime> {
    if !(alpha >= 0.0 && alpha.is_finite()) || !(t > 0.0 && t < 1.0) {
        return Err(Error::Config(format!("need alpha >= 0 and t in (0,1), got {alpha}, {t}")));
    }
    let class = if alpha > 2.0 / t + 1.0 {
        RegimeClass::VeryLarge
    } else if alpha == 0.0 {
        RegimeClass::Bounded
    } else if alpha < 0.5 {
        RegimeClass::SlowSub
    } else if alpha < 1.0 {
        RegimeClass::SlowSuper
    } else if alpha < 2.0 {
        RegimeClass::Moderate
    } else {
        RegimeClass::Large
    };
    let (d_frak, b_alpha) = if (0.5..1.0).contains(&alpha) {
        let k = ceil_tol(1.0 / (1.0 - alpha));
        (Some(k as usize + 1), Some((alpha - 1.0) * k + alpha))
    } else {
        (None, None)
    };
    let nf = n as f64;
    let t_alpha = if alpha == 1.0 {
        Some(t_const * nf.ln())
    } else if alpha > 1.0 && alpha < 2.0 {
        Some(t_const * nf.powf(alpha - 1.0))
    } else {
        None
    };
    Ok(ScalingRegime {
        alpha,
        class,
        s_bound: if lambda <= c.sqrt() { 3 } else { 4 },
        d_frak,
        b_alpha,
        t_alpha,
    })
}

/// Limiting location (1+λ)(1+c/λ) of a supercritical spike in the Gram spectrum.
pub fn spiked_gram_outlier(lambda_j: f64, c: f64) -> Result<f64> {
    let threshold = c.sqrt();
    if lambda_j <= threshold {
        return Err(Error::BelowThreshold { lambda: lambda_j, threshold });
    }
    Ok((1.0 + lambda_j) * (1.0 + c / lambda_j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn edges() {
        assert_eq!(mp_edges(1.0, 1.0), (0.0, 4.0));
        let (a, b) = mp_edges(0.25, 1.0);
        assert!((a - 0.25).abs() < 1e-15 && (b - 2.25).abs() < 1e-15);
        let (a, b) = mp_edges_with(1.0, 1.0 / E, EdgeConvention::Printed);
        assert!((a - 0.39958).abs() < 1e-5 && (b - 1.87110).abs() < 1e-5);
        let (a, b) = mp_edges(1.0, 1.0 / E);
        assert!(a == 0.0 && (b - 4.0 / E).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn density_outside_support_is_zero() {
        let m = MpMeasure::new(0.5, 1.0).unwrap();
        let (a, b) = m.edges();
        assert_eq!(m.density(a - 0.1), 0.0);
        assert_eq!(m.density(b + 0.1), 0.0);
        assert_eq!(m.density(b), 0.0);
    }

    #[test]
    fn cdf_at_edges() {
        let m = MpMeasure::new(1.0, 1.0).unwrap();
        assert!((m.cdf(4.0) - 1.0).abs() < 1e-12);
        assert_eq!(m.cdf(0.0), m.point_mass_at_zero);
        let m2 = MpMeasure::new(2.0, 1.0).unwrap();
        assert!((m2.cdf(0.0) - 0.5).abs() < 1e-15);
    }

    /// Closed form at c = 1, σ² = 1: F(x) = (2/π)(φ + sin 2φ / 2), φ = asin(√x/2).
    fn cdf_c1(x: f64) -> f64 {
        let phi = (x.sqrt() / 2.0).asin();
        2.0 / PI * (phi + (2.0 * phi).sin() / 2.0)
    }

    #[test]
    fn cdf_matches_closed_form() {
        let m = MpMeasure::new(1.0, 1.0).unwrap();
        for x in [0.001, 0.3, 1.0, 2.2, 3.9] {
            assert!((m.cdf(x) - cdf_c1(x)).abs() < 1e-10, "x={x}");
        }
    }

    /// Riemann–Stieltjes moments from the CDF on a fine grid, atom included.
    fn moment(m: &MpMeasure, k: i32) -> f64 {
        let (a, b) = m.edges();
        let steps = 200_000;
        let mut acc = m.point_mass_at_zero * m.atom_location().powi(k);
        let mut prev = m.cdf(a) - if m.atom_location() <= a { m.point_mass_at_zero } else { 0.0 };
        for i in 1..=steps {
            let x0 = a + (b - a) * (i - 1) as f64 / steps as f64;
            let x1 = a + (b - a) * i as f64 / steps as f64;
            let f1 = m.cdf(x1) - if m.atom_location() <= x1 { m.point_mass_at_zero } else { 0.0 };
            acc += (0.5 * (x0 + x1)).powi(k) * (f1 - prev);
            prev = f1;
        }
        acc
    }

    #[test]
    fn moments_match_random_matrix_values() {
        for (c, s2) in [(0.5, 1.0), (2.0, 0.7), (4.0, 1.3)] {
            let m = MpMeasure::new(c, s2).unwrap();
            assert!((moment(&m, 1) - s2).abs() < 1e-6, "mean c={c}");
            assert!((moment(&m, 2) - s2 * s2 * (1.0 + c)).abs() < 1e-5, "second moment c={c}");
        }
    }

    #[test]
    fn total_mass_is_one() {
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let m = MpMeasure::new(c, 1.0).unwrap();
            assert!((m.continuous_mass() + m.point_mass_at_zero - 1.0).abs() < 1e-8, "c={c}");
            let p = MpMeasure::with_convention(c, 0.4, 0.0, EdgeConvention::Printed).unwrap();
            assert!((p.continuous_mass() + p.point_mass_at_zero - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_resolution_independent() {
        // Composite midpoint rule in θ at two resolutions as an oracle.
        let m = MpMeasure::new(1.0, 1.0).unwrap();
        let theta1 = m.theta_of_x(1.0);
        let mid = |k: usize| {
            let h = theta1 / k as f64;
            (0..k).map(|i| m.theta_integrand((i as f64 + 0.5) * h)).sum::<f64>() * h
        };
        let (c1, c2) = (mid(20_000), mid(40_000));
        assert!((c1 - c2).abs() < 1e-8);
        assert!((m.cdf(1.0) - c2).abs() < 1e-8);
    }

    #[test]
    fn typical_locations_basic() {
        let m = MpMeasure::new(1.0, 1.0).unwrap();
        assert!(m.typical_location(100, 100).unwrap().abs() < 1e-8);
        let g1 = m.typical_location(1, 1_000_000).unwrap();
        assert!(g1 < 4.0 && g1 > 3.99);
        let g = m.typical_location(37, 100).unwrap();
        assert!((m.upper_mass(g) - 0.37).abs() < 1e-9);
        assert!(m.typical_location(0, 10).is_err());
        // atom branch: upper half of ranks sit on the point mass
        let m2 = MpMeasure::new(2.0, 1.0).unwrap().shifted(0.3);
        assert!((m2.typical_location(80, 100).unwrap() - 0.3).abs() < 1e-15);
        let g = m2.typical_location(50, 100).unwrap();
        assert!((g - m2.edges().0).abs() < 1e-7);
    }

    #[test]
    fn nu_lambda_closed_forms() {
        let m = nu_lambda(1.0, 200, 0.0, 0.5).unwrap();
        assert!((m.sigma2 - 1.0 / E).abs() < 1e-15);
        assert!((m.shift - (1.0 - 2.0 / E)).abs() < 1e-15);
        assert!((m.shift - 0.2642411).abs() < 1e-7);
        let m = nu_lambda(1.0, 200, 0.0, 1.0).unwrap();
        assert!((m.sigma2 - 2.0 / (E * E)).abs() < 1e-15);
        assert!((m.shift - (1.0 - 3.0 / (E * E))).abs() < 1e-15);
        let m = nu_lambda(1.0, 200, 200.0, 0.3).unwrap();
        assert!((m.sigma2 - 0.6 * (-1.2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn nu_tilde0_cases() {
        let a = nu_tilde0(1.0, 150, 0.0, 0.5).unwrap();
        let b = nu_lambda(1.0, 150, 0.0, 0.5).unwrap();
        assert!((a.sigma2 - b.sigma2).abs() < 1e-15 && (a.shift - b.shift).abs() < 1e-15);
        // λ = p, υ = 1/2: h = 2p, η = 2p·½·e^{−½}/(2p)
        let p = 100usize;
        let m = nu_tilde0(1.0, p, p as f64, 0.5).unwrap();
        assert!((m.sigma2 - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        let e = (-0.5f64 * 4.0 * 0.5).exp();
        assert!((m.shift - (1.0 - 0.5 * e - e)).abs() < 1e-15);
    }

    #[test]
    fn nu_check0_cases() {
        let m = nu_check0(1.0, 200, 0.0, 0.8).unwrap();
        assert!((m.sigma2 - 1.6).abs() < 1e-14);
        let m = nu_check0(1.0, 200, 0.0, 0.5).unwrap();
        assert!((m.sigma2 - 1.0).abs() < 1e-15 && (m.shift - (1.0 - 2.0 / E)).abs() < 1e-15);
        let m = nu_check0(1.0, 200, 1.0, 0.5).unwrap();
        let expect = (-1.0f64).exp() / (-0.5 * 2.0 * (1.0 / 200.0 + 1.0f64)).exp();
        assert!((m.sigma2 - expect).abs() < 1e-15);
    }

    #[test]
    fn regimes() {
        let r = classify_regime(0.0, 0.5, 200, 1.0, 0.5, 10.0).unwrap();
        assert_eq!((r.class, r.s_bound), (RegimeClass::Bounded, 3));
        assert_eq!(classify_regime(0.0, 2.0, 200, 1.0, 0.5, 10.0).unwrap().s_bound, 4);
        let r = classify_regime(0.75, 1.0, 200, 1.0, 0.5, 10.0).unwrap();
        assert_eq!(r.class, RegimeClass::SlowSuper);
        assert_eq!(r.d_frak, Some(5));
        assert!((r.b_alpha.unwrap() + 0.25).abs() < 1e-15);
        let r = classify_regime(5.0, 1.0, 200, 1.0, 0.6, 10.0).unwrap();
        assert_eq!(r.class, RegimeClass::VeryLarge);
        let r = classify_regime(1.0, 1.0, 200, 1.0, 0.5, 10.0).unwrap();
        assert!((r.t_alpha.unwrap() - 10.0 * 200f64.ln()).abs() < 1e-12);
        let r = classify_regime(1.5, 1.0, 100, 1.0, 0.5, 10.0).unwrap();
        assert!((r.t_alpha.unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(classify_regime(0.3, 1.0, 100, 1.0, 0.5, 10.0).unwrap().class, RegimeClass::SlowSub);
        assert_eq!(classify_regime(2.5, 1.0, 100, 1.0, 0.5, 10.0).unwrap().class, RegimeClass::Large);
    }

    #[test]
    fn spiked_outlier() {
        assert!(matches!(spiked_gram_outlier(1.0, 1.0), Err(Error::BelowThreshold { .. })));
        assert!((spiked_gram_outlier(4.0, 1.0).unwrap() - 6.25).abs() < 1e-15);
    }

    #[test]
    fn table_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mp.csv");
        MpMeasure::new(0.5, 1.0).unwrap().write_table_csv(&path, 50).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("x,density,cdf"));
        assert_eq!(text.lines().count(), 51);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn typical_location_nonincreasing(c in 0.2f64..5.0, s2 in 0.1f64..3.0, shift in -1.0f64..1.0) {
            let m = MpMeasure::with_convention(c, s2, shift, EdgeConvention::Standard).unwrap();
            let g = m.typical_locations(60).unwrap();
            for w in g.windows(2) {
                prop_assert!(w[0] >= w[1] - 1e-12);
            }
        }

        #[test]
        fn cdf_monotone(c in 0.2f64..5.0, s2 in 0.1f64..3.0) {
            let m = MpMeasure::new(c, s2).unwrap();
            let t = m.table(200);
            for w in t.windows(2) {
                prop_assert!(w[1].2 >= w[0].2 - 1e-14);
            }
        }

        #[test]
        fn nu_lambda_continuous_at_zero(upsilon in 0.1f64..2.0) {
            let a = nu_lambda(1.0, 100, 0.0, upsilon).unwrap();
            let b = nu_lambda(1.0, 100, 1e-9, upsilon).unwrap();
            prop_assert!((a.sigma2 - b.sigma2).abs() < 1e-9);
            prop_assert!((a.shift - b.shift).abs() < 1e-9);
        }
    }

    #[test]
    fn continuous_mass_between_ignores_the_atom() {
        let m = MpMeasure::new(2.0, 1.0).unwrap().shifted(0.3);
        let (lo, hi) = m.edges();
        assert!((m.continuous_mass_between(-1.0, hi + 1.0) - 0.5).abs() < 1e-10);
        let mid = 0.5 * (lo + hi);
        let split = m.continuous_mass_between(lo, mid) + m.continuous_mass_between(mid, hi);
        assert!((split - 0.5).abs() < 1e-10);
        assert_eq!(m.continuous_mass_between(hi, lo), 0.0);
    }
}
