//! Deterministic surrogates for the noisy affinity matrix: the kernel
//! expansion K_d, the clean-signal approximants and the Mehler truncation of
//! the clean affinity matrix.

use serde::{Deserialize, Serialize};

use crate::data_gen::PointCloud;
use crate::error::{Error, Result};
use crate::matrix::{hadamard, row_gram, same_shape, shift_scale, Matrix};
use crate::mp_law::{tau, varsigma, RegimeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproximantKind {
    Kd,
    Wa1,
    WtildeA1,
    Wb1,
    Wa2,
    Mehler,
}

impl ApproximantKind {
    /// Regimes in which the surrogate is meant to track W.
    pub fn regimes(self) -> &'static [RegimeClass] {
        use RegimeClass::*;
        match self {
            ApproximantKind::Kd => &[Bounded, SlowSub, SlowSuper],
            ApproximantKind::Wa1 | ApproximantKind::Wb1 => &[Moderate],
            ApproximantKind::WtildeA1 => &[Large, VeryLarge],
            ApproximantKind::Wa2 => &[Bounded, SlowSub, SlowSuper, Moderate, Large, VeryLarge],
            ApproximantKind::Mehler => &[Moderate, Large, VeryLarge],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproximantMatrix {
    pub kind: ApproximantKind,
    pub matrix: Matrix,
}

/// φ_i = ‖x_i‖²/p − (1 + Σλ/p).
pub fn phi_vector(x: &Matrix, lambdas: &[f64]) -> Vec<f64> {
    let p = x.ncols() as f64;
    let centre = 1.0 + lambdas.iter().sum::<f64>() / p;
    (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| x[(i, j)].powi(2)).sum::<f64>() / p - centre)
        .collect()
}

/// The pieces of K_d: −2f'(τ)XXᵀ/p, ς, Sh₀, Sh₁ and Sh₂.
#[derive(Debug, Clone)]
pub struct KdParts {
    pub linear: Matrix,
    pub varsigma: f64,
    pub sh0: Matrix,
    pub sh1: Matrix,
    pub sh2: Matrix,
}

impl KdParts {
    pub fn sum(&self) -> Matrix {
        let n = self.linear.nrows();
        Matrix::from_fn(n, n, |i, j| {
            self.linear[(i, j)]
                + if i == j { self.varsigma } else { 0.0 }
                + self.sh0[(i, j)]
                + self.sh1[(i, j)]
                + self.sh2[(i, j)]
        })
    }
}

pub fn kd_parts(x: &Matrix, lambdas: &[f64], upsilon: f64) -> KdParts {
    let n = x.nrows();
    let p = x.ncols() as f64;
    let total: f64 = lambdas.iter().sum();
    let t = tau(total, p);
    let f = (-upsilon * t).exp();
    let f1 = -upsilon * f;
    let f2 = upsilon * upsilon * f;
    let phi = phi_vector(x, lambdas);
    let tail = 4.0 / (p * p) * (lambdas.iter().map(|l| (l + 1.0).powi(2)).sum::<f64>() + p);
    let g = row_gram(x);
    KdParts {
        linear: Matrix::from_fn(n, n, |i, j| -2.0 * f1 * g[(i, j)] / p),
        varsigma: varsigma(total, p, upsilon),
        sh0: Matrix::from_fn(n, n, |_, _| f),
        sh1: Matrix::from_fn(n, n, |i, j| f1 * (phi[i] + phi[j])),
        sh2: Matrix::from_fn(n, n, |i, j| {
            let (a, b) = (phi[i], phi[j]);
            0.5 * f2 * (b * b + a * a + 2.0 * a * b + tail)
        }),
    }
}

/// Second-order kernel expansion of W for f(x) = exp(−υx) and h = p.
pub fn kd_matrix(x: &Matrix, lambdas: &[f64], upsilon: f64) -> Matrix {
    kd_parts(x, lambdas, upsilon).sum()
}

/// e^{−2υ}W₁ + (1 − e^{−2υ})I.
pub fn w_a1(w1: &Matrix, upsilon: f64) -> Matrix {
    let e = (-2.0 * upsilon).exp();
    shift_scale(w1, e, 1.0 - e)
}

/// W_a1 ∘ W_c. For very large signals W_c can overflow where W₁ underflows;
/// the true product there is exp of a large negative number, so 0·∞ is read as 0.
pub fn w_tilde_a1(w1: &Matrix, wc: &Matrix, upsilon: f64) -> Result<Matrix> {
    same_shape(w1, wc)?;
    let a = w_a1(w1, upsilon);
    Ok(Matrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        if a[(i, j)] == 0.0 || wc[(i, j)].is_infinite() {
            0.0
        } else {
            a[(i, j)] * wc[(i, j)]
        }
    }))
}

/// YYᵀ/p for the noise rows.
pub fn noise_gram(cloud: &PointCloud) -> Matrix {
    let g = row_gram(&cloud.noise);
    let p = cloud.p as f64;
    Matrix::from_fn(cloud.n, cloud.n, |i, j| g[(i, j)] / p)
}

/// (2υe^{−2υ}·YYᵀ/p + 2υe^{−4υ}I) ∘ W₁.
pub fn w_b1(w1: &Matrix, noise_gram: &Matrix, upsilon: f64) -> Result<Matrix> {
    same_shape(w1, noise_gram)?;
    let a = 2.0 * upsilon * (-2.0 * upsilon).exp();
    let b = 2.0 * upsilon * (-4.0 * upsilon).exp();
    hadamard(&shift_scale(noise_gram, a, b), w1)
}

/// e^{−2pυ/h}W₁ + (1 − e^{−2pυ/h})I with h = λ + p; `w1_h` must use that bandwidth.
pub fn w_a2(w1_h: &Matrix, p: usize, lambda: f64, upsilon: f64) -> Matrix {
    let p = p as f64;
    let e = (-2.0 * p * upsilon / (lambda + p)).exp();
    shift_scale(w1_h, e, 1.0 - e)
}

/// H̃_m(x) = H_m(x/√2)/2^{m/2} via H̃_{m+1} = xH̃_m − mH̃_{m−1}.
pub fn scaled_hermite(m: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if m == 0 {
        return a;
    }
    for k in 1..m {
        let c = x * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// Root in (0,1) of t/(1−t²) = 2β/υ².
pub fn mehler_t0(beta: f64, upsilon: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite() && upsilon > 0.0) {
        return Err(Error::Config(format!("need beta > 0 and upsilon > 0, got {beta}, {upsilon}")));
    }
    let r = 4.0 * beta / upsilon;
    let t = (-upsilon + (upsilon * upsilon + 16.0 * beta * beta / (upsilon * upsilon)).sqrt()) / r;
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        // the closed form cancels catastrophically for tiny β
        let s = 2.0 * beta / (upsilon * upsilon);
        Ok(2.0 * s / (1.0 + (1.0 + 4.0 * s * s).sqrt()))
    }
}

/// Rank-one factors of the clean affinity exp(−υβ(z_i − z_j)²).
///
/// With x = υ^{3/2}z, the m-th factor is w∘H̃_m(x)/√(m!) with
/// w = exp((t₀²/(2(1−t₀²)) − β/υ²)x²), weighted by √(1−t₀²)·t₀^m.
#[derive(Debug, Clone)]
pub struct MehlerExpansion {
    pub t0: f64,
    pub beta: f64,
    pub upsilon: f64,
    pub prefactor: f64,
    /// Normalised factors, one per order m = 0..=M.
    pub terms: Vec<Vec<f64>>,
}

impl MehlerExpansion {
    pub fn order(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    /// Partial sum up to order `m` (clamped to the available terms).
    pub fn matrix_to(&self, m: usize) -> Matrix {
        let n = self.terms.first().map_or(0, Vec::len);
        let mut out = Matrix::zeros(n, n);
        for (k, h) in self.terms.iter().enumerate().take(m + 1) {
            let c = self.prefactor * self.t0.powi(k as i32);
            for j in 0..n {
                let cj = c * h[j];
                for i in 0..n {
                    out[(i, j)] += cj * h[i];
                }
            }
        }
        out
    }

    pub fn matrix(&self) -> Matrix {
        self.matrix_to(self.order())
    }
}

pub fn mehler_truncation(z: &[f64], beta: f64, upsilon: f64, m: usize) -> Result<MehlerExpansion> {
    let t0 = mehler_t0(beta, upsilon)?;
    let s = upsilon.powf(1.5);
    let x: Vec<f64> = z.iter().map(|v| s * v).collect();
    let gamma = t0 * t0 / (2.0 * (1.0 - t0 * t0)) - beta / (upsilon * upsilon);
    let w: Vec<f64> = x.iter().map(|v| (gamma * v * v).exp()).collect();
    let mut terms: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    terms.push(w.clone());
    if m >= 1 {
        terms.push(w.iter().zip(&x).map(|(a, b)| a * b).collect());
    }
    for k in 1..m {
        let next: Vec<f64> = (0..x.len())
            .map(|i| (x[i] * terms[k][i] - (k as f64).sqrt() * terms[k - 1][i]) / ((k + 1) as f64).sqrt())
            .collect();
        terms.push(next);
    }
    Ok(MehlerExpansion { t0, beta, upsilon, prefactor: (1.0 - t0 * t0).sqrt(), terms })
}

/// Truncation depth ⌈C₀ log n⌉.
pub fn default_depth(n: usize, c0: f64) -> usize {
    (c0 * (n as f64).ln()).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_gen::{gen_spiked, GeneratorConfig};
    use crate::kernels::{affinity, pairwise_sq_dists, KernelParams};
    use crate::matrix::max_abs_diff;
    use crate::spectrum::{eigenvalues, op_norm_diff};

    const E: f64 = std::f64::consts::E;

    fn exact_w1(z: &[f64], beta: f64, upsilon: f64) -> Matrix {
        let n = z.len();
        Matrix::from_fn(n, n, |i, j| (-upsilon * beta * (z[i] - z[j]).powi(2)).exp())
    }

    #[test]
    fn kd_sh0_entries() {
        let x = Matrix::from_fn(2, 4, |_, _| 1.0);
        let parts = kd_parts(&x, &[0.0], 0.5);
        assert!((0..2).all(|i| (0..2).all(|j| (parts.sh0[(i, j)] - 1.0 / E).abs() < 1e-16)));
    }

    /// Literal transcription with explicit matrices for each piece.
    fn kd_oracle(x: &Matrix, lambdas: &[f64], upsilon: f64) -> Matrix {
        let (n, p) = (x.nrows(), x.ncols() as f64);
        let sl: f64 = lambdas.iter().sum();
        let t = 2.0 * (sl / p + 1.0);
        let f = |s: f64| (-upsilon * s).exp();
        let fp = |s: f64| -upsilon * (-upsilon * s).exp();
        let fpp = |s: f64| upsilon * upsilon * (-upsilon * s).exp();
        let sig = f(0.0) + 2.0 * fp(t) - f(t);
        let phi: Vec<f64> = (0..n)
            .map(|i| (0..x.ncols()).map(|k| x[(i, k)] * x[(i, k)]).sum::<f64>() / p - (1.0 + sl / p))
            .collect();
        let xtx = Matrix::from_fn(n, n, |i, j| (0..x.ncols()).map(|k| x[(i, k)] * x[(j, k)]).sum());
        let sh0 = Matrix::from_fn(n, n, |_, _| f(t));
        let sh1 = Matrix::from_fn(n, n, |i, j| fp(t) * (phi[j] + phi[i]));
        let extra = 4.0 / (p * p) * (lambdas.iter().map(|l| (l + 1.0) * (l + 1.0)).sum::<f64>() + p);
        let sh2 = Matrix::from_fn(n, n, |i, j| {
            fpp(t) / 2.0 * (phi[j] * phi[j] + phi[i] * phi[i] + 2.0 * phi[i] * phi[j] + extra)
        });
        Matrix::from_fn(n, n, |i, j| {
            -2.0 * fp(t) / p * xtx[(i, j)] + if i == j { sig } else { 0.0 } + sh0[(i, j)] + sh1[(i, j)] + sh2[(i, j)]
        })
    }

    #[test]
    fn kd_matches_transcription() {
        let c = gen_spiked(&GeneratorConfig::spiked(6, 9, vec![1.5], 3)).unwrap();
        let x = c.noisy();
        let k = kd_matrix(&x, &c.lambdas, 0.5);
        assert!(max_abs_diff(&k, &kd_oracle(&x, &c.lambdas, 0.5)).unwrap() <= 1e-12);
    }

    #[test]
    fn a1_family() {
        let z = [0.1, -0.4, 1.2, 0.0, 2.0];
        let w1 = exact_w1(&z, 0.3, 0.5);
        let a = w_a1(&w1, 0.5);
        for i in 0..5 {
            assert_eq!(a[(i, i)], 1.0);
            for j in 0..5 {
                let e = (-1.0f64).exp() * w1[(i, j)] + if i == j { 1.0 - (-1.0f64).exp() } else { 0.0 };
                assert!((a[(i, j)] - e).abs() <= 1e-15);
            }
        }
        assert!(max_abs_diff(&w_a1(&w1, 1e-12), &w1).unwrap() < 1e-11);
        let ones = Matrix::from_fn(5, 5, |_, _| 1.0);
        assert_eq!(max_abs_diff(&w_tilde_a1(&w1, &ones, 0.5).unwrap(), &a).unwrap(), 0.0);
    }

    #[test]
    fn b1_cases() {
        let z = [0.3, -1.0, 0.7, 0.2, 1.1];
        let w1 = exact_w1(&z, 0.4, 0.5);
        let b = w_b1(&w1, &Matrix::zeros(5, 5), 0.5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let e = if i == j { (-2.0f64).exp() } else { 0.0 };
                assert!((b[(i, j)] - e).abs() < 1e-16);
            }
        }
        let g = Matrix::from_fn(5, 5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let b = w_b1(&w1, &g, 0.5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let e = (E.powi(-1) * g[(i, j)] + if i == j { E.powi(-2) } else { 0.0 }) * w1[(i, j)];
                assert!((b[(i, j)] - e).abs() <= 1e-14);
                assert_eq!(b[(i, j)], b[(j, i)]);
            }
        }
    }

    #[test]
    fn a2_cases() {
        let z = [0.3, -1.0, 0.7];
        let w1 = exact_w1(&z, 0.4, 0.5);
        assert_eq!(max_abs_diff(&w_a2(&w1, 50, 0.0, 0.5), &w_a1(&w1, 0.5)).unwrap(), 0.0);
        assert!(max_abs_diff(&w_a2(&w1, 50, 1e15, 0.5), &w1).unwrap() < 1e-12);
        let a = w_a2(&w1, 50, 7.0, 0.5);
        assert!((0..3).all(|i| a[(i, i)] == 1.0));
    }

    /// Physicist Hermite polynomials by their own recurrence.
    fn physicist(m: usize, x: f64) -> f64 {
        let (mut a, mut b) = (1.0, 2.0 * x);
        if m == 0 {
            return a;
        }
        for k in 1..m {
            let c = 2.0 * x * b - 2.0 * k as f64 * a;
            a = b;
            b = c;
        }
        b
    }

    #[test]
    fn hermite_values() {
        assert_eq!(scaled_hermite(0, 3.3), 1.0);
        assert_eq!(scaled_hermite(1, 3.3), 3.3);
        let x: f64 = 1.7;
        assert!((scaled_hermite(2, x) - (x * x - 1.0)).abs() < 1e-14);
        assert!((scaled_hermite(3, x) - (x.powi(3) - 3.0 * x)).abs() < 1e-13);
        for m in 0..=20 {
            for x in [-2.5, -0.3, 1.3, 4.0] {
                let direct = physicist(m, x / 2f64.sqrt()) / 2f64.powf(m as f64 / 2.0);
                let got = scaled_hermite(m, x);
                assert!((got - direct).abs() <= 1e-9 * direct.abs().max(1e-300), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn t0_values() {
        let t = mehler_t0(1.0, 1.0).unwrap();
        assert!((t - (17f64.sqrt() - 1.0) / 4.0).abs() < 1e-15);
        assert!((t - 0.7807764).abs() < 1e-7);
        let small = mehler_t0(1e-9, 0.7).unwrap();
        assert!((small - 2e-9 / 0.49).abs() < 1e-20);
        assert!(mehler_t0(0.0, 1.0).is_err());
        for (b, u) in [(0.3, 0.5), (2.0, 1.5), (1.0, 1.0)] {
            let t = mehler_t0(b, u).unwrap();
            assert!(t > 0.0 && t < 1.0);
            assert!((t / (1.0 - t * t) - 2.0 * b / (u * u)).abs() < 1e-12);
        }
    }

    #[test]
    fn mehler_identity_at_origin() {
        // Σ t^m/m! H̃_m(0)² = 1/√(1−t²)
        let t = mehler_t0(1.0, 1.0).unwrap();
        let mut sum = 0.0;
        let mut fact = 1.0;
        for m in 0..200 {
            if m > 0 {
                fact *= m as f64;
            }
            if !fact.is_finite() {
                break;
            }
            sum += t.powi(m as i32) / fact * scaled_hermite(m, 0.0).powi(2);
        }
        assert!(((1.0 - t * t).sqrt() * sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mehler_diagonal_converges_to_one() {
        let e = mehler_truncation(&[0.7], 0.5, 1.0, 60).unwrap();
        assert!((e.matrix()[(0, 0)] - 1.0).abs() < 1e-8);
        let e = mehler_truncation(&[0.4, 0.4], 0.5, 1.2, 80).unwrap();
        let m = e.matrix();
        assert!((m[(0, 1)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mehler_general_beta_reconstructs_w1() {
        let z: Vec<f64> = (0..12).map(|i| ((i as f64) * 1.37).sin() * 1.5).collect();
        for (beta, up) in [(0.3, 0.5), (1.0, 1.0), (0.8, 1.4)] {
            let e = mehler_truncation(&z, beta, up, 150).unwrap();
            let err = max_abs_diff(&e.matrix(), &exact_w1(&z, beta, up)).unwrap();
            assert!(err < 1e-8, "beta={beta} upsilon={up} err={err}");
        }
    }

    #[test]
    fn mehler_error_monotone() {
        let z: Vec<f64> = (0..50).map(|i| ((i as f64) * 0.71).cos() * 1.2).collect();
        let exact = exact_w1(&z, 1.0, 1.0);
        let e = mehler_truncation(&z, 1.0, 1.0, 40).unwrap();
        let mut prev = f64::INFINITY;
        for m in (0..=40).step_by(4) {
            let err = op_norm_diff(&exact, &e.matrix_to(m)).unwrap();
            assert!(err <= prev + 1e-12, "m={m}");
            prev = err;
        }
    }

    #[test]
    fn w1_matches_kernel_module() {
        // W₁ with bandwidth h equals exp(−υβ(z_i−z_j)²) with β = λ/h for unit-variance z
        let c = gen_spiked(&GeneratorConfig::spiked(7, 5, vec![9.0], 2)).unwrap();
        let h = 5.0;
        let w1 = affinity(&pairwise_sq_dists(&c.clean), KernelParams::new(0.5, h).unwrap()).unwrap();
        let z: Vec<f64> = (0..7).map(|i| c.clean[(i, 0)] / 3.0).collect();
        assert!(max_abs_diff(&w1, &exact_w1(&z, 9.0 / h, 0.5)).unwrap() < 1e-12);
        assert_eq!(default_depth(100, 10.0), 47);
        assert!(eigenvalues(&w1).unwrap()[6] > -1e-12);
    }
}
