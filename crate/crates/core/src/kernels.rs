//! Gaussian affinity matrices and the operators built from them.

use serde::{Deserialize, Serialize};

use crate::data_gen::PointCloud;
use crate::error::{Error, Result};
use crate::matrix::{row_gram, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub upsilon: f64,
    pub h: f64,
}

impl KernelParams {
    pub fn new(upsilon: f64, h: f64) -> Result<Self> {
        let p = KernelParams { upsilon, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::NonPositiveBandwidth(self.h));
        }
        if !(self.upsilon > 0.0 && self.upsilon.is_finite()) {
            return Err(Error::Config(format!("upsilon must be positive, got {}", self.upsilon)));
        }
        Ok(())
    }
}

/// W, its degrees and the transition matrix for one dataset and bandwidth.
#[derive(Debug, Clone)]
pub struct KernelMatrices {
    pub w: Matrix,
    pub degrees: Vec<f64>,
    pub a: Matrix,
    pub params: KernelParams,
}

impl KernelMatrices {
    pub fn from_points(x: &Matrix, params: KernelParams) -> Result<Self> {
        let w = affinity(&pairwise_sq_dists(x), params)?;
        Self::from_affinity(w, params)
    }

    pub fn from_affinity(w: Matrix, params: KernelParams) -> Result<Self> {
        let degrees = degree(&w);
        let a = transition(&w)?;
        Ok(KernelMatrices { w, degrees, a, params })
    }

    pub fn laplacian(&self) -> Matrix {
        let (a, h) = (&self.a, self.params.h);
        Matrix::from_fn(a.nrows(), a.ncols(), |i, j| ((if i == j { 1.0 } else { 0.0 }) - a[(i, j)]) / h)
    }

    pub fn zeroed_transition(&self) -> Result<Matrix> {
        zeroed_transition(&self.w)
    }
}

/// Squared Euclidean distances between rows. Uses the Gram expansion on
/// column-centred data, clamped at zero.
pub fn pairwise_sq_dists(x: &Matrix) -> Matrix {
    let (n, p) = (x.nrows(), x.ncols());
    let mut xc = x.clone();
    for j in 0..p {
        let col = xc.col_as_slice_mut(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= mean);
    }
    let g = row_gram(&xc);
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0)
        }
    })
}

/// W(i,j) = exp(−υ·D2(i,j)/h).
pub fn affinity(d2: &Matrix, params: KernelParams) -> Result<Matrix> {
    params.validate()?;
    let s = params.upsilon / params.h;
    Ok(Matrix::from_fn(d2.nrows(), d2.ncols(), |i, j| (-s * d2[(i, j)]).exp()))
}

pub fn degree(w: &Matrix) -> Vec<f64> {
    (0..w.nrows()).map(|i| (0..w.ncols()).map(|j| w[(i, j)]).sum()).collect()
}

fn row_normalize(w: &Matrix) -> Result<Matrix> {
    let deg = degree(w);
    if let Some(i) = deg.iter().position(|d| !(*d > 1e-300)) {
        return Err(Error::DegenerateRow(i));
    }
    Ok(Matrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] / deg[i]))
}

/// A = D⁻¹W.
pub fn transition(w: &Matrix) -> Result<Matrix> {
    row_normalize(w)
}

/// L = (I − A)/h.
pub fn laplacian(w: &Matrix, h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveBandwidth(h));
    }
    let a = transition(w)?;
    Ok(Matrix::from_fn(w.nrows(), w.ncols(), |i, j| {
        ((if i == j { 1.0 } else { 0.0 }) - a[(i, j)]) / h
    }))
}

/// Transition matrix of W with its diagonal removed.
pub fn zeroed_transition(w: &Matrix) -> Result<Matrix> {
    let w0 = Matrix::from_fn(w.nrows(), w.ncols(), |i, j| if i == j { 0.0 } else { w[(i, j)] });
    row_normalize(&w0)
}

/// D^{−1/2} W D^{−1/2}, symmetric and similar to A.
pub fn normalized_affinity(w: &Matrix) -> Matrix {
    let s: Vec<f64> = degree(w).iter().map(|d| 1.0 / d.sqrt()).collect();
    Matrix::from_fn(w.nrows(), w.ncols(), |i, j| s[i] * w[(i, j)] * s[j])
}

/// Signal, noise and cross factors with W = W₁ ∘ W_y ∘ W_c.
#[derive(Debug, Clone)]
pub struct FactorMatrices {
    pub w1: Matrix,
    pub wy: Matrix,
    pub wc: Matrix,
}

pub fn factor_matrices(cloud: &PointCloud, params: KernelParams) -> Result<FactorMatrices> {
    params.validate()?;
    let w1 = affinity(&pairwise_sq_dists(&cloud.clean), params)?;
    let wy = affinity(&pairwise_sq_dists(&cloud.noise), params)?;
    let cross: Matrix = &cloud.clean * cloud.noise.transpose();
    let s = 2.0 * params.upsilon / params.h;
    let n = cloud.n;
    let wc = Matrix::from_fn(n, n, |i, j| {
        let ip = cross[(i, i)] - cross[(i, j)] - cross[(j, i)] + cross[(j, j)];
        (-s * ip).exp()
    });
    Ok(FactorMatrices { w1, wy, wc })
}

/// Affinity of the clean rows alone.
pub fn clean_affinity(cloud: &PointCloud, params: KernelParams) -> Result<Matrix> {
    affinity(&pairwise_sq_dists(&cloud.clean), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_gen::{gen_spiked, GeneratorConfig};
    use crate::matrix::{hadamard, max_abs_diff};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(n: usize, p: usize, seed: u64) -> Matrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn loop_dists(x: &Matrix) -> Matrix {
        let n = x.nrows();
        Matrix::from_fn(n, n, |i, j| (0..x.ncols()).map(|k| (x[(i, k)] - x[(j, k)]).powi(2)).sum())
    }

    #[test]
    fn two_point_distance() {
        let x = Matrix::from_fn(2, 2, |i, j| [[0.0, 0.0], [3.0, 4.0]][i][j]);
        let d = pairwise_sq_dists(&x);
        assert!((d[(0, 1)] - 25.0).abs() < 1e-12);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn identical_rows_give_zero_distances() {
        let x = Matrix::from_fn(4, 3, |_, j| j as f64 + 0.25);
        let d = pairwise_sq_dists(&x);
        assert_eq!(max_abs_diff(&d, &Matrix::zeros(4, 4)).unwrap(), 0.0);
        let w = affinity(&d, KernelParams::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(max_abs_diff(&w, &Matrix::from_fn(4, 4, |_, _| 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn distances_match_loop_oracle() {
        let x = random(6, 4, 1);
        assert!(max_abs_diff(&pairwise_sq_dists(&x), &loop_dists(&x)).unwrap() < 1e-10);
    }

    #[test]
    fn affinity_at_bandwidth() {
        let d2 = Matrix::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 3.0 });
        let w = affinity(&d2, KernelParams::new(1.0, 3.0).unwrap()).unwrap();
        assert!((w[(0, 1)] - 0.3678794412).abs() < 1e-10);
        assert!(affinity(&d2, KernelParams { upsilon: 1.0, h: 0.0 }).is_err());
    }

    #[test]
    fn affinity_matches_entrywise_oracle() {
        let (n, p) = (30, 20);
        let x = random(n, p, 2);
        let w = affinity(&pairwise_sq_dists(&x), KernelParams::new(0.5, p as f64).unwrap()).unwrap();
        let d = loop_dists(&x);
        let oracle = Matrix::from_fn(n, n, |i, j| (-0.5 * d[(i, j)] / p as f64).exp());
        assert!(max_abs_diff(&w, &oracle).unwrap() <= 1e-12);
    }

    #[test]
    fn all_ones_operators() {
        let w = Matrix::from_fn(3, 3, |_, _| 1.0);
        assert_eq!(degree(&w), vec![3.0; 3]);
        let a = transition(&w).unwrap();
        assert!((a[(1, 2)] - 1.0 / 3.0).abs() < 1e-15);
        let l = laplacian(&w, 2.0).unwrap();
        assert!((l[(0, 0)] - (1.0 - 1.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((l[(0, 1)] + 1.0 / 6.0).abs() < 1e-15);
        let a0 = zeroed_transition(&w).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 0.0 } else { 0.5 };
                assert_eq!(a0[(i, j)], e);
            }
        }
    }

    #[test]
    fn two_by_two_transition() {
        let w = Matrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.5 });
        let a = transition(&w).unwrap();
        assert!((a[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a[(1, 0)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zeroed_transition_matches_definition() {
        let x = random(5, 3, 3);
        let w = affinity(&pairwise_sq_dists(&x), KernelParams::new(1.0, 3.0).unwrap()).unwrap();
        let a0 = zeroed_transition(&w).unwrap();
        for i in 0..5 {
            let s: f64 = (0..5).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
            for j in 0..5 {
                let e = if i == j { 0.0 } else { w[(i, j)] / s };
                assert!((a0[(i, j)] - e).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_row_detected() {
        let w = Matrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!(matches!(zeroed_transition(&w), Err(Error::DegenerateRow(0))));
    }

    #[test]
    fn factorization_trivial_cases() {
        let mut c = gen_spiked(&GeneratorConfig::spiked(6, 4, vec![2.0], 4)).unwrap();
        let params = KernelParams::new(0.5, 4.0).unwrap();
        let ones = Matrix::from_fn(6, 6, |_, _| 1.0);
        let noise = c.noise.clone();
        c.noise = Matrix::zeros(6, 4);
        let f = factor_matrices(&c, params).unwrap();
        assert!(max_abs_diff(&f.wy, &ones).unwrap() == 0.0);
        assert!(max_abs_diff(&f.wc, &ones).unwrap() == 0.0);
        c.noise = noise;
        c.clean = Matrix::from_fn(6, 4, |_, j| j as f64);
        let f = factor_matrices(&c, params).unwrap();
        assert!(max_abs_diff(&f.w1, &ones).unwrap() <= 1e-15);
        assert!(max_abs_diff(&f.wc, &ones).unwrap() <= 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hadamard_factorization(seed in 0u64..1000, n in 2usize..12, p in 2usize..10, lam in 0.0f64..50.0) {
            let c = gen_spiked(&GeneratorConfig::spiked(n, p, vec![lam], seed)).unwrap();
            let params = KernelParams::new(0.5, p as f64).unwrap();
            let f = factor_matrices(&c, params).unwrap();
            let w = KernelMatrices::from_points(&c.noisy(), params).unwrap().w;
            let prod = hadamard(&hadamard(&f.w1, &f.wy).unwrap(), &f.wc).unwrap();
            prop_assert!(max_abs_diff(&w, &prod).unwrap() <= 1e-12);
        }

        #[test]
        fn rows_of_transitions_sum_to_one(seed in 0u64..1000, n in 2usize..15, h in 0.5f64..20.0) {
            let x = random(n, 4, seed);
            let k = KernelMatrices::from_points(&x, KernelParams::new(1.0, h).unwrap()).unwrap();
            let a0 = k.zeroed_transition().unwrap();
            for i in 0..n {
                let s: f64 = (0..n).map(|j| k.a[(i, j)]).sum();
                let s0: f64 = (0..n).map(|j| a0[(i, j)]).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
                prop_assert!((s0 - 1.0).abs() <= 1e-12);
                prop_assert!(k.degrees[i] >= 1.0);
                prop_assert_eq!(k.w[(i, i)], 1.0);
            }
        }

        #[test]
        fn joint_scaling_leaves_w_unchanged(seed in 0u64..1000, s in 0.1f64..10.0) {
            let x = random(8, 5, seed);
            let xs = Matrix::from_fn(8, 5, |i, j| s * x[(i, j)]);
            let w = affinity(&pairwise_sq_dists(&x), KernelParams::new(1.0, 5.0).unwrap()).unwrap();
            let ws = affinity(&pairwise_sq_dists(&xs), KernelParams::new(1.0, 5.0 * s * s).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&w, &ws).unwrap() <= 1e-12);
        }
    }
}
