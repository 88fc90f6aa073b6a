use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Experiment, ExperimentConfig, Manifold, Outputs};
use crate::approximants::{noise_gram, w_a1, w_b1, w_tilde_a1};
use crate::bandwidth::{
    quantile_bandwidth, resample_threshold, select_omega, select_omega_with, OmegaSelection, OutlierWindow,
    SelectionTarget,
};
use crate::data_gen::{gen_curve_m1, gen_klein_bottle, gen_spiked, GeneratorConfig, PointCloud};
use crate::error::Result;
use crate::kernels::{affinity, clean_affinity, factor_matrices, pairwise_sq_dists, KernelParams};
use crate::matrix::Matrix;
use crate::mp_law::{nu_lambda, MpMeasure};
use crate::rng::child_seed;
use crate::spectrum::{
    bulk_rigidity, eigenvalues, eigvec_rmse, esd_histogram_range, op_norm_diff, stieltjes, stieltjes_compare_eigs,
    sym_eigs, transition_eigvecs, StieltjesGrid,
};

pub(super) fn dispatch(cfg: &ExperimentConfig) -> Result<Outputs> {
    match cfg.name {
        Experiment::PhaseSweep => phase_sweep(cfg),
        Experiment::AccuracyLowSnr => accuracy_low_snr(cfg),
        Experiment::AccuracyModerate => accuracy_moderate(cfg),
        Experiment::AccuracyLarge => accuracy_large(cfg),
        Experiment::DimensionSweep => dimension_sweep(cfg),
        Experiment::HistogramBulk => histogram_bulk(cfg),
        Experiment::OmegaSweep => omega_sweep(cfg),
        Experiment::ManifoldRmse => manifold_rmse(cfg),
        Experiment::StieltjesCompare => stieltjes_comparison(cfg),
        Experiment::D2Comparison => compare_d2(cfg),
        Experiment::ZeroingComparison => zeroing_comparison(cfg),
    }
}

macro_rules! row {
    ($buf:expr, $($arg:tt)*) => {{
        let _ = writeln!($buf, $($arg)*);
    }};
}

fn spiked(n: usize, p: usize, lambdas: Vec<f64>, seed: u64) -> Result<PointCloud> {
    gen_spiked(&GeneratorConfig::spiked(n, p, lambdas, seed))
}

/// W of the observed points with h = p.
fn w_hp(cloud: &PointCloud, upsilon: f64) -> Result<Matrix> {
    affinity(&pairwise_sq_dists(&cloud.noisy()), KernelParams::new(upsilon, cloud.p as f64)?)
}

fn null_measure(c: f64, p: usize, upsilon: f64) -> Result<MpMeasure> {
    nu_lambda(c, p, 0.0, upsilon)
}

fn cartesian<A: Copy, B: Copy>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect()
}

fn gnuplot(title: &str, body: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead outside\nset title '{title}'\n\
         set terminal pngcairo size 1000,650\nset output '{title}.png'\n{body}\n"
    )
}

fn phase_sweep(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let jobs: Vec<(f64, (f64, u64))> = cartesian(&cfg.c_grid, &cartesian(&cfg.alpha_grid, &cfg.seeds));
    let spectra: Vec<(f64, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(c, (alpha, seed))| {
            let p = ExperimentConfig::p_for(n, c);
            let lambda = cfg.lambda(alpha, n, p);
            let cloud = spiked(n, p, vec![lambda], seed)?;
            Ok((lambda, eigenvalues(&w_hp(&cloud, cfg.upsilon)?)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut csv = String::from("c,alpha,lambda,seed,index,eigenvalue\n");
    for (&(c, (alpha, seed)), (lambda, ev)) in jobs.iter().zip(&spectra) {
        for (i, v) in ev.iter().enumerate() {
            row!(csv, "{c:?},{alpha:?},{lambda:?},{seed},{},{v:?}", i + 1);
        }
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("phase_sweep.csv", csv);
    out.file(
        "phase_sweep.gp",
        gnuplot(
            "phase_sweep",
            "set xlabel 'index'\nset ylabel 'eigenvalue of W'\nset logscale y\n\
             plot 'phase_sweep.csv' using 5:($6 > 0 ? $6 : NaN):2 with points pt 7 ps 0.4 palette title 'alpha'",
        ),
    );
    Ok(out)
}

fn accuracy_low_snr(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let jobs = cartesian(&cfg.c_grid, &cartesian(&cfg.alpha_grid, &cfg.seeds));
    let results: Vec<(Vec<f64>, Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|&(c, (alpha, seed))| {
            let p = ExperimentConfig::p_for(n, c);
            let cloud = spiked(n, p, vec![cfg.lambda(alpha, n, p)], seed)?;
            let ev = eigenvalues(&w_hp(&cloud, cfg.upsilon)?)?;
            let nu0 = null_measure(c, p, cfg.upsilon)?;
            let gamma = nu0.typical_locations(n)?;
            let sup = bulk_rigidity(&ev, &nu0, cfg.bulk_from - 1, cfg.rigidity_eps)?;
            Ok((ev, gamma, sup))
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut eigs = String::from("c,alpha,seed,index,eigenvalue,typical_location\n");
    let mut summary = String::from("c,alpha,seed,sup_error\n");
    for (&(c, (alpha, seed)), (ev, gamma, sup)) in jobs.iter().zip(&results) {
        for (i, (v, g)) in ev.iter().zip(gamma).enumerate() {
            row!(eigs, "{c:?},{alpha:?},{seed},{},{v:?},{g:?}", i + 1);
        }
        row!(summary, "{c:?},{alpha:?},{seed},{sup:?}");
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("low_snr_eigs.csv", eigs);
    out.file("low_snr_summary.csv", summary);
    out.file(
        "low_snr.gp",
        gnuplot(
            "low_snr",
            "set xlabel 'index'\nset ylabel 'eigenvalue'\n\
             plot 'low_snr_eigs.csv' using 4:5 with points pt 7 ps 0.3 title 'W', \
             '' using 4:6 with lines lw 2 title 'typical location'",
        ),
    );
    Ok(out)
}

fn max_weyl(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn accuracy_moderate(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let jobs = cartesian(&cfg.c_grid, &cartesian(&cfg.alpha_grid, &cfg.seeds));
    let results: Vec<(Vec<f64>, Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|&(c, (alpha, seed))| {
            let p = ExperimentConfig::p_for(n, c);
            let cloud = spiked(n, p, vec![cfg.lambda(alpha, n, p)], seed)?;
            let w = w_hp(&cloud, cfg.upsilon)?;
            let wa = w_a1(&clean_affinity(&cloud, KernelParams::new(cfg.upsilon, p as f64)?)?, cfg.upsilon);
            Ok((eigenvalues(&w)?, eigenvalues(&wa)?, op_norm_diff(&w, &wa)?))
        })
        .collect::<Result<_>>()?;
    let bound = 5.0 / (n as f64).sqrt();
    let mut out = Outputs::default();
    let mut eigs = String::from("c,alpha,seed,index,w,w_a1\n");
    let mut summary = String::from("c,alpha,seed,opnorm_over_n,weyl_over_n,bound\n");
    for (&(c, (alpha, seed)), (ew, ea, op)) in jobs.iter().zip(&results) {
        for (i, (x, y)) in ew.iter().zip(ea).enumerate() {
            row!(eigs, "{c:?},{alpha:?},{seed},{},{x:?},{y:?}", i + 1);
        }
        row!(summary, "{c:?},{alpha:?},{seed},{:?},{:?},{bound:?}", op / n as f64, max_weyl(ew, ea) / n as f64);
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("moderate_eigs.csv", eigs);
    out.file("moderate_summary.csv", summary);
    out.file(
        "moderate.gp",
        gnuplot(
            "moderate",
            "set xlabel 'index'\nset ylabel 'eigenvalue'\nset logscale y\n\
             plot 'moderate_eigs.csv' using 4:5 with points pt 7 ps 0.4 title 'W', \
             '' using 4:6 with points pt 6 ps 0.6 title 'W_a1'",
        ),
    );
    Ok(out)
}

fn accuracy_large(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let jobs = cartesian(&cfg.c_grid, &cartesian(&cfg.alpha_grid, &cfg.seeds));
    let results: Vec<(Vec<f64>, Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|&(c, (alpha, seed))| {
            let p = ExperimentConfig::p_for(n, c);
            let cloud = spiked(n, p, vec![cfg.lambda(alpha, n, p)], seed)?;
            let w = w_hp(&cloud, cfg.upsilon)?;
            let f = factor_matrices(&cloud, KernelParams::new(cfg.upsilon, p as f64)?)?;
            let wt = w_tilde_a1(&f.w1, &f.wc, cfg.upsilon)?;
            Ok((eigenvalues(&w)?, eigenvalues(&wt)?, op_norm_diff(&w, &wt)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut eigs = String::from("c,alpha,seed,index,w,w_tilde_a1\n");
    let mut summary = String::from("c,alpha,seed,max_dev_from_one,opnorm_tilde_over_n\n");
    for (&(c, (alpha, seed)), (ew, et, op)) in jobs.iter().zip(&results) {
        for (i, (x, y)) in ew.iter().zip(et).enumerate() {
            row!(eigs, "{c:?},{alpha:?},{seed},{},{x:?},{y:?}", i + 1);
        }
        let dev = ew.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        row!(summary, "{c:?},{alpha:?},{seed},{dev:?},{:?}", op / n as f64);
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("large_eigs.csv", eigs);
    out.file("large_summary.csv", summary);
    out.file(
        "large.gp",
        gnuplot(
            "large",
            "set xlabel 'index'\nset ylabel 'eigenvalue'\n\
             plot 'large_eigs.csv' using 4:5 with points pt 7 ps 0.4 title 'W', 1 with lines title 'unity'",
        ),
    );
    Ok(out)
}

fn dimension_sweep(cfg: &ExperimentConfig) -> Result<Outputs> {
    let jobs: Vec<(usize, (f64, (f64, u64)))> =
        cartesian(&cfg.n_grid, &cartesian(&cfg.c_grid, &cartesian(&cfg.alpha_grid, &cfg.seeds)));
    let results: Vec<(&'static str, f64)> = jobs
        .par_iter()
        .map(|&(n, (c, (alpha, seed)))| {
            let p = ExperimentConfig::p_for(n, c);
            let cloud = spiked(n, p, vec![cfg.lambda(alpha, n, p)], seed)?;
            let w = w_hp(&cloud, cfg.upsilon)?;
            let params = KernelParams::new(cfg.upsilon, p as f64)?;
            if alpha < 1.0 {
                let nu0 = null_measure(c, p, cfg.upsilon)?;
                Ok(("rigidity", bulk_rigidity(&eigenvalues(&w)?, &nu0, cfg.bulk_from - 1, cfg.rigidity_eps)?))
            } else if alpha < 2.0 {
                let wa = w_a1(&clean_affinity(&cloud, params)?, cfg.upsilon);
                Ok(("opnorm_w_a1", op_norm_diff(&w, &wa)?))
            } else {
                let f = factor_matrices(&cloud, params)?;
                Ok(("opnorm_w_tilde_a1", op_norm_diff(&w, &w_tilde_a1(&f.w1, &f.wc, cfg.upsilon)?)?))
            }
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut csv = String::from("n,c,alpha,seed,metric,error,error_over_n\n");
    for (&(n, (c, (alpha, seed))), (metric, err)) in jobs.iter().zip(&results) {
        row!(csv, "{n},{c:?},{alpha:?},{seed},{metric},{err:?},{:?}", err / n as f64);
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("dimension_sweep.csv", csv);
    out.file(
        "dimension_sweep.gp",
        gnuplot(
            "dimension_sweep",
            "set xlabel 'n'\nset ylabel 'error'\nset logscale y\n\
             plot 'dimension_sweep.csv' using 1:($3 < 1 ? $6 : $7):3 with points pt 7 palette title 'alpha'",
        ),
    );
    Ok(out)
}

/// Limit density of the continuous part of `nu`, normalised to mass one and
/// averaged over (l, r].
fn bin_density(nu: &MpMeasure, l: f64, r: f64) -> f64 {
    let mass = nu.continuous_mass();
    if mass > 0.0 {
        nu.continuous_mass_between(l, r) / (mass * (r - l))
    } else {
        0.0
    }
}

/// sup |F_emp − F| against the continuous part of `nu` normalised to mass one.
fn ks_distance(values: &[f64], nu: &MpMeasure) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, _) = nu.edges();
    let mass = nu.continuous_mass();
    let total = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = nu.continuous_mass_between(lo - 1.0, *x) / mass;
            (i as f64 / total - f).abs().max(((i + 1) as f64 / total - f).abs())
        })
        .fold(0.0, f64::max)
}

fn histogram_bulk(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let base = cfg.seeds[0];
    let mut out = Outputs::default();
    let mut density = String::from("c,alpha,bin_left,bin_right,empirical,limit\n");
    let mut summary = String::from("c,alpha,reps,kept,ks_distance,max_abs_density_diff\n");
    for (c, alpha) in cartesian(&cfg.c_grid, &cfg.alpha_grid) {
        let p = ExperimentConfig::p_for(n, c);
        let nu0 = null_measure(c, p, cfg.upsilon)?;
        // Eigenvalues tracking the atom are the smallest ⌊(1 − 1/c)₊ n⌋.
        let atom = ((1.0 - 1.0 / c).max(0.0) * n as f64).floor() as usize;
        let top = cfg.bulk_from - 1;
        let pooled: Vec<Vec<f64>> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| {
                let cloud = spiked(n, p, vec![cfg.lambda(alpha, n, p)], child_seed(base, r))?;
                let ev = eigenvalues(&w_hp(&cloud, cfg.upsilon)?)?;
                Ok(ev[top.min(n)..n.saturating_sub(atom).max(top.min(n))].to_vec())
            })
            .collect::<Result<_>>()?;
        let pooled: Vec<f64> = pooled.into_iter().flatten().collect();
        let (lo, hi) = nu0.edges();
        let margin = 0.1 * (hi - lo);
        let hist = esd_histogram_range(&pooled, cfg.bins, lo - margin, hi + margin, None)?;
        let total = pooled.len() as f64;
        let mut worst = 0.0f64;
        for k in 0..cfg.bins {
            let (l, r) = (hist.edges[k], hist.edges[k + 1]);
            let emp = hist.counts[k] as f64 / (total * (r - l));
            let lim = bin_density(&nu0, l, r);
            worst = worst.max((emp - lim).abs());
            row!(density, "{c:?},{alpha:?},{l:?},{r:?},{emp:?},{lim:?}");
        }
        let ks = ks_distance(&pooled, &nu0);
        row!(summary, "{c:?},{alpha:?},{},{},{ks:?},{worst:?}", cfg.reps, pooled.len());
        let mut h = String::from("bin_left,bin_right,count\n");
        for k in 0..cfg.bins {
            row!(h, "{:?},{:?},{}", hist.edges[k], hist.edges[k + 1], hist.counts[k]);
        }
        out.file(format!("histogram_c{c}_a{alpha}.csv"), h);
    }
    for r in 0..cfg.reps as u64 {
        out.seed(format!("rep{r}"), child_seed(base, r));
    }
    out.file("histogram_density.csv", density);
    out.file("histogram_summary.csv", summary);
    out.file(
        "histogram.gp",
        gnuplot(
            "histogram",
            "set xlabel 'eigenvalue'\nset ylabel 'density'\nset style fill transparent solid 0.4\n\
             plot 'histogram_density.csv' using (($3+$4)/2):5 with boxes title 'empirical', \
             '' using (($3+$4)/2):6 with lines lw 2 title 'limit'",
        ),
    );
    Ok(out)
}

/// Threshold s per aspect ratio: the configured value or the resampled one.
fn thresholds(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<Vec<(f64, f64, &'static str)>> {
    cfg.c_grid
        .iter()
        .enumerate()
        .map(|(k, &c)| match cfg.s {
            Some(s) => Ok((c, s, "config")),
            None => Ok((
                c,
                resample_threshold(c, n, cfg.upsilon, cfg.resample_reps, cfg.resample_level, child_seed(seed, k as u64))?,
                "resample",
            )),
        })
        .collect()
}

fn omega_sweep(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let threshold_seed = child_seed(cfg.seeds[0], u64::MAX);
    let ths = thresholds(cfg, n, threshold_seed)?;
    let targets = [("W", SelectionTarget::Affinity), ("A", SelectionTarget::Transition)];
    let mut jobs = Vec::new();
    for (ti, _) in targets.iter().enumerate() {
        for (ci, _) in ths.iter().enumerate() {
            for &alpha in &cfg.alpha_grid {
                for &seed in &cfg.seeds {
                    jobs.push((ti, ci, alpha, seed));
                }
            }
        }
    }
    let results: Vec<(f64, OmegaSelection)> = jobs
        .par_iter()
        .map(|&(ti, ci, alpha, seed)| {
            let (c, s, _) = ths[ci];
            let p = ExperimentConfig::p_for(n, c);
            let lambda = cfg.lambda(alpha, n, p);
            let cloud = crate::data_gen::gen_circle(n, p, lambda, seed)?;
            let sel = select_omega_with(
                &cloud.noisy(),
                cfg.upsilon,
                cfg.omega,
                s,
                OutlierWindow::top_half(n, p),
                targets[ti].1,
            )?;
            Ok((lambda, sel))
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut th = String::from("c,s,source\n");
    for (c, s, src) in &ths {
        row!(th, "{c:?},{s:?},{src}");
    }
    let mut sel_csv = String::from("matrix,c,alpha,lambda,seed,s,omega,h,k\n");
    let mut prof = String::from("matrix,c,alpha,seed,omega_i,k_i\n");
    let mut json = Vec::new();
    for (&(ti, ci, alpha, seed), (lambda, sel)) in jobs.iter().zip(&results) {
        let (m, c) = (targets[ti].0, ths[ci].0);
        let k = sel.k_profile.iter().find(|(w, _)| *w == sel.omega).map_or(0, |x| x.1);
        row!(sel_csv, "{m},{c:?},{alpha:?},{lambda:?},{seed},{:?},{:?},{:?},{k}", sel.s, sel.omega, sel.h);
        for (w, k) in &sel.k_profile {
            row!(prof, "{m},{c:?},{alpha:?},{seed},{w:?},{k}");
        }
        json.push(serde_json::json!({ "matrix": m, "c": c, "alpha": alpha, "seed": seed, "selection": sel }));
    }
    out.seed("threshold", threshold_seed);
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("omega_thresholds.csv", th);
    out.file("omega_sweep.csv", sel_csv);
    out.file("omega_profiles.csv", prof);
    out.file("omega_selections.json", serde_json::to_string_pretty(&json)? + "\n");
    out.file(
        "omega_sweep.gp",
        gnuplot(
            "omega_sweep",
            "set xlabel 'alpha'\nset ylabel 'selected omega'\nset yrange [0:1]\n\
             plot 'omega_sweep.csv' using 3:7:2 with linespoints pt 7 palette title 'c'",
        ),
    );
    Ok(out)
}

pub(super) const MANIFOLD_METHODS: [&str; 3] = ["adaptive", "medq", "h_p"];

fn manifold_rmse(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let base = cfg.seeds[0];
    let threshold_seed = child_seed(base, u64::MAX);
    let ths = thresholds(cfg, n, threshold_seed)?;
    let jobs = cartesian(&(0..ths.len()).collect::<Vec<_>>(), &(0..cfg.reps as u64).collect::<Vec<_>>());
    let results: Vec<Vec<(f64, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(ci, r)| {
            let (c, s, _) = ths[ci];
            let p = ExperimentConfig::p_for(n, c);
            let a = cfg.amplitude * (p as f64).sqrt();
            let seed = child_seed(base, r);
            let cloud = match cfg.manifold {
                Manifold::CurveM1 => gen_curve_m1(n, p, a, false, seed)?,
                Manifold::KleinBottle => gen_klein_bottle(n, p, a, false, seed)?,
            };
            manifold_rep(&cloud, cfg.upsilon, s, cfg)
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut csv = String::from("manifold,c,rep,seed,method,h,index,rmse\n");
    let mut sums = vec![vec![vec![(0.0f64, 0.0f64); cfg.vectors]; MANIFOLD_METHODS.len()]; ths.len()];
    for (&(ci, r), per_method) in jobs.iter().zip(&results) {
        let c = ths[ci].0;
        for (mi, (h, rmse)) in per_method.iter().enumerate() {
            for (j, v) in rmse.iter().enumerate() {
                row!(csv, "{},{c:?},{r},{},{},{h:?},{},{v:?}", cfg.manifold.name(), child_seed(base, r), MANIFOLD_METHODS[mi], j + 1);
                sums[ci][mi][j].0 += v;
                sums[ci][mi][j].1 += v * v;
            }
        }
    }
    let mut summary = String::from("manifold,c,method,index,mean,sd\n");
    let reps = cfg.reps as f64;
    for (ci, per_method) in sums.iter().enumerate() {
        for (mi, per_index) in per_method.iter().enumerate() {
            for (j, (s1, s2)) in per_index.iter().enumerate() {
                let mean = s1 / reps;
                let sd = if cfg.reps > 1 { ((s2 - reps * mean * mean) / (reps - 1.0)).max(0.0).sqrt() } else { 0.0 };
                row!(summary, "{},{:?},{},{},{mean:?},{sd:?}", cfg.manifold.name(), ths[ci].0, MANIFOLD_METHODS[mi], j + 1);
            }
        }
    }
    let mut th = String::from("c,s,source\n");
    for (c, s, src) in &ths {
        row!(th, "{c:?},{s:?},{src}");
    }
    out.seed("threshold", threshold_seed);
    for r in 0..cfg.reps as u64 {
        out.seed(format!("rep{r}"), child_seed(base, r));
    }
    out.file("manifold_thresholds.csv", th);
    out.file("manifold_rmse.csv", csv);
    out.file("manifold_summary.csv", summary);
    out.file(
        "manifold_rmse.gp",
        gnuplot(
            "manifold_rmse",
            "set xlabel 'eigenvector index'\nset ylabel 'mean RMSE'\n\
             plot for [m in 'adaptive medq h_p'] 'manifold_summary.csv' \
             using 4:(strcol(3) eq m ? $5 : NaN) with linespoints title m",
        ),
    );
    Ok(out)
}

/// Bandwidth and per-vector RMSE against the clean eigenvectors (h = λ + p)
/// for each of [`MANIFOLD_METHODS`].
pub(super) fn manifold_rep(cloud: &PointCloud, upsilon: f64, s: f64, cfg: &ExperimentConfig) -> Result<Vec<(f64, Vec<f64>)>> {
    let (n, p) = (cloud.n, cloud.p);
    let k = cfg.vectors.min(n);
    let clean_h = cloud.signal_strength() + p as f64;
    let clean = sym_eigs(&clean_affinity(cloud, KernelParams::new(upsilon, clean_h)?)?, k, "W1")?;
    let clean_v = clean.eigenvectors.expect("vectors requested");
    let x = cloud.noisy();
    let d2 = pairwise_sq_dists(&x);
    let adaptive = select_omega(&x, upsilon, cfg.omega, s, OutlierWindow::top_half(n, p))?.h;
    let medq = quantile_bandwidth(&d2, 0.5)?;
    [adaptive, medq, p as f64]
        .into_iter()
        .map(|h| {
            let w = affinity(&d2, KernelParams::new(upsilon, h)?)?;
            let v = sym_eigs(&w, k, "W")?.eigenvectors.expect("vectors requested");
            Ok((h, eigvec_rmse(&clean_v, &v)?))
        })
        .collect()
}

fn stieltjes_comparison(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let jobs = cartesian(&cfg.c_grid, &cartesian(&cfg.alpha_grid, &cfg.seeds));
    let results: Vec<(StieltjesGrid, Vec<f64>, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(c, (alpha, seed))| {
            let p = ExperimentConfig::p_for(n, c);
            let cloud = spiked(n, p, vec![cfg.lambda(alpha, n, p)], seed)?;
            let w = w_hp(&cloud, cfg.upsilon)?;
            let w1 = clean_affinity(&cloud, KernelParams::new(cfg.upsilon, p as f64)?)?;
            let wb = w_b1(&w1, &noise_gram(&cloud), cfg.upsilon)?;
            let grid = StieltjesGrid::new(cfg.stieltjes_a, alpha, n, cfg.stieltjes_energies, cfg.stieltjes_etas)?;
            Ok((grid, eigenvalues(&w)?, eigenvalues(&wb)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut points = String::from("c,alpha,seed,e,eta,abs_diff\n");
    let mut summary = String::from("c,alpha,seed,sup,eta_min,bound\n");
    for (&(c, (alpha, seed)), (grid, ew, eb)) in jobs.iter().zip(&results) {
        for &(e, eta) in &grid.points {
            let z = Complex64::new(e, eta);
            row!(points, "{c:?},{alpha:?},{seed},{e:?},{eta:?},{:?}", (stieltjes(ew, z)? - stieltjes(eb, z)?).norm());
        }
        let sup = stieltjes_compare_eigs(ew, eb, grid)?;
        let bound = 2.0 / ((n as f64).sqrt() * grid.eta_min * grid.eta_min);
        row!(summary, "{c:?},{alpha:?},{seed},{sup:?},{:?},{bound:?}", grid.eta_min);
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("stieltjes_points.csv", points);
    out.file("stieltjes_summary.csv", summary);
    out.file(
        "stieltjes.gp",
        gnuplot(
            "stieltjes",
            "set xlabel 'E'\nset ylabel 'eta'\nset logscale y\n\
             plot 'stieltjes_points.csv' using 4:5:6 with points pt 5 ps 0.6 palette title '|m_W - m_Wb1|'",
        ),
    );
    Ok(out)
}

/// One d = 1 versus d = 2 configuration; strengths are exponents of p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2Case {
    pub label: &'static str,
    pub alpha_d1: f64,
    pub alpha_d2: [f64; 2],
    /// Whether the bulks are expected to agree.
    pub close: bool,
}

pub const D2_CASES: [D2Case; 3] = [
    D2Case { label: "slow_slow", alpha_d1: 0.4, alpha_d2: [0.4, 0.1], close: true },
    D2Case { label: "large_large", alpha_d1: 2.0, alpha_d2: [2.0, 1.6], close: false },
    D2Case { label: "large_small", alpha_d1: 2.0, alpha_d2: [2.0, 0.4], close: true },
];

/// Bulk spectra of W for one spike against two spikes, same noise.
pub fn compare_d2(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let cases: Vec<usize> = (0..D2_CASES.len()).collect();
    let jobs = cartesian(&cases, &cartesian(&cfg.c_grid, &cfg.seeds));
    let results: Vec<(Vec<f64>, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(k, (c, seed))| {
            let case = D2_CASES[k];
            let p = ExperimentConfig::p_for(n, c);
            let pf = p as f64;
            let one = spiked(n, p, vec![pf.powf(case.alpha_d1)], seed)?;
            let two = spiked(n, p, case.alpha_d2.iter().map(|a| pf.powf(*a)).collect(), seed)?;
            Ok((eigenvalues(&w_hp(&one, cfg.upsilon)?)?, eigenvalues(&w_hp(&two, cfg.upsilon)?)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Outputs::default();
    let mut eigs = String::from("case,c,seed,index,d1,d2\n");
    let mut summary = String::from("case,c,seed,sup_bulk_diff,expect_close\n");
    for (&(k, (c, seed)), (e1, e2)) in jobs.iter().zip(&results) {
        let case = D2_CASES[k];
        for (i, (a, b)) in e1.iter().zip(e2).enumerate() {
            row!(eigs, "{},{c:?},{seed},{},{a:?},{b:?}", case.label, i + 1);
        }
        let from = (cfg.bulk_from - 1).min(n);
        let sup = max_weyl(&e1[from..], &e2[from..]);
        row!(summary, "{},{c:?},{seed},{sup:?},{}", case.label, case.close);
    }
    for s in &cfg.seeds {
        out.seed("cloud", *s);
    }
    out.file("d2_eigs.csv", eigs);
    out.file("d2_summary.csv", summary);
    out.file(
        "d2.gp",
        gnuplot(
            "d2",
            "set xlabel 'index'\nset ylabel 'eigenvalue'\n\
             plot 'd2_eigs.csv' using 4:5 with points pt 7 ps 0.3 title 'd=1', \
             '' using 4:6 with points pt 6 ps 0.5 title 'd=2'",
        ),
    );
    Ok(out)
}

/// Third-eigenvector (by default) RMSE of the adaptive-bandwidth A and the
/// zeroed-out Å against the clean A₁ at the adaptive bandwidth.
pub fn zeroing_comparison(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.n;
    let c = cfg.c_grid[0];
    let p = ExperimentConfig::p_for(n, c);
    let threshold_seed = child_seed(cfg.seeds[0], u64::MAX);
    let s = match cfg.s {
        Some(s) => s,
        None => resample_threshold(c, n, cfg.upsilon, cfg.resample_reps, cfg.resample_level, threshold_seed)?,
    };
    let k = cfg.eigvec_index;
    let col = |m: &Matrix| Matrix::from_fn(n, 1, |i, _| m[(i, k - 1)]);
    let jobs = cartesian(&cfg.alpha_grid, &cfg.seeds);
    let results: Vec<(f64, f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(alpha, seed)| {
            let lambda = cfg.lambda(alpha, n, p);
            let cloud = spiked(n, p, vec![lambda], seed)?;
            let x = cloud.noisy();
            let d2 = pairwise_sq_dists(&x);
            let h = select_omega(&x, cfg.upsilon, cfg.omega, s, OutlierWindow::top_half(n, p))?.h;
            let w1 = clean_affinity(&cloud, KernelParams::new(cfg.upsilon, h)?)?;
            let clean = transition_eigvecs(&w1, k, "A1")?.eigenvectors.expect("vectors requested");
            let w = affinity(&d2, KernelParams::new(cfg.upsilon, h)?)?;
            let adaptive = transition_eigvecs(&w, k, "A")?.eigenvectors.expect("vectors requested");
            let mut w0 = affinity(&d2, KernelParams::new(cfg.upsilon, cfg.zero_h)?)?;
            for i in 0..n {
                w0[(i, i)] = 0.0;
            }
            let zeroed = transition_eigvecs(&w0, k, "A0")?.eigenvectors.expect("vectors requested");
            Ok((
                lambda,
                h,
                eigvec_rmse(&col(&clean), &col(&adaptive))?[0],
                eigvec_rmse(&col(&clean), &col(&zeroed))?[0],
            ))
        })
        .collect::<Result<_>>()?;
    let baseline = (2.0 / n as f64).sqrt();
    let mut out = Outputs::default();
    let mut csv = String::from("alpha,lambda,seed,method,h,rmse\n");
    let mut means: Vec<(f64, f64, f64)> = cfg.alpha_grid.iter().map(|a| (*a, 0.0, 0.0)).collect();
    for (&(alpha, seed), (lambda, h, ra, rz)) in jobs.iter().zip(&results) {
        row!(csv, "{alpha:?},{lambda:?},{seed},adaptive,{h:?},{ra:?}");
        row!(csv, "{alpha:?},{lambda:?},{seed},zeroed,{:?},{rz:?}", cfg.zero_h);
        let m = means.iter_mut().find(|m| m.0 == alpha).expect("alpha from grid");
        m.1 += ra / cfg.seeds.len() as f64;
        m.2 += rz / cfg.seeds.len() as f64;
    }
    let mut summary = String::from("alpha,mean_rmse_adaptive,mean_rmse_zeroed,random_baseline,s\n");
    for (alpha, a, z) in means {
        row!(summary, "{alpha:?},{a:?},{z:?},{baseline:?},{s:?}");
    }
    out.seed("threshold", threshold_seed);
    for sd in &cfg.seeds {
        out.seed("cloud", *sd);
    }
    out.file("zeroing.csv", csv);
    out.file("zeroing_summary.csv", summary);
    out.file(
        "zeroing.gp",
        gnuplot(
            "zeroing",
            "set xlabel 'alpha'\nset ylabel 'mean RMSE'\n\
             plot 'zeroing_summary.csv' using 1:2 with linespoints title 'A adaptive', \
             '' using 1:3 with linespoints title 'zeroed', '' using 1:4 with lines dt 2 title 'random'",
        ),
    );
    Ok(out)
}
