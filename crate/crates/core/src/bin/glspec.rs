use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use glspec::bandwidth::{quantile_bandwidth, resample_threshold, select_omega_with, OmegaGrid, OutlierWindow, SelectionTarget};
use glspec::data_gen::{
    gen_circle, gen_curve_m1, gen_klein_bottle, gen_spiked, read_cloud_binary, read_cloud_csv, write_cloud_binary,
    write_cloud_csv, GeneratorConfig, LambdaBase, NoiseDist, PointCloud, Strengths,
};
use glspec::experiments::{self, Experiment, ExperimentConfig, RunManifest};
use glspec::kernels::{affinity, normalized_affinity, pairwise_sq_dists, transition, KernelParams};
use glspec::matrix::{write_matrix_csv, Matrix, MatrixHeader};
use glspec::mp_law::nu_lambda;
use glspec::spectrum::{eigenvalues, esd_histogram, write_spectrum_csv};
use glspec::{Error, Result};

#[derive(Parser)]
#[command(name = "glspec", version, about = "Kernel matrix spectra of noisy high-dimensional point clouds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Spiked,
    Circle,
    CurveM1,
    KleinBottle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Base {
    N,
    P,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    W,
    A,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    /// Affinity W.
    W,
    /// Transition D⁻¹W.
    A,
    /// Laplacian (I − A)/h.
    L,
    /// Transition with W's diagonal zeroed.
    Zeroed,
}

impl MatrixKind {
    fn name(self) -> &'static str {
        match self {
            MatrixKind::W => "W",
            MatrixKind::A => "A",
            MatrixKind::L => "L",
            MatrixKind::Zeroed => "A0",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a point cloud.
    Gen {
        #[arg(long, value_enum, default_value = "spiked")]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Ambient dimension; alternatively give --c.
        #[arg(long, conflicts_with = "c")]
        p: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        /// Signal strengths (spiked: one per direction; circle: total λ).
        #[arg(long, value_delimiter = ',', conflicts_with = "alpha")]
        lambda: Vec<f64>,
        /// Exponents, λ = base^α.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value = "p")]
        base: Base,
        /// Manifold scale a = amplitude·√p.
        #[arg(long, default_value_t = 20.0)]
        amplitude: f64,
        #[arg(long)]
        rotate: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path; `.bin` writes the binary format, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named experiment.
    Run {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Re-run the configuration recorded in a manifest.
        #[arg(long, conflicts_with_all = ["experiment", "config"])]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fast: bool,
    },
    /// Adaptive bandwidth selection on a point cloud; prints the selection JSON.
    Omega {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        upsilon: f64,
        /// Outlier threshold; resampled when absent.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 200)]
        resample_reps: usize,
        #[arg(long, default_value_t = 0.95)]
        resample_level: f64,
        #[arg(long, default_value_t = 0.05)]
        omega_l: f64,
        #[arg(long, default_value_t = 0.95)]
        omega_u: f64,
        #[arg(long, default_value_t = 91)]
        t: usize,
        #[arg(long, value_enum, default_value = "w")]
        target: Target,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum of a kernel matrix built from a point cloud.
    Spectra {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, value_enum, default_value = "w")]
        matrix: MatrixKind,
        #[arg(long, default_value_t = 0.5)]
        upsilon: f64,
        /// Bandwidth; defaults to p.
        #[arg(long, conflicts_with = "omega")]
        h: Option<f64>,
        /// Use the ω-quantile of pairwise squared distances as bandwidth.
        #[arg(long)]
        omega: Option<f64>,
        /// `index,eigenvalue` output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        #[arg(long)]
        histogram_out: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Table of the null bulk measure for this cloud's n, p and υ.
        #[arg(long)]
        mp_table_out: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        mp_points: usize,
    },
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn read_cloud(path: &Path) -> Result<PointCloud> {
    if is_binary(path) {
        read_cloud_binary(path)
    } else {
        read_cloud_csv(path)
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    kind: Kind,
    n: usize,
    p: Option<usize>,
    c: Option<f64>,
    lambda: Vec<f64>,
    alpha: Vec<f64>,
    base: Base,
    amplitude: f64,
    rotate: bool,
    seed: u64,
) -> Result<PointCloud> {
    let p = match (p, c) {
        (Some(p), _) => p,
        (None, Some(c)) if c > 0.0 => ExperimentConfig::p_for(n, c),
        _ => return Err(Error::Config("give --p or a positive --c".into())),
    };
    let base = match base {
        Base::N => LambdaBase::N,
        Base::P => LambdaBase::P,
    };
    let strengths = if alpha.is_empty() { Strengths::Explicit(lambda) } else { Strengths::Exponents { alpha, base } };
    let a = amplitude * (p as f64).sqrt();
    match kind {
        Kind::Spiked => {
            let d = match &strengths {
                Strengths::Explicit(l) => l.len(),
                Strengths::Exponents { alpha, .. } => alpha.len(),
            };
            gen_spiked(&GeneratorConfig { n, p, d, strengths, noise_dist: NoiseDist::GaussianStd, rotate, seed })
        }
        Kind::Circle => {
            let cfg = GeneratorConfig { n, p, d: 1, strengths, noise_dist: NoiseDist::GaussianStd, rotate, seed };
            match cfg.lambdas().as_slice() {
                [l] => gen_circle(n, p, *l, seed),
                _ => Err(Error::Config("circle takes exactly one --lambda or --alpha".into())),
            }
        }
        Kind::CurveM1 => gen_curve_m1(n, p, a, rotate, seed),
        Kind::KleinBottle => gen_klein_bottle(n, p, a, rotate, seed),
    }
}

fn spectra_cmd(
    cloud: &Path,
    kind: MatrixKind,
    upsilon: f64,
    h: Option<f64>,
    omega: Option<f64>,
    out: &Path,
    matrix_out: Option<&Path>,
    histogram_out: Option<(&Path, usize)>,
    mp_table_out: Option<(&Path, usize)>,
) -> Result<()> {
    let cloud = read_cloud(cloud)?;
    let d2 = pairwise_sq_dists(&cloud.noisy());
    let h = match (h, omega) {
        (Some(h), _) => h,
        (None, Some(w)) => quantile_bandwidth(&d2, w)?,
        (None, None) => cloud.p as f64,
    };
    let mut w = affinity(&d2, KernelParams::new(upsilon, h)?)?;
    if matches!(kind, MatrixKind::Zeroed) {
        for i in 0..cloud.n {
            w[(i, i)] = 0.0;
        }
    }
    // A and Å are similar to the symmetric D^{-1/2} W D^{-1/2}.
    let eigs = match kind {
        MatrixKind::W => eigenvalues(&w)?,
        MatrixKind::A | MatrixKind::Zeroed => eigenvalues(&normalized_affinity(&w))?,
        MatrixKind::L => {
            let mut ev: Vec<f64> = eigenvalues(&normalized_affinity(&w))?.iter().map(|l| (1.0 - l) / h).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            ev
        }
    };
    write_spectrum_csv(out, &eigs)?;
    if let Some(path) = matrix_out {
        let m: Matrix = match kind {
            MatrixKind::W => w,
            MatrixKind::A | MatrixKind::Zeroed => transition(&w)?,
            MatrixKind::L => glspec::kernels::laplacian(&w, h)?,
        };
        write_matrix_csv(path, &m, &MatrixHeader { kind: kind.name().into(), upsilon, h })?;
    }
    if let Some((path, bins)) = histogram_out {
        esd_histogram(&eigs, bins, None)?.write_csv(path)?;
    }
    if let Some((path, points)) = mp_table_out {
        nu_lambda(cloud.c(), cloud.p, 0.0, upsilon)?.write_table_csv(path, points)?;
    }
    Ok(())
}

fn main_inner() -> Result<()> {
    let cli = Cli::parse();
    experiments::init_thread_pool()?;
    match cli.cmd {
        Cmd::Gen { kind, n, p, c, lambda, alpha, base, amplitude, rotate, seed, out } => {
            let cloud = generate(kind, n, p, c, lambda, alpha, base, amplitude, rotate, seed)?;
            if is_binary(&out) {
                write_cloud_binary(&out, &cloud)
            } else {
                write_cloud_csv(&out, &cloud)
            }
        }
        Cmd::Run { experiment, config, manifest, out, fast } => {
            let cfg = match manifest {
                Some(m) => RunManifest::read(&m)?.config,
                None => {
                    let name = experiment.as_deref().map(str::parse::<Experiment>).transpose()?;
                    match config {
                        Some(path) => ExperimentConfig::from_file(&path, name, fast)?,
                        None => ExperimentConfig::parse("", name, fast)?,
                    }
                }
            };
            let m = experiments::run(&cfg, &out)?;
            eprintln!(
                "{}: {} files in {} ({:.1} s)",
                m.experiment,
                m.outputs.len(),
                out.display(),
                m.wall_clock_seconds
            );
            Ok(())
        }
        Cmd::Omega { cloud, upsilon, s, resample_reps, resample_level, omega_l, omega_u, t, target, seed, out } => {
            let cloud = read_cloud(&cloud)?;
            let s = match s {
                Some(s) => s,
                None => resample_threshold(cloud.c(), cloud.n, upsilon, resample_reps, resample_level, seed)?,
            };
            let target = match target {
                Target::W => SelectionTarget::Affinity,
                Target::A => SelectionTarget::Transition,
            };
            let sel = select_omega_with(
                &cloud.noisy(),
                upsilon,
                OmegaGrid { omega_l, omega_u, t },
                s,
                OutlierWindow::top_half(cloud.n, cloud.p),
                target,
            )?;
            let json = sel.to_json()?;
            if let Some(path) = out {
                std::fs::write(&path, format!("{json}\n")).map_err(|source| Error::Io { path, source })?;
            }
            println!("{json}");
            Ok(())
        }
        Cmd::Spectra {
            cloud,
            matrix,
            upsilon,
            h,
            omega,
            out,
            matrix_out,
            histogram_out,
            bins,
            mp_table_out,
            mp_points,
        } => spectra_cmd(
            &cloud,
            matrix,
            upsilon,
            h,
            omega,
            &out,
            matrix_out.as_deref(),
            histogram_out.as_deref().map(|p| (p, bins)),
            mp_table_out.as_deref().map(|p| (p, mp_points)),
        ),
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("glspec: {e}");
            ExitCode::FAILURE
        }
    }
}
