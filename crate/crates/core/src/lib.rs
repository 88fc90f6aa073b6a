//! Spectra of Gaussian kernel affinity and transition matrices built from
//! high-dimensional noisy point clouds, together with the limiting objects
//! they are compared against.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximants;
pub mod bandwidth;
pub mod data_gen;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod matrix;
pub mod mp_law;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};
pub use matrix::Matrix;
