//! Synthetic dataset generators.
//!
//! Both generators consume a single ChaCha8 stream seeded with the data
//! seed, drawing train, validation, and test splits back to back, so the
//! three splits are disjoint by construction and a seed pins every sample.

use persistent_core::model::{Batch, SplitData};
use persistent_core::Matrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::DataConfig;
use crate::error::Result;

/// Number of clusters in the classification task.
pub const BLOB_CLASSES: usize = 4;
/// Ambient dimension of the classification task.
pub const BLOB_DIM: usize = 8;
/// Distance of each cluster mean from the origin.
pub const BLOB_SEPARATION: f64 = 4.0;

/// 1-D regression data: `x ~ U[-3, 3)`, `y = x^2 - 2 + noise_sigma * N(0,1)`.
///
/// The target is smooth and strongly nonlinear, so any predictor that stays
/// affine on one or two pieces leaves a large residual. The noise draw is
/// consumed even when `noise_sigma` is zero, keeping the x-sequence
/// identical across noise settings.
pub fn gen_regress1d(config: &DataConfig, seed: u64) -> Result<SplitData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: usize| -> Result<Batch> {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random_range(-3.0..3.0);
            let noise: f64 = StandardNormal.sample(&mut rng);
            xs.push(x);
            ys.push(x * x - 2.0 + config.noise_sigma * noise);
        }
        Ok(Batch::new(Matrix::from_vec(n, 1, xs)?, Matrix::from_vec(n, 1, ys)?)?)
    };
    let train = make(config.n_train)?;
    let val = make(config.n_val)?;
    let test = make(config.n_test)?;
    Ok(SplitData { train, val, test })
}

/// Gaussian-blob classification data: 4 classes in 8 dimensions with unit
/// covariance and means `BLOB_SEPARATION * e_class`; targets are one-hot.
pub fn gen_blobs(config: &DataConfig, seed: u64) -> Result<SplitData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: usize| -> Result<Batch> {
        let mut inputs = Vec::with_capacity(n * BLOB_DIM);
        let mut targets = Vec::with_capacity(n * BLOB_CLASSES);
        for _ in 0..n {
            let class = rng.random_range(0..BLOB_CLASSES);
            for d in 0..BLOB_DIM {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let mean = if d == class { BLOB_SEPARATION } else { 0.0 };
                inputs.push(mean + noise);
            }
            for c in 0..BLOB_CLASSES {
                targets.push(if c == class { 1.0 } else { 0.0 });
            }
        }
        Ok(Batch::new(
            Matrix::from_vec(n, BLOB_DIM, inputs)?,
            Matrix::from_vec(n, BLOB_CLASSES, targets)?,
        )?)
    };
    let train = make(config.n_train)?;
    let val = make(config.n_val)?;
    let test = make(config.n_test)?;
    Ok(SplitData { train, val, test })
}
