//! Reproducible random streams and parallel Monte-Carlo averaging.
//!
//! One root seed fixes every run: run `r` draws from the ChaCha stream `r` of
//! the generator seeded with the root seed, so results do not depend on how
//! runs are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let runs = samples.len();
        let mean = samples.iter().sum::<f64>() / runs as f64;
        let stderr = if runs > 1 {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
            (var / runs as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr, runs }
    }
}

/// Evaluates `f` on `runs` independent streams in parallel, in run order.
pub fn par_map<R, F>(runs: usize, seed: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<R> + Sync,
{
    (0..runs as u64)
        .into_par_iter()
        .map(|r| f(r, &mut run_rng(seed, r)))
        .collect()
}

pub fn par_samples<F>(runs: usize, seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    par_map(runs, seed, f)
}

pub fn par_estimate<F>(runs: usize, seed: u64, f: F) -> Result<Estimate>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    Ok(Estimate::from_samples(&par_samples(runs, seed, f)?))
}
