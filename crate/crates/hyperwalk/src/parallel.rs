//! Trials fanned out over rayon. Trial `k` always uses stream `k` of the
//! seed, and results are collected in trial order, so the output does not
//! depend on the number of worker threads.

use hyperwalk_core::walk::{
    survival_from_samples, trial_rng, StoppingTimeSampler, DEFAULT_STEP_CAP,
};
use hyperwalk_core::{Result, SurvivalEstimate};
use rayon::prelude::*;

pub fn sample_stopping_times<S: StoppingTimeSampler + ?Sized>(
    sampler: &S,
    trials: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    (0..trials)
        .into_par_iter()
        .map(|k| sampler.sample_stopping_time(&mut trial_rng(seed, k), DEFAULT_STEP_CAP))
        .collect()
}

pub fn estimate_survival<S: StoppingTimeSampler + ?Sized>(
    sampler: &S,
    grid: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    hyperwalk_core::walk::validate_grid(grid)?;
    let samples = sample_stopping_times(sampler, trials.max(1), seed)?;
    survival_from_samples(&samples, grid, seed)
}
