//! Chamber walk simulation and the stopping time `T`.
//!
//! `T` is the first time the product `F^t ... F^1` of the picked faces is a
//! chamber. The product has a zero at hyperplane `i` exactly when every
//! picked face does, so `T` is tracked with the set of still-uncut
//! hyperplanes instead of the full product.
//!
//! Randomness: trial `k` of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `k`. Trials are
//! therefore independent and the output does not depend on how trials are
//! scheduled across workers.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arrangement::{check_separating, Arrangement, SignVector, WeightedFaceSet};
use crate::error::{validation, Error, Result};
use crate::math;

pub type TrialRng = ChaCha8Rng;

/// Name recorded in experiment metadata.
pub const PRNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream=trial)";

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Anything that can draw one realization of a stopping time.
pub trait StoppingTimeSampler: Sync {
    fn sample_stopping_time(&self, rng: &mut TrialRng, cap: u64) -> Result<u64>;
}

impl StoppingTimeSampler for WeightedFaceSet {
    fn sample_stopping_time(&self, rng: &mut TrialRng, cap: u64) -> Result<u64> {
        let mut cut = vec![false; self.hyperplanes()];
        let mut uncut = self.hyperplanes();
        let mut steps = 0u64;
        while uncut > 0 {
            if steps >= cap {
                return Err(Error::StepCap { cap });
            }
            steps += 1;
            let idx = self.sample_index(rng);
            for &i in self.support(idx) {
                if !cut[i] {
                    cut[i] = true;
                    uncut -= 1;
                }
            }
        }
        Ok(steps)
    }
}

/// Current chamber, uncut hyperplanes and step count of one trajectory.
#[derive(Debug, Clone)]
pub struct WalkState {
    current: SignVector,
    cut: Vec<bool>,
    uncut: usize,
    steps: u64,
}

impl WalkState {
    pub fn new(start: SignVector) -> Result<Self> {
        if !start.is_chamber() {
            return Err(validation(alloc::format!("start {start} is not a chamber")));
        }
        let m = start.len();
        Ok(WalkState {
            current: start,
            cut: vec![false; m],
            uncut: m,
            steps: 0,
        })
    }

    /// One step: `C <- F C`, and the support of `F` is cut.
    pub fn apply(&mut self, face: &SignVector) {
        face.act_on(&mut self.current);
        for i in face.support() {
            if !self.cut[i] {
                self.cut[i] = true;
                self.uncut -= 1;
            }
        }
        self.steps += 1;
    }

    pub fn current_chamber(&self) -> &SignVector {
        &self.current
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn uncut(&self) -> impl Iterator<Item = usize> + '_ {
        self.cut
            .iter()
            .enumerate()
            .filter(|(_, c)| !**c)
            .map(|(i, _)| i)
    }

    /// True once the product of the picked faces is a chamber.
    pub fn has_stopped(&self) -> bool {
        self.uncut == 0
    }
}

fn check_walk_inputs(arr: &Arrangement, w: &WeightedFaceSet) -> Result<()> {
    if w.hyperplanes() != arr.hyperplanes() {
        return Err(Error::Dimension {
            expected: arr.hyperplanes(),
            found: w.hyperplanes(),
        });
    }
    check_separating(arr, w).into_result()
}

/// `C^t = F^t ... F^1 x0` for one random draw of the faces.
pub fn simulate_chamber_at(
    arr: &Arrangement,
    w: &WeightedFaceSet,
    start: &SignVector,
    t: u64,
    seed: u64,
) -> Result<SignVector> {
    check_walk_inputs(arr, w)?;
    if !arr.contains_face(start) {
        return Err(validation(alloc::format!(
            "{start} is not a face of the arrangement"
        )));
    }
    let mut state = WalkState::new(start.clone())?;
    let mut rng = trial_rng(seed, 0);
    for _ in 0..t {
        let idx = w.sample_index(&mut rng);
        state.apply(w.face(idx));
    }
    Ok(state.current)
}

/// One draw of `T`.
pub fn sample_stopping_time(arr: &Arrangement, w: &WeightedFaceSet, seed: u64) -> Result<u64> {
    check_walk_inputs(arr, w)?;
    w.sample_stopping_time(&mut trial_rng(seed, 0), DEFAULT_STEP_CAP)
}

/// Monte Carlo estimate of `P(T > t)` on a grid of times.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalEstimate {
    pub t_values: Vec<u64>,
    pub p_hat: Vec<f64>,
    pub std_err: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

pub fn validate_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return Err(validation("time grid is empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(validation("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Samples of `T` for trials `0..trials`, in trial order.
pub fn sample_stopping_times<S: StoppingTimeSampler + ?Sized>(
    sampler: &S,
    trials: u64,
    seed: u64,
    cap: u64,
) -> Result<Vec<u64>> {
    (0..trials)
        .map(|k| sampler.sample_stopping_time(&mut trial_rng(seed, k), cap))
        .collect()
}

/// Survival curve from already drawn stopping times; each sample is
/// evaluated against the whole grid.
pub fn survival_from_samples(samples: &[u64], grid: &[u64], seed: u64) -> Result<SurvivalEstimate> {
    validate_grid(grid)?;
    if samples.is_empty() {
        return Err(validation("at least one trial is required"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let p_hat: Vec<f64> = grid
        .iter()
        .map(|&t| (sorted.len() - sorted.partition_point(|&x| x <= t)) as f64 / n)
        .collect();
    let std_err = p_hat
        .iter()
        .map(|&p| math::sqrt(p * (1.0 - p) / n))
        .collect();
    Ok(SurvivalEstimate {
        t_values: grid.to_vec(),
        p_hat,
        std_err,
        trials: samples.len() as u64,
        seed,
    })
}

pub fn estimate_survival_with<S: StoppingTimeSampler + ?Sized>(
    sampler: &S,
    grid: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    validate_grid(grid)?;
    if trials == 0 {
        return Err(validation("trials must be >= 1"));
    }
    let samples = sample_stopping_times(sampler, trials, seed, DEFAULT_STEP_CAP)?;
    survival_from_samples(&samples, grid, seed)
}

pub fn estimate_survival(
    arr: &Arrangement,
    w: &WeightedFaceSet,
    grid: &[u64],
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    check_walk_inputs(arr, w)?;
    estimate_survival_with(w, grid, trials, seed)
}
