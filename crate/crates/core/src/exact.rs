//! Exact computations on small arrangements.
//!
//! Tolerances: weights are validated to 1e-12, linear solves must leave a
//! residual below 1e-10, and the theorem-level identities are checked to
//! 1e-9 by the test suites.
//!
//! The cutoff location follows `log m / log(1/(1-b))` with window `1/b`. The
//! lower-bound step of the usual proof is sometimes written with the time
//! `(1/b) log_{1/b} m`; that form is not used here.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};

use crate::arrangement::{check_separating, Arrangement, SignVector, WeightedFaceSet};
use crate::error::{parameter, validation, Error, Result};
use crate::math;
use crate::matrix::{self, Matrix};
use crate::walk::trial_rng;

/// Caps for exact mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_chambers: usize,
    /// Inclusion-exclusion runs over subsets of at most this many hyperplanes.
    pub max_inclusion_exclusion_hyperplanes: usize,
    /// Node budget for the without-replacement enumeration.
    pub max_enumeration_nodes: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_chambers: 10_000,
            max_inclusion_exclusion_hyperplanes: 20,
            max_enumeration_nodes: 5_000_000,
        }
    }
}

pub const STATIONARY_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChamberDistribution {
    probs: Vec<f64>,
}

impl ChamberDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 || probs.iter().any(|p| !(-1e-12..=1.0 + 1e-12).contains(p))
        {
            return Err(validation(format!(
                "not a probability vector (sum {total})"
            )));
        }
        Ok(ChamberDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        ChamberDistribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_abs_diff(&self, other: &ChamberDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// For each chamber `C` and weighted face `F`, the index of `FC`.
struct ActionTable {
    chambers: usize,
    faces: usize,
    next: Vec<usize>,
    weights: Vec<f64>,
}

impl ActionTable {
    fn build(arr: &Arrangement, w: &WeightedFaceSet, limits: &ExactLimits) -> Result<Self> {
        if w.hyperplanes() != arr.hyperplanes() {
            return Err(Error::Dimension {
                expected: arr.hyperplanes(),
                found: w.hyperplanes(),
            });
        }
        let chambers = arr.chambers()?;
        if chambers.len() > limits.max_chambers {
            return Err(Error::Capacity {
                what: "exact-mode chambers",
                requested: chambers.len() as u128,
                limit: limits.max_chambers as u128,
            });
        }
        let mut next = Vec::with_capacity(chambers.len() * w.len());
        for c in chambers {
            for (f, _) in w.entries() {
                let mut d = c.clone();
                f.act_on(&mut d);
                let idx = arr.chamber_index(&d).ok_or_else(|| {
                    validation(format!("{f} * {c} = {d} is not a listed chamber"))
                })?;
                next.push(idx);
            }
        }
        Ok(ActionTable {
            chambers: chambers.len(),
            faces: w.len(),
            next,
            weights: w.entries().iter().map(|(_, p)| *p).collect(),
        })
    }

    /// `row * P` for a distribution row over chambers.
    fn step(&self, row: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (c, &mass) in row.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let targets = &self.next[c * self.faces..(c + 1) * self.faces];
            for (&d, &p) in targets.iter().zip(&self.weights) {
                out[d] += mass * p;
            }
        }
    }

    fn dense(&self) -> Matrix {
        let mut p = Matrix::zeros(self.chambers, self.chambers);
        for c in 0..self.chambers {
            for f in 0..self.faces {
                p[(c, self.next[c * self.faces + f])] += self.weights[f];
            }
        }
        p
    }
}

/// Row-stochastic matrix with `P(C, D) = sum of w(F) over F with FC = D`.
pub fn transition_matrix(arr: &Arrangement, w: &WeightedFaceSet) -> Result<Matrix> {
    Ok(ActionTable::build(arr, w, &ExactLimits::default())?.dense())
}

/// Stationary law from `pi P = pi`, `sum pi = 1`.
pub fn stationary_solve(arr: &Arrangement, w: &WeightedFaceSet) -> Result<ChamberDistribution> {
    check_separating(arr, w).into_result()?;
    let p = transition_matrix(arr, w)?;
    stationary_of(&p)
}

/// Solves `pi P = pi` with one balance equation replaced by normalization.
pub fn stationary_of(p: &Matrix) -> Result<ChamberDistribution> {
    let n = p.rows();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = p[(j, i)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let pi = matrix::solve(a, rhs)?;
    let residual = p
        .left_mul_vec(&pi)
        .iter()
        .zip(&pi)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_RESIDUAL_TOLERANCE {
        return Err(Error::Singular(format!(
            "stationary residual {residual:.3e}"
        )));
    }
    ChamberDistribution::new(pi.into_iter().map(|x| x.max(0.0)).collect())
}

/// Stationary law from sampling without replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryEstimate {
    pub distribution: ChamberDistribution,
    /// `None` for the exact enumeration, per-chamber standard errors when the
    /// Monte Carlo fallback was used.
    pub std_err: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WithoutReplacementOptions {
    pub limits: ExactLimits,
    pub fallback_samples: u64,
    pub seed: u64,
}

impl Default for WithoutReplacementOptions {
    fn default() -> Self {
        WithoutReplacementOptions {
            limits: ExactLimits::default(),
            fallback_samples: 100_000,
            seed: 0,
        }
    }
}

/// Draw faces from `w` without replacement and multiply them with the first
/// draw leftmost; the resulting chamber has the stationary law.
///
/// The enumeration walks the tree of draw orders and stops a branch as soon
/// as the left partial product is a chamber (later faces cannot change it).
/// If the tree exceeds the node budget, orders are sampled instead.
pub fn stationary_without_replacement(
    arr: &Arrangement,
    w: &WeightedFaceSet,
) -> Result<StationaryEstimate> {
    stationary_without_replacement_with(arr, w, &WithoutReplacementOptions::default())
}

pub fn stationary_without_replacement_with(
    arr: &Arrangement,
    w: &WeightedFaceSet,
    opts: &WithoutReplacementOptions,
) -> Result<StationaryEstimate> {
    check_separating(arr, w).into_result()?;
    let chambers = arr.chambers()?;
    if let Some(probs) = enumerate_orders(arr, w, opts.limits.max_enumeration_nodes) {
        return Ok(StationaryEstimate {
            distribution: ChamberDistribution::new(probs)?,
            std_err: None,
        });
    }
    let n = opts.fallback_samples.max(1);
    let mut counts = vec![0u64; chambers.len()];
    for k in 0..n {
        let mut rng = trial_rng(opts.seed, k);
        let mut weights: Vec<f64> = w.entries().iter().map(|(_, p)| *p).collect();
        let mut product = SignVector::zero(arr.hyperplanes());
        while !product.is_chamber() {
            let dist = WeightedIndex::new(&weights).map_err(|e| validation(format!("{e}")))?;
            let idx = dist.sample(&mut rng);
            weights[idx] = 0.0;
            // product <- product * F: F only fills the zeros
            let f = w.face(idx);
            product = product.product(f)?;
        }
        let c = arr
            .chamber_index(&product)
            .ok_or_else(|| validation(format!("{product} is not a listed chamber")))?;
        counts[c] += 1;
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let std_err = probs
        .iter()
        .map(|&p| math::sqrt(p * (1.0 - p) / n as f64))
        .collect();
    Ok(StationaryEstimate {
        distribution: ChamberDistribution::new(probs)?,
        std_err: Some(std_err),
    })
}

fn enumerate_orders(arr: &Arrangement, w: &WeightedFaceSet, budget: usize) -> Option<Vec<f64>> {
    struct Ctx<'a> {
        arr: &'a Arrangement,
        w: &'a WeightedFaceSet,
        used: Vec<bool>,
        probs: Vec<f64>,
        nodes: usize,
        budget: usize,
    }
    fn rec(ctx: &mut Ctx<'_>, product: &SignVector, prob: f64, drawn_mass: f64) -> bool {
        ctx.nodes += 1;
        if ctx.nodes > ctx.budget {
            return false;
        }
        if product.is_chamber() {
            match ctx.arr.chamber_index(product) {
                Some(c) => ctx.probs[c] += prob,
                None => return false,
            }
            return true;
        }
        let remaining = 1.0 - drawn_mass;
        for idx in 0..ctx.w.len() {
            if ctx.used[idx] {
                continue;
            }
            let p = ctx.w.weight(idx);
            let Ok(next) = product.product(ctx.w.face(idx)) else {
                return false;
            };
            ctx.used[idx] = true;
            let ok = rec(ctx, &next, prob * p / remaining, drawn_mass + p);
            ctx.used[idx] = false;
            if !ok {
                return false;
            }
        }
        true
    }
    let chambers = arr.chambers().ok()?;
    let mut ctx = Ctx {
        arr,
        w,
        used: vec![false; w.len()],
        probs: vec![0.0; chambers.len()],
        nodes: 0,
        budget,
    };
    rec(&mut ctx, &SignVector::zero(arr.hyperplanes()), 1.0, 0.0).then_some(ctx.probs)
}

/// Separation and total-variation distance for `t = 0..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    pub separation: Vec<f64>,
    pub total_variation: Vec<f64>,
}

/// Worst-start distances of the law of `C^t` to `pi`, computed from all rows
/// of `P^t` by repeated sparse multiplication.
pub fn distance_profile(
    arr: &Arrangement,
    w: &WeightedFaceSet,
    t_max: u64,
) -> Result<DistanceProfile> {
    let table = ActionTable::build(arr, w, &ExactLimits::default())?;
    let pi = stationary_solve(arr, w)?;
    Ok(profile_from_rows(
        table.chambers,
        |row, out| table.step(row, out),
        pi.probs(),
        t_max,
    ))
}

/// Generic driver: `step` maps a row of `P^t` to the same row of `P^(t+1)`.
pub(crate) fn profile_from_rows(
    states: usize,
    step: impl Fn(&[f64], &mut [f64]),
    pi: &[f64],
    t_max: u64,
) -> DistanceProfile {
    let mut rows: Vec<Vec<f64>> = (0..states)
        .map(|i| {
            let mut r = vec![0.0; states];
            r[i] = 1.0;
            r
        })
        .collect();
    let mut separation = Vec::with_capacity(t_max as usize + 1);
    let mut total_variation = Vec::with_capacity(t_max as usize + 1);
    let mut scratch = vec![0.0; states];
    for t in 0..=t_max {
        if t > 0 {
            for row in rows.iter_mut() {
                step(row, &mut scratch);
                core::mem::swap(row, &mut scratch);
            }
        }
        separation.push(
            rows.iter()
                .map(|r| separation_of_row(r, pi))
                .fold(0.0, f64::max),
        );
        total_variation.push(rows.iter().map(|r| tv_of_row(r, pi)).fold(0.0, f64::max));
    }
    DistanceProfile {
        separation,
        total_variation,
    }
}

pub(crate) fn separation_of_row(row: &[f64], pi: &[f64]) -> f64 {
    let min_ratio = row
        .iter()
        .zip(pi)
        .map(|(p, q)| p / q)
        .fold(f64::INFINITY, f64::min);
    (1.0 - min_ratio).clamp(0.0, 1.0)
}

pub(crate) fn tv_of_row(row: &[f64], pi: &[f64]) -> f64 {
    0.5 * row.iter().zip(pi).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

/// `s(t) = max_x0 (1 - min_x P^t(x0, x) / pi(x))`.
pub fn separation_distance(arr: &Arrangement, w: &WeightedFaceSet, t: u64) -> Result<f64> {
    Ok(distance_profile(arr, w, t)?.separation[t as usize])
}

/// `d(t) = max_x0 (1/2) sum_x |P^t(x0, x) - pi(x)|`.
pub fn total_variation(arr: &Arrangement, w: &WeightedFaceSet, t: u64) -> Result<f64> {
    Ok(distance_profile(arr, w, t)?.total_variation[t as usize])
}

/// `P(T > t)` by inclusion-exclusion over sets of uncut hyperplanes:
/// `sum over nonempty S of (-1)^(|S|+1) q_S^t`, where `q_S` is the weight of
/// faces with a zero at every hyperplane in `S`. Subsets with `q_S = 0` are
/// pruned together with all their supersets.
#[derive(Debug, Clone)]
pub struct InclusionExclusion {
    terms: Vec<(f64, f64)>,
}

impl InclusionExclusion {
    pub fn new(arr: &Arrangement, w: &WeightedFaceSet) -> Result<Self> {
        Self::with_limits(arr, w, &ExactLimits::default())
    }

    pub fn with_limits(
        arr: &Arrangement,
        w: &WeightedFaceSet,
        limits: &ExactLimits,
    ) -> Result<Self> {
        let m = arr.hyperplanes();
        if w.hyperplanes() != m {
            return Err(Error::Dimension {
                expected: m,
                found: w.hyperplanes(),
            });
        }
        if m > limits.max_inclusion_exclusion_hyperplanes {
            return Err(Error::Capacity {
                what: "inclusion-exclusion hyperplanes (use Monte Carlo)",
                requested: m as u128,
                limit: limits.max_inclusion_exclusion_hyperplanes as u128,
            });
        }
        fn rec(
            w: &WeightedFaceSet,
            m: usize,
            start: usize,
            alive: &[usize],
            sign: f64,
            terms: &mut Vec<(f64, f64)>,
        ) {
            for i in start..m {
                let next: Vec<usize> = alive
                    .iter()
                    .copied()
                    .filter(|&f| w.face(f).get(i).is_zero())
                    .collect();
                if next.is_empty() {
                    continue;
                }
                let q: f64 = next.iter().map(|&f| w.weight(f)).sum();
                terms.push((sign, q.min(1.0)));
                rec(w, m, i + 1, &next, -sign, terms);
            }
        }
        let all: Vec<usize> = (0..w.len()).collect();
        let mut terms = Vec::new();
        rec(w, m, 0, &all, 1.0, &mut terms);
        Ok(InclusionExclusion { terms })
    }

    pub fn terms(&self) -> usize {
        self.terms.len()
    }

    pub fn survival(&self, t: u64) -> f64 {
        if t == 0 {
            return 1.0;
        }
        let s: f64 = self.terms.iter().map(|&(c, q)| c * math::powi(q, t)).sum();
        s.clamp(0.0, 1.0)
    }
}

pub fn survival_exact(arr: &Arrangement, w: &WeightedFaceSet, t: u64) -> Result<f64> {
    Ok(InclusionExclusion::new(arr, w)?.survival(t))
}

pub const UNIFORM_TOLERANCE: f64 = 1e-12;

/// `b_i`: weight of faces cutting hyperplane `i`; `d_ij`: weight of faces
/// cutting both `i` and `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingParameters {
    pub b_per_hyperplane: Vec<f64>,
    d: Vec<f64>,
    m: usize,
    pub uniform_b: Option<f64>,
    pub uniform_d: Option<f64>,
}

impl CouplingParameters {
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.m + j]
    }

    pub fn hyperplanes(&self) -> usize {
        self.m
    }

    /// Smallest and largest off-diagonal `d_ij`.
    pub fn d_range(&self) -> Option<(f64, f64)> {
        let mut it = (0..self.m)
            .flat_map(|i| (0..self.m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.d(i, j));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }
}

pub const MAX_COUPLING_HYPERPLANES: usize = 4096;

pub fn coupling_parameters(arr: &Arrangement, w: &WeightedFaceSet) -> Result<CouplingParameters> {
    let m = arr.hyperplanes();
    if w.hyperplanes() != m {
        return Err(Error::Dimension {
            expected: m,
            found: w.hyperplanes(),
        });
    }
    if m > MAX_COUPLING_HYPERPLANES {
        return Err(Error::Capacity {
            what: "pairwise coupling matrix",
            requested: m as u128,
            limit: MAX_COUPLING_HYPERPLANES as u128,
        });
    }
    let mut b = vec![0.0; m];
    let mut d = vec![0.0; m * m];
    for idx in 0..w.len() {
        let p = w.weight(idx);
        let support = w.support(idx);
        for &i in support {
            b[i] += p;
            for &j in support {
                d[i * m + j] += p;
            }
        }
    }
    let uniform_b = common_value(b.iter().copied());
    let uniform_d = common_value(
        (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| d[i * m + j]),
    );
    Ok(CouplingParameters {
        b_per_hyperplane: b,
        d,
        m,
        uniform_b,
        uniform_d,
    })
}

fn common_value(mut values: impl Iterator<Item = f64>) -> Option<f64> {
    let first = values.next()?;
    values
        .all(|x| (x - first).abs() <= UNIFORM_TOLERANCE)
        .then_some(first)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPrediction {
    pub time: f64,
    pub window: f64,
    /// `b <= (1 + d) / 2` and `0 < d <= b^2`.
    pub assumptions_ok: bool,
}

/// Separation cutoff at `log m / log(1/(1-b))` with window `1/b`.
pub fn cutoff_prediction(b: f64, d: f64, m: usize) -> Result<CutoffPrediction> {
    if !(b > 0.0 && b < 1.0) {
        return Err(parameter(format!(
            "cutoff prediction needs 0 < b < 1, got {b}"
        )));
    }
    if m == 0 {
        return Err(parameter("cutoff prediction needs m >= 1"));
    }
    Ok(CutoffPrediction {
        time: math::ln(m as f64) / -math::ln(1.0 - b),
        window: 1.0 / b,
        assumptions_ok: b <= (1.0 + d) / 2.0 && d > 0.0 && d <= b * b,
    })
}

/// Chamber-indexed helper: `P^t(x0, .)` for a single start.
pub fn law_at(
    arr: &Arrangement,
    w: &WeightedFaceSet,
    start: &SignVector,
    t: u64,
) -> Result<ChamberDistribution> {
    let table = ActionTable::build(arr, w, &ExactLimits::default())?;
    let s = arr
        .chamber_index(start)
        .ok_or_else(|| validation(format!("{start} is not a listed chamber")))?;
    let mut row = vec![0.0; table.chambers];
    row[s] = 1.0;
    let mut scratch = vec![0.0; table.chambers];
    for _ in 0..t {
        table.step(&row, &mut scratch);
        core::mem::swap(&mut row, &mut scratch);
    }
    ChamberDistribution::new(row)
}
