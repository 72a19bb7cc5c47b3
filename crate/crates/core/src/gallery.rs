//! Weighted-face families on the braid and Boolean arrangements, and the
//! Tsetlin-library bound machinery.
//!
//! Braid families (cards `0..n`, deck read top to bottom):
//!
//! | name         | faces                                   | weight            |
//! |--------------|-----------------------------------------|-------------------|
//! | `tsetlin`    | `{j}{rest}`                             | `w_j`             |
//! | `riffle`     | blocks of cards by mark in `0..a`       | `#marks / a^n`    |
//! | `k-to-top`   | `{S}{rest}`, `|S| = k`                  | `1 / C(n,k)`      |
//! | `top-bottom` | `{c}{rest}` and `{rest}{c}`             | `w_c / 2` each    |
//!
//! Boolean families: `hypercube-nn` puts weight `w_i^+`, `w_i^-` on the faces
//! with a single non-zero coordinate; `hypercube-nonlocal` picks `k`
//! coordinates uniformly and a fair sign for each.
//!
//! Large instances are never enumerated. [`Family::sampler`] draws the
//! stopping time directly from the family's structure: for braid families,
//! `T` is the first time the picked partitions refine `[n]` into singletons;
//! for Boolean families, the first time every coordinate has been picked.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::arrangement::{
    braid_hyperplanes, build_boolean, build_braid, ranks_to_sign_vector, Arrangement, Sign,
    SignVector, WeightedFaceSet, WEIGHT_SUM_TOLERANCE,
};
use crate::error::{parameter, validation, Error, Result};
use crate::math;
use crate::walk::{sample_stopping_times, StoppingTimeSampler, TrialRng, DEFAULT_STEP_CAP};

/// Explicit face lists are built only while `faces * hyperplanes` stays
/// below this many coordinates.
pub const MAX_EXPLICIT_COORDINATES: u128 = 20_000_000;

/// Riffle faces are enumerated only up to this many cards.
pub const MAX_EXPLICIT_RIFFLE_CARDS: usize = 8;

/// Subset sums for the Tsetlin survival formula run up to this many cards.
pub const MAX_TSETLIN_EXACT_CARDS: usize = 20;

fn check_explicit(what: &'static str, faces: u128, hyperplanes: usize) -> Result<()> {
    let coords = faces.saturating_mul(hyperplanes as u128);
    if coords > MAX_EXPLICIT_COORDINATES {
        return Err(Error::Capacity {
            what,
            requested: coords,
            limit: MAX_EXPLICIT_COORDINATES,
        });
    }
    Ok(())
}

fn check_probability_vector(weights: &[f64], what: &str) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(validation(format!("{what}: weight {w} is not positive")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(validation(format!("{what}: weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Card weights of a Tsetlin library.
#[derive(Debug, Clone, PartialEq)]
pub struct TsetlinSpec {
    card_weights: Vec<f64>,
}

impl TsetlinSpec {
    pub fn new(card_weights: Vec<f64>) -> Result<Self> {
        if card_weights.is_empty() {
            return Err(validation("Tsetlin library needs at least one card"));
        }
        check_probability_vector(&card_weights, "card weights")?;
        Ok(TsetlinSpec { card_weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        TsetlinSpec::new(vec![1.0 / n as f64; n])
    }

    pub fn cards(&self) -> usize {
        self.card_weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.card_weights
    }

    pub fn min_weight(&self) -> f64 {
        self.card_weights
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = self.card_weights[0];
        self.card_weights
            .iter()
            .all(|w| (w - w0).abs() <= WEIGHT_SUM_TOLERANCE)
    }
}

/// Braid face `{S}{rest}` for a set of cards moved to the top.
fn top_block_face(n: usize, top: impl IntoIterator<Item = usize>) -> SignVector {
    let mut ranks = vec![1usize; n];
    for c in top {
        ranks[c] = 0;
    }
    ranks_to_sign_vector(&ranks)
}

fn bottom_block_face(n: usize, card: usize) -> SignVector {
    let mut ranks = vec![0usize; n];
    ranks[card] = 1;
    ranks_to_sign_vector(&ranks)
}

/// Move card `j` to the top with probability `w_j`.
pub fn tsetlin_faces(spec: &TsetlinSpec) -> Result<WeightedFaceSet> {
    let n = spec.cards();
    if n < 2 {
        return Err(validation("Tsetlin faces need n >= 2"));
    }
    check_explicit("Tsetlin face list", n as u128, braid_hyperplanes(n))?;
    WeightedFaceSet::new(
        spec.weights()
            .iter()
            .enumerate()
            .map(|(j, &w)| (top_block_face(n, [j]), w))
            .collect(),
    )
}

/// Inverse `a`-riffle: mark each card uniformly in `0..a`, then stack the
/// cards marked 0 on top, then those marked 1, and so on, keeping relative
/// order within each mark.
pub fn riffle_faces(n: usize, a: usize) -> Result<WeightedFaceSet> {
    if a < 2 {
        return Err(parameter(format!("riffle needs a >= 2, got {a}")));
    }
    if n < 2 {
        return Err(validation("riffle needs n >= 2"));
    }
    if n > MAX_EXPLICIT_RIFFLE_CARDS {
        return Err(Error::Capacity {
            what: "explicit riffle faces (cards)",
            requested: n as u128,
            limit: MAX_EXPLICIT_RIFFLE_CARDS as u128,
        });
    }
    let total = (a as u128)
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or(Error::Capacity {
            what: "riffle mark functions",
            requested: u128::MAX,
            limit: 1 << 24,
        })?;
    let p = 1.0 / total as f64;
    let mut marks = vec![0usize; n];
    let mut faces = Vec::with_capacity(total as usize);
    for mut code in 0..total {
        for m in marks.iter_mut() {
            *m = (code % a as u128) as usize;
            code /= a as u128;
        }
        faces.push((ranks_to_sign_vector(&marks), p));
    }
    WeightedFaceSet::merged(faces)
}

/// Move a uniformly chosen `k`-set of cards to the top, keeping their order.
pub fn k_to_top_faces(n: usize, k: usize) -> Result<WeightedFaceSet> {
    if !(1..n).contains(&k) {
        return Err(parameter(format!(
            "k-to-top needs 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let count = math::binomial_u128(n as u64, k as u64).unwrap_or(u128::MAX);
    check_explicit("k-to-top face list", count, braid_hyperplanes(n))?;
    let p = 1.0 / count as f64;
    WeightedFaceSet::new(
        k_subsets(n, k)
            .into_iter()
            .map(|s| (top_block_face(n, s), p))
            .collect(),
    )
}

/// Card `c` (chosen with weight `w_c`) goes to the top or the bottom with
/// probability 1/2 each.
pub fn top_bottom_faces(card_weights: &[f64]) -> Result<WeightedFaceSet> {
    let n = card_weights.len();
    if n < 2 {
        return Err(validation("top-bottom needs n >= 2"));
    }
    check_probability_vector(card_weights, "card weights")?;
    check_explicit("top-bottom face list", 2 * n as u128, braid_hyperplanes(n))?;
    WeightedFaceSet::merged(card_weights.iter().enumerate().flat_map(|(c, &w)| {
        [
            (top_block_face(n, [c]), w / 2.0),
            (bottom_block_face(n, c), w / 2.0),
        ]
    }))
}

/// Nearest-neighbour walk on the hypercube: face `e_i^+` (resp. `e_i^-`) has
/// a single non-zero coordinate `i` and weight `w_plus[i]` (resp. `w_minus[i]`).
pub fn hypercube_nn_faces(w_plus: &[f64], w_minus: &[f64]) -> Result<WeightedFaceSet> {
    let n = w_plus.len();
    if n == 0 || w_minus.len() != n {
        return Err(validation(format!(
            "need equal, nonempty weight vectors (got {} and {})",
            n,
            w_minus.len()
        )));
    }
    let all: Vec<f64> = w_plus.iter().chain(w_minus).copied().collect();
    check_probability_vector(&all, "hypercube weights")?;
    check_explicit("hypercube face list", 2 * n as u128, n)?;
    let unit = |i: usize, s: Sign| {
        let mut v = vec![Sign::Zero; n];
        v[i] = s;
        SignVector::new(v)
    };
    WeightedFaceSet::new(
        (0..n)
            .flat_map(|i| {
                [
                    (unit(i, Sign::Plus), w_plus[i]),
                    (unit(i, Sign::Minus), w_minus[i]),
                ]
            })
            .collect(),
    )
}

/// Pick `k` coordinates uniformly and set each to a fair random sign.
pub fn hypercube_nonlocal_faces(n: usize, k: usize) -> Result<WeightedFaceSet> {
    check_nonlocal(n, k)?;
    let subsets = math::binomial_u128(n as u64, k as u64).unwrap_or(u128::MAX);
    let count = subsets.saturating_mul(1u128 << k);
    check_explicit("non-local hypercube face list", count, n)?;
    let p = 1.0 / count as f64;
    let mut faces = Vec::with_capacity(count as usize);
    for s in k_subsets(n, k) {
        for signs in 0..1usize << k {
            let mut v = vec![Sign::Zero; n];
            for (bit, &i) in s.iter().enumerate() {
                v[i] = if signs >> bit & 1 == 0 {
                    Sign::Plus
                } else {
                    Sign::Minus
                };
            }
            faces.push((SignVector::new(v), p));
        }
    }
    WeightedFaceSet::new(faces)
}

fn check_nonlocal(n: usize, k: usize) -> Result<()> {
    if !(k > 1 && 2 * k <= n) {
        return Err(parameter(format!(
            "non-local hypercube needs 1 < k <= n/2, got k={k}, n={n}"
        )));
    }
    Ok(())
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `(k/n, k^2/n^2 - k(n-k)/(n^2(n-1)))`: the chance that a fixed element is
/// among `k` drawn uniformly from `n`, and that two fixed elements both are
/// (the second simplifies to `k(k-1)/(n(n-1))`).
///
/// For the non-local hypercube walk these are exactly the per-hyperplane
/// `b` and `d`. For k-to-top they are per-card quantities; a braid
/// hyperplane `x_i = x_j` is cut when exactly one of `i, j` moves, see
/// [`k_to_top_hyperplane_b`].
pub fn subset_coupling(n: usize, k: usize) -> (f64, f64) {
    let (n, k) = (n as f64, k as f64);
    (k / n, k * k / (n * n) - k * (n - k) / (n * n * (n - 1.0)))
}

/// Per-hyperplane `b` of k-to-top: `2k(n-k) / (n(n-1))`.
pub fn k_to_top_hyperplane_b(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    2.0 * k * (n - k) / (n * (n - 1.0))
}

/// `b = 1 - 1/a`, `d = (1 - 1/a)^2` for the inverse `a`-riffle.
pub fn riffle_coupling(a: usize) -> (f64, f64) {
    let b = 1.0 - 1.0 / a as f64;
    (b, b * b)
}

/// Unique root of `sum_i exp(-w_i t) = 1/2`, by bisection.
pub fn solve_t_star(spec: &TsetlinSpec) -> f64 {
    let f = |t: f64| {
        spec.weights()
            .iter()
            .map(|&w| math::exp(-w * t))
            .sum::<f64>()
            - 0.5
    };
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-11 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One side of the Tsetlin cutoff bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    /// Time at which the bound is stated.
    pub time: f64,
    /// `t* +- c/(2 min w)`, the Poisson time used inside the argument.
    pub proof_time: f64,
    /// Bound value clamped to `[0, 1]`.
    pub value: f64,
    pub raw_value: f64,
    pub clamped: bool,
}

impl BoundPoint {
    fn new(time: f64, proof_time: f64, raw_value: f64) -> Self {
        let value = raw_value.clamp(0.0, 1.0);
        BoundPoint {
            time,
            proof_time,
            value,
            raw_value,
            clamped: value != raw_value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsetlinBoundReport {
    pub t_star: f64,
    pub c: f64,
    pub upper: BoundPoint,
    pub lower: BoundPoint,
    /// `t* min_i w_i`, should grow without bound along a sequence.
    pub t_star_min_w: f64,
    /// `t* min_i w_i^2`, should stay bounded along a sequence.
    pub t_star_min_w2: f64,
}

/// Upper bound on `s(t)` at `t = t* + c / min w`, for `c > 0`:
/// `1 - exp(-e^{-c/2}/2) + (4 min w^2 t* + 2c min w) / c^2`.
pub fn tsetlin_upper_bound(spec: &TsetlinSpec, c: f64) -> Result<BoundPoint> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(parameter(format!("upper bound needs c > 0, got {c}")));
    }
    let t_star = solve_t_star(spec);
    let mw = spec.min_weight();
    let mw2 = mw * mw;
    let raw =
        1.0 - math::exp(-math::exp(-c / 2.0) / 2.0) + (4.0 * mw2 * t_star + 2.0 * c * mw) / (c * c);
    Ok(BoundPoint::new(
        t_star + c / mw,
        t_star + c / (2.0 * mw),
        raw,
    ))
}

/// Lower bound on `s(t)` at `t = t* - 2c / min w`, for `0 < c < t* min w / 2`:
/// `1 - exp(-e^{c/2}/2) - (4 min w^2 t* - 2c min w) / c^2 - 1/c`.
pub fn tsetlin_lower_bound(spec: &TsetlinSpec, c: f64) -> Result<BoundPoint> {
    let t_star = solve_t_star(spec);
    let mw = spec.min_weight();
    let c_max = t_star * mw / 2.0;
    if !(c > 0.0 && c < c_max) {
        return Err(parameter(format!(
            "lower bound needs 0 < c < t* min w / 2 = {c_max:.6}, got {c}"
        )));
    }
    let mw2 = mw * mw;
    let raw = 1.0
        - math::exp(-math::exp(c / 2.0) / 2.0)
        - (4.0 * mw2 * t_star - 2.0 * c * mw) / (c * c)
        - 1.0 / c;
    Ok(BoundPoint::new(
        t_star - 2.0 * c / mw,
        t_star - c / (2.0 * mw),
        raw,
    ))
}

/// Both bounds; fails when `c` is outside the lower bound's range.
pub fn tsetlin_bounds(spec: &TsetlinSpec, c: f64) -> Result<TsetlinBoundReport> {
    let upper = tsetlin_upper_bound(spec, c)?;
    let lower = tsetlin_lower_bound(spec, c)?;
    let t_star = solve_t_star(spec);
    let mw = spec.min_weight();
    Ok(TsetlinBoundReport {
        t_star,
        c,
        upper,
        lower,
        t_star_min_w: t_star * mw,
        t_star_min_w2: t_star * mw * mw,
    })
}

/// `P(at least two cards untouched after t picks)`. This equals the
/// separation distance for uniform weights and is a lower bound for it in
/// general:
/// `1 - A(t) - B(t)` with `A(t) = sum_S (-1)^|S| (1 - w(S))^t` (all touched)
/// and `B(t) = sum_i sum_{S not containing i} (-1)^|S| (1 - w_i - w(S))^t`
/// (exactly card `i` untouched).
pub fn tsetlin_survival_exact(spec: &TsetlinSpec, t: u64) -> Result<f64> {
    let n = spec.cards();
    if n > MAX_TSETLIN_EXACT_CARDS {
        return Err(Error::Capacity {
            what: "Tsetlin subset sums (cards; use Monte Carlo)",
            requested: n as u128,
            limit: MAX_TSETLIN_EXACT_CARDS as u128,
        });
    }
    let w = spec.weights();
    let full = 1usize << n;
    let mut mass = vec![0.0f64; full];
    for s in 1..full {
        let low = s.trailing_zeros() as usize;
        mass[s] = mass[s & (s - 1)] + w[low];
    }
    let pow = |s: usize| math::powi((1.0 - mass[s]).max(0.0), t);
    let mut all_touched = 0.0;
    let mut one_untouched = 0.0;
    for s in 0..full {
        let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        all_touched += sign * pow(s);
        for i in 0..n {
            if s >> i & 1 == 0 {
                one_untouched += sign * pow(s | 1 << i);
            }
        }
    }
    Ok((1.0 - all_touched - one_untouched).clamp(0.0, 1.0))
}

/// `P(T > t)` with a value and, when sampled, its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalValue {
    pub value: f64,
    pub std_err: Option<f64>,
}

/// [`tsetlin_survival_exact`] when the card count allows, Monte Carlo otherwise.
pub fn tsetlin_survival(
    spec: &TsetlinSpec,
    t: u64,
    trials: u64,
    seed: u64,
) -> Result<SurvivalValue> {
    match tsetlin_survival_exact(spec, t) {
        Ok(value) => Ok(SurvivalValue {
            value,
            std_err: None,
        }),
        Err(Error::Capacity { .. }) => {
            let sampler = Family::Tsetlin(spec.clone()).sampler()?;
            let samples = sample_stopping_times(&sampler, trials.max(1), seed, DEFAULT_STEP_CAP)?;
            let p = samples.iter().filter(|&&x| x > t).count() as f64 / samples.len() as f64;
            Ok(SurvivalValue {
                value: p,
                std_err: Some(math::sqrt(p * (1.0 - p) / samples.len() as f64)),
            })
        }
        Err(e) => Err(e),
    }
}

/// A named family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Tsetlin(TsetlinSpec),
    Riffle { n: usize, a: usize },
    KToTop { n: usize, k: usize },
    TopBottom { card_weights: Vec<f64> },
    HypercubeNn { w_plus: Vec<f64>, w_minus: Vec<f64> },
    HypercubeNonlocal { n: usize, k: usize },
}

/// What the test suites check for a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// `s(t) = P(T > t)` (weights invariant under a chamber-transitive group).
    Equality,
    /// `s(t) = P(fewer than n-1 cards touched by t)`; only uniform Tsetlin
    /// weights, other weights give [`Identity::Inequality`].
    FillEquality,
    /// Only `P(T > t) <= s(t)`.
    Inequality,
}

impl Family {
    pub const NAMES: [&'static str; 6] = [
        "tsetlin",
        "riffle",
        "k-to-top",
        "top-bottom",
        "hypercube-nn",
        "hypercube-nonlocal",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Tsetlin(_) => "tsetlin",
            Family::Riffle { .. } => "riffle",
            Family::KToTop { .. } => "k-to-top",
            Family::TopBottom { .. } => "top-bottom",
            Family::HypercubeNn { .. } => "hypercube-nn",
            Family::HypercubeNonlocal { .. } => "hypercube-nonlocal",
        }
    }

    /// Symmetric nearest-neighbour walk with `w_i^+ = w_i^- = 1/(2n)`.
    pub fn hypercube_uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(validation("hypercube needs n >= 1"));
        }
        let w = vec![0.5 / n as f64; n];
        Ok(Family::HypercubeNn {
            w_plus: w.clone(),
            w_minus: w,
        })
    }

    /// Checks parameter ranges without building any faces.
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Tsetlin(spec) if spec.cards() < 2 => Err(validation("tsetlin needs n >= 2")),
            Family::Tsetlin(_) => Ok(()),
            Family::Riffle { n, a } => {
                if *a < 2 {
                    Err(parameter(format!("riffle needs a >= 2, got {a}")))
                } else if *n < 2 {
                    Err(validation("riffle needs n >= 2"))
                } else {
                    Ok(())
                }
            }
            Family::KToTop { n, k } => {
                if (1..*n).contains(k) {
                    Ok(())
                } else {
                    Err(parameter(format!(
                        "k-to-top needs 1 <= k < n, got k={k}, n={n}"
                    )))
                }
            }
            Family::TopBottom { card_weights } => {
                if card_weights.len() < 2 {
                    return Err(validation("top-bottom needs n >= 2"));
                }
                check_probability_vector(card_weights, "card weights")
            }
            Family::HypercubeNn { w_plus, w_minus } => {
                if w_plus.is_empty() || w_plus.len() != w_minus.len() {
                    return Err(validation("need equal, nonempty weight vectors"));
                }
                let all: Vec<f64> = w_plus.iter().chain(w_minus).copied().collect();
                check_probability_vector(&all, "hypercube weights")
            }
            Family::HypercubeNonlocal { n, k } => check_nonlocal(*n, *k),
        }
    }

    /// Cards for braid families, coordinates for Boolean ones.
    pub fn size(&self) -> usize {
        match self {
            Family::Tsetlin(spec) => spec.cards(),
            Family::Riffle { n, .. }
            | Family::KToTop { n, .. }
            | Family::HypercubeNonlocal { n, .. } => *n,
            Family::TopBottom { card_weights } => card_weights.len(),
            Family::HypercubeNn { w_plus, .. } => w_plus.len(),
        }
    }

    pub fn is_braid(&self) -> bool {
        !matches!(
            self,
            Family::HypercubeNn { .. } | Family::HypercubeNonlocal { .. }
        )
    }

    pub fn hyperplanes(&self) -> usize {
        if self.is_braid() {
            braid_hyperplanes(self.size())
        } else {
            self.size()
        }
    }

    pub fn arrangement(&self) -> Result<Arrangement> {
        self.validate()?;
        if self.is_braid() {
            build_braid(self.size())
        } else {
            build_boolean(self.size())
        }
    }

    pub fn weighted_faces(&self) -> Result<WeightedFaceSet> {
        self.validate()?;
        match self {
            Family::Tsetlin(spec) => tsetlin_faces(spec),
            Family::Riffle { n, a } => riffle_faces(*n, *a),
            Family::KToTop { n, k } => k_to_top_faces(*n, *k),
            Family::TopBottom { card_weights } => top_bottom_faces(card_weights),
            Family::HypercubeNn { w_plus, w_minus } => hypercube_nn_faces(w_plus, w_minus),
            Family::HypercubeNonlocal { n, k } => hypercube_nonlocal_faces(*n, *k),
        }
    }

    pub fn identity(&self) -> Identity {
        match self {
            Family::Tsetlin(spec) if spec.is_uniform() => Identity::FillEquality,
            Family::Tsetlin(_) => Identity::Inequality,
            Family::Riffle { .. } | Family::KToTop { .. } | Family::HypercubeNonlocal { .. } => {
                Identity::Equality
            }
            Family::TopBottom { card_weights } => {
                let w0 = card_weights[0];
                if card_weights
                    .iter()
                    .all(|w| (w - w0).abs() <= WEIGHT_SUM_TOLERANCE)
                {
                    Identity::Equality
                } else {
                    Identity::Inequality
                }
            }
            Family::HypercubeNn { w_plus, w_minus } => {
                if w_plus
                    .iter()
                    .zip(w_minus)
                    .all(|(p, m)| (p - m).abs() <= WEIGHT_SUM_TOLERANCE)
                {
                    Identity::Equality
                } else {
                    Identity::Inequality
                }
            }
        }
    }

    /// Closed-form per-hyperplane `(b, d)` where the family has them; `d`
    /// is `None` when it differs between pairs of hyperplanes.
    pub fn closed_form_coupling(&self) -> Option<(f64, Option<f64>)> {
        match self {
            Family::Riffle { a, .. } => {
                let (b, d) = riffle_coupling(*a);
                Some((b, Some(d)))
            }
            Family::HypercubeNonlocal { n, k } => {
                let (b, d) = subset_coupling(*n, *k);
                Some((b, Some(d)))
            }
            Family::KToTop { n, k } => Some((k_to_top_hyperplane_b(*n, *k), None)),
            Family::Tsetlin(spec) if spec.is_uniform() => Some((2.0 / spec.cards() as f64, None)),
            Family::TopBottom { .. } if self.identity() == Identity::Equality => {
                Some((2.0 / self.size() as f64, None))
            }
            Family::HypercubeNn { w_plus, w_minus } => {
                let b0 = w_plus[0] + w_minus[0];
                w_plus
                    .iter()
                    .zip(w_minus)
                    .all(|(p, m)| (p + m - b0).abs() <= WEIGHT_SUM_TOLERANCE)
                    .then_some((b0, Some(0.0)))
            }
            _ => None,
        }
    }

    /// Stopping-time sampler that never materializes faces.
    pub fn sampler(&self) -> Result<FamilySampler> {
        self.validate()?;
        let weighted = |w: &[f64]| WeightedIndex::new(w).map_err(|e| validation(format!("{e}")));
        Ok(match self {
            Family::Tsetlin(spec) => FamilySampler::CardsTouched {
                n: spec.cards(),
                pick: weighted(spec.weights())?,
            },
            Family::TopBottom { card_weights } => FamilySampler::CardsTouched {
                n: card_weights.len(),
                pick: weighted(card_weights)?,
            },
            Family::Riffle { n, a } => FamilySampler::Refinement {
                n: *n,
                rule: Refine::Marks(*a),
            },
            Family::KToTop { n, k } => FamilySampler::Refinement {
                n: *n,
                rule: Refine::Subset(*k),
            },
            Family::HypercubeNn { w_plus, w_minus } => {
                let per_coord: Vec<f64> = w_plus.iter().zip(w_minus).map(|(p, m)| p + m).collect();
                FamilySampler::Coordinates {
                    n: per_coord.len(),
                    pick: weighted(&per_coord)?,
                }
            }
            Family::HypercubeNonlocal { n, k } => FamilySampler::CoordinateSets { n: *n, k: *k },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refine {
    /// Every card gets an independent uniform mark in `0..a`.
    Marks(usize),
    /// A uniform `k`-set goes on top.
    Subset(usize),
}

/// Structure-aware stopping-time samplers.
#[derive(Debug, Clone)]
pub enum FamilySampler {
    /// Single-card faces: `T` is the first time `n - 1` distinct cards were picked.
    CardsTouched { n: usize, pick: WeightedIndex<f64> },
    /// Braid faces in general: `T` is the first time the common refinement of
    /// the picked partitions is all singletons.
    Refinement { n: usize, rule: Refine },
    /// Single-coordinate faces: `T` is the first time all coordinates were picked.
    Coordinates { n: usize, pick: WeightedIndex<f64> },
    /// Uniform `k`-sets of coordinates.
    CoordinateSets { n: usize, k: usize },
}

impl StoppingTimeSampler for FamilySampler {
    fn sample_stopping_time(&self, rng: &mut TrialRng, cap: u64) -> Result<u64> {
        let mut steps = 0u64;
        let mut tick = || {
            if steps >= cap {
                return Err(Error::StepCap { cap });
            }
            steps += 1;
            Ok(steps)
        };
        match self {
            FamilySampler::CardsTouched { n, pick } => {
                let mut touched = vec![false; *n];
                let mut count = 0;
                loop {
                    let s = tick()?;
                    let c = pick.sample(rng);
                    if !touched[c] {
                        touched[c] = true;
                        count += 1;
                    }
                    if count + 1 >= *n {
                        return Ok(s);
                    }
                }
            }
            FamilySampler::Coordinates { n, pick } => {
                let mut seen = vec![false; *n];
                let mut left = *n;
                loop {
                    let s = tick()?;
                    let i = pick.sample(rng);
                    if !seen[i] {
                        seen[i] = true;
                        left -= 1;
                        if left == 0 {
                            return Ok(s);
                        }
                    }
                }
            }
            FamilySampler::CoordinateSets { n, k } => {
                let mut seen = vec![false; *n];
                let mut left = *n;
                loop {
                    let s = tick()?;
                    for i in rand::seq::index::sample(rng, *n, *k).iter() {
                        if !seen[i] {
                            seen[i] = true;
                            left -= 1;
                        }
                    }
                    if left == 0 {
                        return Ok(s);
                    }
                }
            }
            FamilySampler::Refinement { n, rule } => {
                let n = *n;
                let mut class = vec![0u64; n];
                let mut rank = vec![0u64; n];
                let mut classes = 1;
                let radix = match rule {
                    Refine::Marks(a) => *a as u64,
                    Refine::Subset(_) => 2,
                };
                loop {
                    let s = tick()?;
                    match rule {
                        Refine::Marks(a) => rank
                            .iter_mut()
                            .for_each(|r| *r = rng.gen_range(0..*a as u64)),
                        Refine::Subset(k) => {
                            rank.iter_mut().for_each(|r| *r = 1);
                            for i in rand::seq::index::sample(rng, n, *k).iter() {
                                rank[i] = 0;
                            }
                        }
                    }
                    let mut relabel: BTreeMap<u64, u64> = BTreeMap::new();
                    for (c, r) in class.iter_mut().zip(&rank) {
                        let key = *c * radix + r;
                        let next = relabel.len() as u64;
                        *c = *relabel.entry(key).or_insert(next);
                    }
                    classes = classes.max(relabel.len());
                    if classes == n {
                        return Ok(s);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::{check_separating, partition_to_sign_vector};

    #[test]
    fn tsetlin_face_shape() {
        let spec = TsetlinSpec::uniform(3).unwrap();
        let w = tsetlin_faces(&spec).unwrap();
        assert_eq!(w.len(), 3);
        for i in 0..3 {
            assert!((w.weight(i) - 1.0 / 3.0).abs() < 1e-15);
            assert_eq!(w.support(i).len(), 2);
        }
        for n in 2..7 {
            let w = tsetlin_faces(&TsetlinSpec::uniform(n).unwrap()).unwrap();
            assert!(check_separating(&build_braid(n).unwrap(), &w).is_separating());
        }
    }

    #[test]
    fn riffle_two_cards() {
        let w = riffle_faces(2, 2).unwrap();
        let get = |blocks: &[Vec<usize>]| {
            let f = partition_to_sign_vector(blocks, 2).unwrap();
            w.entries().iter().find(|(g, _)| *g == f).map(|(_, p)| *p)
        };
        assert_eq!(get(&[vec![0, 1]]), Some(0.5));
        assert_eq!(get(&[vec![0], vec![1]]), Some(0.25));
        assert_eq!(get(&[vec![1], vec![0]]), Some(0.25));
        assert_eq!(w.len(), 3);
        assert!(riffle_faces(9, 2).is_err());
        assert!(riffle_faces(3, 1).is_err());
    }

    #[test]
    fn k_to_top_shape() {
        let w = k_to_top_faces(4, 2).unwrap();
        assert_eq!(w.len(), 6);
        assert!(w
            .entries()
            .iter()
            .all(|(_, p)| (p - 1.0 / 6.0).abs() < 1e-15));
        let k1 = k_to_top_faces(4, 1).unwrap();
        let ts = tsetlin_faces(&TsetlinSpec::uniform(4).unwrap()).unwrap();
        assert_eq!(k1, ts);
        assert!(k_to_top_faces(4, 4).is_err());
    }

    #[test]
    fn top_bottom_shape() {
        let w = top_bottom_faces(&[1.0 / 3.0; 3]).unwrap();
        assert_eq!(w.len(), 6);
        assert!(w
            .entries()
            .iter()
            .all(|(_, p)| (p - 1.0 / 6.0).abs() < 1e-15));
        let weighted = top_bottom_faces(&[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(weighted.len(), 6);
        // n = 2: "0 on top" and "1 on bottom" are the same face
        assert_eq!(top_bottom_faces(&[0.5, 0.5]).unwrap().len(), 2);
    }

    #[test]
    fn hypercube_shapes() {
        let w = hypercube_nonlocal_faces(4, 2).unwrap();
        assert_eq!(w.len(), 24);
        assert!(w
            .entries()
            .iter()
            .all(|(_, p)| (p - 1.0 / 24.0).abs() < 1e-15));
        assert!(hypercube_nonlocal_faces(4, 4).is_err());
        assert!(hypercube_nonlocal_faces(4, 1).is_err());
        assert!(hypercube_nn_faces(&[0.25, 0.25], &[0.25]).is_err());
        assert!(hypercube_nn_faces(&[0.25, 0.25], &[0.25, 0.2]).is_err());
    }

    #[test]
    fn t_star_values() {
        let t = solve_t_star(&TsetlinSpec::uniform(2).unwrap());
        assert!((t - 2.0 * libm::log(4.0)).abs() < 1e-9);
        let t = solve_t_star(&TsetlinSpec::new(vec![1.0]).unwrap());
        assert!((t - libm::log(2.0)).abs() < 1e-9);
        let spec = TsetlinSpec::new(vec![0.5, 0.3, 0.2]).unwrap();
        let t = solve_t_star(&spec);
        let residual: f64 = spec
            .weights()
            .iter()
            .map(|w| libm::exp(-w * t))
            .sum::<f64>()
            - 0.5;
        assert!(residual.abs() <= 1e-9);
    }

    #[test]
    fn upper_bound_spot_value() {
        let spec = TsetlinSpec::uniform(100).unwrap();
        let up = tsetlin_upper_bound(&spec, 4.0).unwrap();
        assert!((up.value - 0.0837).abs() < 5e-4, "{}", up.value);
        let t_star = 100.0 * libm::log(200.0);
        assert!((up.time - (t_star + 400.0)).abs() < 1e-6);
        assert!((up.proof_time - (t_star + 200.0)).abs() < 1e-6);
    }

    #[test]
    fn lower_bound_range() {
        let spec = TsetlinSpec::uniform(100).unwrap();
        // t* min w / 2 = ln(200)/2 ~ 2.649
        assert!(tsetlin_lower_bound(&spec, 2.6).is_ok());
        let err = tsetlin_lower_bound(&spec, 2.7).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        assert!(tsetlin_bounds(&spec, 2.7).is_err());
        assert!(tsetlin_upper_bound(&spec, 0.0).is_err());
    }

    #[test]
    fn bounds_trend_in_c() {
        let spec = TsetlinSpec::uniform(10_000).unwrap();
        let cs = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        let ups: Vec<f64> = cs
            .iter()
            .map(|&c| tsetlin_upper_bound(&spec, c).unwrap().raw_value)
            .collect();
        assert!(ups.windows(2).all(|w| w[1] < w[0]));
        // lower bound exists only for c < ln(2n)/2 ~ 4.95
        let lows: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&c| tsetlin_lower_bound(&spec, c).unwrap().raw_value)
            .collect();
        assert!(lows.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tsetlin_survival_spot_values() {
        let uni = TsetlinSpec::uniform(3).unwrap();
        assert!((tsetlin_survival_exact(&uni, 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let spec = TsetlinSpec::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert!((tsetlin_survival_exact(&spec, 2).unwrap() - 0.38).abs() < 1e-12);
        for n in 3..8 {
            let s = TsetlinSpec::uniform(n).unwrap();
            assert!((tsetlin_survival_exact(&s, 1).unwrap() - 1.0).abs() < 1e-12);
            assert!((tsetlin_survival_exact(&s, 0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(tsetlin_survival_exact(&TsetlinSpec::uniform(21).unwrap(), 5).is_err());
    }

    #[test]
    fn tsetlin_survival_falls_back() {
        let spec = TsetlinSpec::uniform(30).unwrap();
        let v = tsetlin_survival(&spec, 1, 100, 3).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.std_err, Some(0.0));
    }

    #[test]
    fn coupling_closed_forms() {
        assert_eq!(riffle_coupling(2), (0.5, 0.25));
        let (b, d) = subset_coupling(6, 2);
        assert!((b - 1.0 / 3.0).abs() < 1e-15);
        assert!((d - 2.0 / 30.0).abs() < 1e-15);
        assert!((k_to_top_hyperplane_b(4, 2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn family_metadata() {
        let f = Family::Tsetlin(TsetlinSpec::uniform(4).unwrap());
        assert_eq!(f.hyperplanes(), 6);
        assert_eq!(f.identity(), Identity::FillEquality);
        let skewed = Family::Tsetlin(TsetlinSpec::new(vec![0.5, 0.3, 0.2]).unwrap());
        assert_eq!(skewed.identity(), Identity::Inequality);
        let h = Family::HypercubeNn {
            w_plus: vec![0.3, 0.2],
            w_minus: vec![0.1, 0.4],
        };
        assert_eq!(h.identity(), Identity::Inequality);
        assert!(!h.is_braid());
        assert!(Family::HypercubeNonlocal { n: 4, k: 3 }.validate().is_err());
        for name in Family::NAMES {
            assert!(!name.is_empty());
        }
    }
}
