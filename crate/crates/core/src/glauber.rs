//! Heat-bath Glauber dynamics on small monotone spin systems.
//!
//! A configuration is a vector of spin indices, one per site; spin index `i`
//! stands for `spins[i]` and the spins are strictly increasing, so the
//! coordinate-wise order on indices is the configuration order. States are
//! numbered in mixed radix with site 0 as the least significant digit.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{parameter, validation, Error, Result};
use crate::exact::{profile_from_rows, separation_of_row, DistanceProfile};
use crate::math;
use crate::walk::{trial_rng, StoppingTimeSampler, TrialRng};

/// Largest state space handled by the exact matrix routines.
pub const MAX_EXACT_STATES: usize = 4096;

/// Site cap for [`ising_system`].
pub const MAX_ISING_SITES: usize = 12;

/// Monotonicity is checked over all comparable pairs up to this many states,
/// over covering pairs up to [`MAX_COVERING_STATES`], and by sampling beyond.
pub const MAX_ALL_PAIRS_STATES: usize = 1024;
pub const MAX_COVERING_STATES: usize = 1 << 20;
pub const MONOTONE_SAMPLES: usize = 100_000;

/// Augmented (configuration, picked sites) chains are limited to this many states.
pub const MAX_COVERAGE_STATES: usize = 1 << 22;

pub const CDF_TOLERANCE: f64 = 1e-12;

type LogWeight = Box<dyn Fn(&[usize]) -> f64 + Send + Sync>;

pub struct MonotoneSystem {
    sites: usize,
    spins: Vec<f64>,
    log_weight: LogWeight,
    name: String,
}

impl core::fmt::Debug for MonotoneSystem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MonotoneSystem")
            .field("name", &self.name)
            .field("sites", &self.sites)
            .field("spins", &self.spins)
            .finish()
    }
}

impl MonotoneSystem {
    /// `log_weight` receives spin indices, one per site.
    pub fn new(
        name: impl Into<String>,
        sites: usize,
        spins: Vec<f64>,
        log_weight: impl Fn(&[usize]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if sites == 0 {
            return Err(validation("a system needs at least one site"));
        }
        if spins.is_empty()
            || spins
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less))
        {
            return Err(validation("spins must be nonempty and strictly increasing"));
        }
        Ok(MonotoneSystem {
            sites,
            spins,
            log_weight: Box::new(log_weight),
            name: name.into(),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spins(&self) -> &[f64] {
        &self.spins
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn log_weight(&self, config: &[usize]) -> f64 {
        (self.log_weight)(config)
    }

    /// `|S|^|V|`, or `None` on overflow.
    pub fn state_count(&self) -> Option<usize> {
        self.spins.len().checked_pow(self.sites as u32)
    }

    pub fn top(&self) -> Vec<usize> {
        vec![self.spins.len() - 1; self.sites]
    }

    pub fn bottom(&self) -> Vec<usize> {
        vec![0; self.sites]
    }

    pub fn encode(&self, config: &[usize]) -> usize {
        let q = self.spins.len();
        config.iter().rev().fold(0, |acc, &s| acc * q + s)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let q = self.spins.len();
        (0..self.sites)
            .map(|_| {
                let s = index % q;
                index /= q;
                s
            })
            .collect()
    }

    fn exact_states(&self) -> Result<usize> {
        match self.state_count() {
            Some(s) if s <= MAX_EXACT_STATES => Ok(s),
            other => Err(Error::Capacity {
                what: "spin configurations",
                requested: other.map_or(u128::MAX, |s| s as u128),
                limit: MAX_EXACT_STATES as u128,
            }),
        }
    }
}

pub fn leq(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Ferromagnetic Ising model on a `width x height` grid with free boundary:
/// `log pi(s) = beta sum_{u~v} s_u s_v + field sum_u s_u`, spins `{-1, +1}`.
pub fn ising_system(width: usize, height: usize, beta: f64, field: f64) -> Result<MonotoneSystem> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(parameter(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    if !field.is_finite() {
        return Err(parameter(format!("field must be finite, got {field}")));
    }
    let n = width * height;
    if n == 0 {
        return Err(validation("grid must have at least one site"));
    }
    if n > MAX_ISING_SITES {
        return Err(Error::Capacity {
            what: "Ising sites",
            requested: n as u128,
            limit: MAX_ISING_SITES as u128,
        });
    }
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let u = y * width + x;
            if x + 1 < width {
                edges.push((u, u + 1));
            }
            if y + 1 < height {
                edges.push((u, u + width));
            }
        }
    }
    let spin = |i: usize| if i == 0 { -1.0 } else { 1.0 };
    MonotoneSystem::new(
        format!("ising {width}x{height} beta={beta} field={field}"),
        n,
        vec![-1.0, 1.0],
        move |c: &[usize]| {
            let pair: f64 = edges.iter().map(|&(u, v)| spin(c[u]) * spin(c[v])).sum();
            let mag: f64 = c.iter().map(|&s| spin(s)).sum();
            beta * pair + field * mag
        },
    )
}

/// Independent sites: `log pi(s) = field sum_u s_u`.
pub fn product_system(sites: usize, spins: Vec<f64>, field: f64) -> Result<MonotoneSystem> {
    if !field.is_finite() {
        return Err(parameter(format!("field must be finite, got {field}")));
    }
    let values = spins.clone();
    MonotoneSystem::new(
        format!("product n={sites} q={} field={field}", spins.len()),
        sites,
        spins,
        move |c: &[usize]| field * c.iter().map(|&s| values[s]).sum::<f64>(),
    )
}

/// Law of the spin at `u` given the rest of `config`, in spin order.
pub fn conditional_at_site(sys: &MonotoneSystem, config: &[usize], u: usize) -> Vec<f64> {
    let mut c = config.to_vec();
    let logs: Vec<f64> = (0..sys.spins.len())
        .map(|s| {
            c[u] = s;
            sys.log_weight(&c)
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logs.iter().map(|l| math::exp(l - top)).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    p
}

/// Heat-bath update at `u` driven by `v` in `[0, 1)`: the new spin is the
/// smallest one whose cumulative mass exceeds `v`.
pub fn glauber_step(sys: &MonotoneSystem, config: &[usize], u: usize, v: f64) -> Vec<usize> {
    let p = conditional_at_site(sys, config, u);
    let mut acc = 0.0;
    let mut chosen = None;
    for (s, &ps) in p.iter().enumerate() {
        if ps <= 0.0 {
            continue;
        }
        acc += ps;
        chosen = Some(s);
        if v < acc {
            break;
        }
    }
    let mut out = config.to_vec();
    out[u] = chosen.unwrap_or(0);
    out
}

fn cdf(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// `upper` dominates `lower` when its CDF is pointwise below.
fn dominates(upper: &[f64], lower: &[f64]) -> bool {
    cdf(upper)
        .iter()
        .zip(cdf(lower))
        .all(|(a, b)| *a <= b + CDF_TOLERANCE)
}

/// A comparable pair and a site where the conditionals are not ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneWitness {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    pub site: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    AllPairs,
    CoveringPairs,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneReport {
    pub witness: Option<MonotoneWitness>,
    pub mode: CheckMode,
    pub pairs_checked: u64,
}

impl MonotoneReport {
    pub fn is_monotone(&self) -> bool {
        self.witness.is_none()
    }
}

fn check_pair(sys: &MonotoneSystem, lower: &[usize], upper: &[usize]) -> Option<MonotoneWitness> {
    (0..sys.sites)
        .find(|&u| {
            !dominates(
                &conditional_at_site(sys, upper, u),
                &conditional_at_site(sys, lower, u),
            )
        })
        .map(|site| MonotoneWitness {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            site,
        })
}

/// For every comparable `sigma <= tau` and site `u`, the conditional at `tau`
/// must dominate the one at `sigma`. Checking covering pairs (one spin raised
/// one step) is equivalent, since domination is transitive.
pub fn check_monotone(sys: &MonotoneSystem) -> MonotoneReport {
    let q = sys.spins.len();
    let states = sys.state_count();
    let mut pairs = 0u64;
    match states {
        Some(s) if s <= MAX_ALL_PAIRS_STATES => {
            let configs: Vec<Vec<usize>> = (0..s).map(|i| sys.decode(i)).collect();
            for a in &configs {
                for b in &configs {
                    if a != b && leq(a, b) {
                        pairs += 1;
                        if let Some(w) = check_pair(sys, a, b) {
                            return MonotoneReport {
                                witness: Some(w),
                                mode: CheckMode::AllPairs,
                                pairs_checked: pairs,
                            };
                        }
                    }
                }
            }
            MonotoneReport {
                witness: None,
                mode: CheckMode::AllPairs,
                pairs_checked: pairs,
            }
        }
        Some(s) if s <= MAX_COVERING_STATES => {
            for i in 0..s {
                let a = sys.decode(i);
                for v in 0..sys.sites {
                    if a[v] + 1 < q {
                        let mut b = a.clone();
                        b[v] += 1;
                        pairs += 1;
                        if let Some(w) = check_pair(sys, &a, &b) {
                            return MonotoneReport {
                                witness: Some(w),
                                mode: CheckMode::CoveringPairs,
                                pairs_checked: pairs,
                            };
                        }
                    }
                }
            }
            MonotoneReport {
                witness: None,
                mode: CheckMode::CoveringPairs,
                pairs_checked: pairs,
            }
        }
        _ => {
            let mut rng = trial_rng(0, 0);
            for _ in 0..MONOTONE_SAMPLES {
                let a: Vec<usize> = (0..sys.sites).map(|_| rng.gen_range(0..q)).collect();
                let v = rng.gen_range(0..sys.sites);
                if a[v] + 1 >= q {
                    continue;
                }
                let mut b = a.clone();
                b[v] += 1;
                pairs += 1;
                if let Some(w) = check_pair(sys, &a, &b) {
                    return MonotoneReport {
                        witness: Some(w),
                        mode: CheckMode::Sampled,
                        pairs_checked: pairs,
                    };
                }
            }
            MonotoneReport {
                witness: None,
                mode: CheckMode::Sampled,
                pairs_checked: pairs,
            }
        }
    }
}

/// Runs [`glauber_step`] on every comparable pair, every site and
/// `v = k / grid` for `k < grid`; returns the first pair whose order breaks,
/// with the offending `v`.
pub fn check_grand_coupling(
    sys: &MonotoneSystem,
    grid: usize,
) -> Result<Option<(MonotoneWitness, f64)>> {
    let s = sys.exact_states()?;
    let configs: Vec<Vec<usize>> = (0..s).map(|i| sys.decode(i)).collect();
    for a in &configs {
        for b in configs.iter().filter(|b| *b != a && leq(a, b)) {
            for u in 0..sys.sites {
                for k in 0..grid {
                    let v = k as f64 / grid as f64;
                    if !leq(&glauber_step(sys, a, u, v), &glauber_step(sys, b, u, v)) {
                        let w = MonotoneWitness {
                            lower: a.clone(),
                            upper: b.clone(),
                            site: u,
                        };
                        return Ok(Some((w, v)));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// `pi` normalized from the log weights.
pub fn stationary(sys: &MonotoneSystem) -> Result<Vec<f64>> {
    let s = sys.exact_states()?;
    let logs: Vec<f64> = (0..s).map(|i| sys.log_weight(&sys.decode(i))).collect();
    if let Some(i) = logs.iter().position(|l| !l.is_finite()) {
        return Err(validation(format!(
            "log weight of configuration {:?} is not finite",
            sys.decode(i)
        )));
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logs.iter().map(|l| math::exp(l - top)).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

/// Sparse Glauber kernel: pick a uniform site, resample it from its conditional.
#[derive(Debug, Clone)]
pub struct GlauberChain {
    rows: Vec<Vec<(usize, f64)>>,
    pi: Vec<f64>,
}

impl GlauberChain {
    pub fn new(sys: &MonotoneSystem) -> Result<Self> {
        let pi = stationary(sys)?;
        let s = pi.len();
        let q = sys.spins.len();
        let n = sys.sites;
        let rows = (0..s)
            .map(|i| {
                let c = sys.decode(i);
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(n * q);
                for u in 0..n {
                    let stride = q.pow(u as u32);
                    let base = i - c[u] * stride;
                    for (sp, p) in conditional_at_site(sys, &c, u).into_iter().enumerate() {
                        if p > 0.0 {
                            row.push((base + sp * stride, p / n as f64));
                        }
                    }
                }
                row.sort_unstable_by_key(|e| e.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                for (j, p) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += p,
                        _ => merged.push((j, p)),
                    }
                }
                merged
            })
            .collect();
        Ok(GlauberChain { rows, pi })
    }

    pub fn states(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `out = row * P`.
    pub fn step(&self, row: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &r) in row.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for &(j, p) in &self.rows[i] {
                out[j] += r * p;
            }
        }
    }

    pub fn max_row_sum_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_j |(pi P)_j - pi_j|`.
    pub fn stationarity_defect(&self) -> f64 {
        let mut out = vec![0.0; self.states()];
        self.step(&self.pi, &mut out);
        out.iter()
            .zip(&self.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact distances for `t = 0..=t_max`, plus `1 - P^t(top, bottom) / pi(bottom)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlauberProfile {
    pub separation: Vec<f64>,
    pub total_variation: Vec<f64>,
    pub top_to_bottom: Vec<f64>,
}

pub fn glauber_profile(sys: &MonotoneSystem, t_max: u64) -> Result<GlauberProfile> {
    let chain = GlauberChain::new(sys)?;
    let s = chain.states();
    let DistanceProfile {
        separation,
        total_variation,
    } = profile_from_rows(s, |r, o| chain.step(r, o), chain.pi(), t_max);
    let bottom = sys.encode(&sys.bottom());
    let mut row = vec![0.0; s];
    row[sys.encode(&sys.top())] = 1.0;
    let mut scratch = vec![0.0; s];
    let mut top_to_bottom = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        if t > 0 {
            chain.step(&row, &mut scratch);
            core::mem::swap(&mut row, &mut scratch);
        }
        top_to_bottom.push(1.0 - row[bottom] / chain.pi()[bottom]);
    }
    Ok(GlauberProfile {
        separation,
        total_variation,
        top_to_bottom,
    })
}

/// `(s(t), 1 - P^t(top, bottom) / pi(bottom))`.
pub fn glauber_separation_exact(sys: &MonotoneSystem, t: u64) -> Result<(f64, f64)> {
    let p = glauber_profile(sys, t)?;
    Ok((p.separation[t as usize], p.top_to_bottom[t as usize]))
}

/// Separation distance from one start state only.
pub fn separation_from(sys: &MonotoneSystem, start: &[usize], t: u64) -> Result<f64> {
    let chain = GlauberChain::new(sys)?;
    let mut row = vec![0.0; chain.states()];
    row[sys.encode(start)] = 1.0;
    let mut scratch = row.clone();
    for _ in 0..t {
        chain.step(&row, &mut scratch);
        core::mem::swap(&mut row, &mut scratch);
    }
    Ok(separation_of_row(&row, chain.pi()))
}

/// `P(T > t)` for `T` the time to pick all `n` sites uniformly:
/// `sum_{j=1..n} (-1)^(j+1) C(n,j) (1 - j/n)^t`.
pub fn coupon_survival_uniform(n: usize, t: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if t < n as u64 {
        return 1.0;
    }
    let sum: f64 = (1..=n)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * math::binomial(n as u64, j as u64) * math::powi(1.0 - j as f64 / n as f64, t)
        })
        .sum();
    sum.clamp(0.0, 1.0)
}

/// Uniform site coverage time, for Monte Carlo checks of [`coupon_survival_uniform`].
#[derive(Debug, Clone, Copy)]
pub struct SiteCoverage {
    pub sites: usize,
}

impl StoppingTimeSampler for SiteCoverage {
    fn sample_stopping_time(&self, rng: &mut TrialRng, cap: u64) -> Result<u64> {
        let mut seen = vec![false; self.sites];
        let mut left = self.sites;
        let mut steps = 0;
        while left > 0 {
            if steps >= cap {
                return Err(Error::StepCap { cap });
            }
            steps += 1;
            let u = rng.gen_range(0..self.sites);
            if !seen[u] {
                seen[u] = true;
                left -= 1;
            }
        }
        Ok(steps)
    }
}

/// Lower bounds for any monotone system on `n` sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneBounds {
    /// `n ln n - c n`
    pub sep_time: f64,
    /// `1 - exp(-e^c)`
    pub sep_bound: f64,
    /// `n ln n / 2 - c n`
    pub tv_time: f64,
    /// `1/4 - exp(-e^c) / 4`
    pub tv_bound: f64,
}

pub fn monotone_lower_bounds(n: usize, c: f64) -> Result<MonotoneBounds> {
    if c.is_nan() || c <= 0.0 {
        return Err(parameter(format!("c must be > 0, got {c}")));
    }
    if n == 0 {
        return Err(validation("n must be >= 1"));
    }
    let nf = n as f64;
    let tail = math::exp(-math::exp(c));
    Ok(MonotoneBounds {
        sep_time: nf * math::ln(nf) - c * nf,
        sep_bound: 1.0 - tail,
        tv_time: 0.5 * nf * math::ln(nf) - c * nf,
        tv_bound: 0.25 - 0.25 * tail,
    })
}

/// `P(X^t = bottom | X^0 = top, T <= t)` for `t = 0..=t_max`, where `T` is
/// the first time every site has been picked; `None` while `P(T <= t) = 0`.
/// Runs the chain on (configuration, set of picked sites).
pub fn coverage_conditional(sys: &MonotoneSystem, t_max: u64) -> Result<Vec<Option<f64>>> {
    let chain = GlauberChain::new(sys)?;
    let s = chain.states();
    let n = sys.sites;
    let masks = 1usize << n;
    if s.saturating_mul(masks) > MAX_COVERAGE_STATES {
        return Err(Error::Capacity {
            what: "configuration x site-set states",
            requested: (s as u128) * (masks as u128),
            limit: MAX_COVERAGE_STATES as u128,
        });
    }
    let q = sys.spins.len();
    let kernels: Vec<Vec<Vec<(usize, f64)>>> = (0..s)
        .map(|i| {
            let c = sys.decode(i);
            (0..n)
                .map(|u| {
                    let stride = q.pow(u as u32);
                    let base = i - c[u] * stride;
                    conditional_at_site(sys, &c, u)
                        .into_iter()
                        .enumerate()
                        .filter(|e| e.1 > 0.0)
                        .map(|(sp, p)| (base + sp * stride, p / n as f64))
                        .collect()
                })
                .collect()
        })
        .collect();
    let full = masks - 1;
    let bottom = sys.encode(&sys.bottom());
    let mut dist = vec![0.0; s * masks];
    dist[sys.encode(&sys.top()) * masks] = 1.0;
    let mut next = vec![0.0; s * masks];
    let mut out = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        if t > 0 {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (idx, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let (i, mask) = (idx / masks, idx % masks);
                for (u, moves) in kernels[i].iter().enumerate() {
                    let m2 = mask | 1 << u;
                    for &(j, pj) in moves {
                        next[j * masks + m2] += p * pj;
                    }
                }
            }
            core::mem::swap(&mut dist, &mut next);
        }
        let covered: f64 = (0..s).map(|i| dist[i * masks + full]).sum();
        out.push((covered > 0.0).then(|| dist[bottom * masks + full] / covered));
    }
    Ok(out)
}
