//! Independent brute-force oracles against the library's exact and Monte
//! Carlo routines.

use hyperwalk_core::arrangement::chamber_to_deck;
use hyperwalk_core::exact::{distance_profile, law_at, InclusionExclusion};
use hyperwalk_core::gallery::{self, Family, TsetlinSpec};
use hyperwalk_core::glauber::{self, SiteCoverage};
use hyperwalk_core::walk::{estimate_survival_with, trial_rng};
use hyperwalk_core::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Every `t`-tuple of faces with its probability; the product is taken with
/// the latest pick leftmost.
fn tuples(w: &WeightedFaceSet, t: usize) -> Vec<(SignVector, f64)> {
    let m = w.hyperplanes();
    let mut out = vec![(SignVector::zero(m), 1.0)];
    for _ in 0..t {
        let mut next = Vec::new();
        for (acc, p) in &out {
            for (f, q) in w.entries() {
                next.push((face_product(f, acc).unwrap(), p * q));
            }
        }
        out = next;
    }
    out
}

fn brute_survival(w: &WeightedFaceSet, t: usize) -> f64 {
    tuples(w, t)
        .iter()
        .filter(|(f, _)| !f.is_chamber())
        .map(|(_, p)| p)
        .sum()
}

fn brute_law(arr: &Arrangement, w: &WeightedFaceSet, start: &SignVector, t: usize) -> Vec<f64> {
    let chambers = arr.chambers().unwrap();
    let mut law = vec![0.0; chambers.len()];
    for (f, p) in tuples(w, t) {
        let c = face_product(&f, start).unwrap();
        law[arr.chamber_index(&c).unwrap()] += p;
    }
    law
}

fn luce(deck: &[usize], w: &[f64]) -> f64 {
    let mut left = 1.0;
    let mut p = 1.0;
    for &c in deck {
        p *= w[c] / left;
        left -= w[c];
    }
    p
}

fn tsetlin(weights: &[f64]) -> (Arrangement, WeightedFaceSet) {
    let f = Family::Tsetlin(TsetlinSpec::new(weights.to_vec()).unwrap());
    (f.arrangement().unwrap(), f.weighted_faces().unwrap())
}

fn hypercube(plus: &[f64], minus: &[f64]) -> (Arrangement, WeightedFaceSet) {
    let f = Family::HypercubeNn {
        w_plus: plus.to_vec(),
        w_minus: minus.to_vec(),
    };
    (f.arrangement().unwrap(), f.weighted_faces().unwrap())
}

#[test]
fn boolean2_spot_values_from_all_face_pairs() {
    let (arr, w) = hypercube(&[0.25, 0.25], &[0.25, 0.25]);
    assert_eq!(tuples(&w, 2).len(), 16);
    assert_eq!(brute_survival(&w, 2), 0.5);
    let chambers = arr.chambers().unwrap();
    let pi = 0.25;
    let s2 = chambers
        .iter()
        .map(|x0| {
            let law = brute_law(&arr, &w, x0, 2);
            1.0 - law.iter().map(|p| p / pi).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert_eq!(s2, 0.5);
    assert_eq!(separation_distance(&arr, &w, 2).unwrap(), 0.5);
    assert_eq!(survival_exact(&arr, &w, 2).unwrap(), 0.5);
}

#[test]
fn laws_match_tuple_enumeration() {
    let cases = [
        tsetlin(&[0.5, 0.3, 0.2]),
        hypercube(&[0.3, 0.1, 0.1], &[0.2, 0.2, 0.1]),
        (
            build_braid(3).unwrap(),
            gallery::riffle_faces(3, 2).unwrap(),
        ),
    ];
    for (arr, w) in &cases {
        for start in arr.chambers().unwrap() {
            for t in 0..4 {
                let brute = brute_law(arr, w, start, t);
                let law = law_at(arr, w, start, t as u64).unwrap();
                for (a, b) in brute.iter().zip(law.probs()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
        for t in 0..5 {
            assert!(
                (brute_survival(w, t) - survival_exact(arr, w, t as u64).unwrap()).abs() < 1e-12
            );
        }
    }
}

#[test]
fn transition_matrix_rows() {
    let (arr, w) = tsetlin(&[0.4, 0.3, 0.2, 0.1]);
    let p = transition_matrix(&arr, &w).unwrap();
    assert!(p.max_row_sum_defect() < 1e-12);
    for (i, c) in arr.chambers().unwrap().iter().enumerate() {
        let law = brute_law(&arr, &w, c, 1);
        for (j, q) in law.iter().enumerate() {
            assert!((p[(i, j)] - q).abs() < 1e-15);
        }
    }
}

#[test]
fn tsetlin_stationary_is_luce() {
    for weights in [vec![0.5, 0.3, 0.2], vec![0.4, 0.3, 0.2, 0.1], vec![0.25; 4]] {
        let (arr, w) = tsetlin(&weights);
        let n = weights.len();
        let pi = stationary_solve(&arr, &w).unwrap();
        let wr = stationary_without_replacement(&arr, &w).unwrap();
        assert!(wr.std_err.is_none());
        for (i, c) in arr.chambers().unwrap().iter().enumerate() {
            let l = luce(&chamber_to_deck(n, c).unwrap(), &weights);
            assert!((pi.probs()[i] - l).abs() < 1e-10);
            assert!((wr.distribution.probs()[i] - l).abs() < 1e-10);
        }
    }
}

#[test]
fn tsetlin_survival_formula_against_card_tuples() {
    for weights in [vec![0.5, 0.3, 0.2], vec![0.4, 0.3, 0.2, 0.1]] {
        let n = weights.len();
        let spec = TsetlinSpec::new(weights.clone()).unwrap();
        for t in 0..7u32 {
            let mut fail = 0.0;
            for code in 0..n.pow(t) {
                let mut c = code;
                let mut seen = vec![false; n];
                let mut p = 1.0;
                for _ in 0..t {
                    seen[c % n] = true;
                    p *= weights[c % n];
                    c /= n;
                }
                if seen.iter().filter(|s| **s).count() + 1 < n {
                    fail += p;
                }
            }
            let exact = gallery::tsetlin_survival_exact(&spec, t as u64).unwrap();
            assert!((exact - fail).abs() < 1e-12, "t={t}: {exact} vs {fail}");
        }
    }
}

#[test]
fn coupling_parameters_from_subset_counts() {
    for (n, k) in [(4, 2), (5, 2), (6, 3)] {
        let f = Family::KToTop { n, k };
        let c =
            coupling_parameters(&f.arrangement().unwrap(), &f.weighted_faces().unwrap()).unwrap();
        let subsets: Vec<u32> = (0u32..1 << n)
            .filter(|s| s.count_ones() == k as u32)
            .collect();
        let total = subsets.len() as f64;
        let cuts = |s: u32, i: usize, j: usize| (s >> i & 1) != (s >> j & 1);
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        for (h, &(i, j)) in pairs.iter().enumerate() {
            let b = subsets.iter().filter(|&&s| cuts(s, i, j)).count() as f64 / total;
            assert!((c.b_per_hyperplane[h] - b).abs() < 1e-12);
            assert!((b - gallery::k_to_top_hyperplane_b(n, k)).abs() < 1e-12);
            for (g, &(a, bb)) in pairs.iter().enumerate() {
                let d = subsets
                    .iter()
                    .filter(|&&s| cuts(s, i, j) && cuts(s, a, bb))
                    .count() as f64
                    / total;
                assert!((c.d(h, g) - d).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn inclusion_exclusion_prunes_but_keeps_t0() {
    let (arr, w) = hypercube(&[0.25, 0.25], &[0.25, 0.25]);
    let ie = InclusionExclusion::new(&arr, &w).unwrap();
    assert_eq!(ie.survival(0), 1.0);
    assert!(ie.terms() <= 3);
}

fn assert_within(p_hat: f64, se: f64, exact: f64, what: &str) {
    let tol = 4.0 * se.max(1e-3);
    assert!(
        (p_hat - exact).abs() <= tol,
        "{what}: {p_hat} vs {exact} (se {se})"
    );
}

#[test]
fn family_samplers_match_exact_survival() {
    let families = [
        Family::Tsetlin(TsetlinSpec::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap()),
        Family::Riffle { n: 5, a: 2 },
        Family::Riffle { n: 4, a: 3 },
        Family::KToTop { n: 5, k: 2 },
        Family::TopBottom {
            card_weights: vec![0.25; 4],
        },
        Family::HypercubeNn {
            w_plus: vec![0.3, 0.1, 0.1],
            w_minus: vec![0.2, 0.2, 0.1],
        },
        Family::HypercubeNonlocal { n: 6, k: 2 },
    ];
    let grid: Vec<u64> = (1..=12).collect();
    for f in &families {
        let arr = f.arrangement().unwrap();
        let w = f.weighted_faces().unwrap();
        let ie = InclusionExclusion::new(&arr, &w).unwrap();
        let fast = estimate_survival_with(&f.sampler().unwrap(), &grid, 20_000, 11).unwrap();
        let generic = estimate_survival(&arr, &w, &grid, 20_000, 12).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let exact = ie.survival(t);
            assert_within(fast.p_hat[i], fast.std_err[i], exact, f.name());
            assert_within(generic.p_hat[i], generic.std_err[i], exact, f.name());
        }
    }
}

#[test]
fn long_walk_is_stationary_chi_square() {
    let weights = [0.5, 0.3, 0.2];
    let (arr, w) = tsetlin(&weights);
    let chambers = arr.chambers().unwrap();
    let start = &chambers[0];
    let trials = 6000;
    let mut counts = vec![0.0; chambers.len()];
    for seed in 0..trials {
        let c = simulate_chamber_at(&arr, &w, start, 40, seed).unwrap();
        counts[arr.chamber_index(&c).unwrap()] += 1.0;
    }
    let stat: f64 = chambers
        .iter()
        .zip(&counts)
        .map(|(c, o)| {
            let e = trials as f64 * luce(&chamber_to_deck(3, c).unwrap(), &weights);
            (o - e) * (o - e) / e
        })
        .sum();
    let dist = ChiSquared::new((chambers.len() - 1) as f64).unwrap();
    assert!(1.0 - dist.cdf(stat) > 1e-4, "chi-square {stat}");
}

#[test]
fn profile_is_monotone_and_bounded() {
    let (arr, w) = hypercube(&[0.3, 0.1, 0.1], &[0.2, 0.2, 0.1]);
    let p = distance_profile(&arr, &w, 30).unwrap();
    assert_eq!(p.separation[0], 1.0);
    for t in 1..=30 {
        assert!(p.separation[t] <= p.separation[t - 1] + 1e-12);
        assert!(p.total_variation[t] <= p.separation[t] + 1e-12);
    }
}

#[test]
fn coupon_formula_against_monte_carlo() {
    let exact = glauber::coupon_survival_uniform(9, 30);
    let est = estimate_survival_with(&SiteCoverage { sites: 9 }, &[30], 100_000, 5).unwrap();
    assert!((est.p_hat[0] - exact).abs() <= 4.0 * est.std_err[0]);
}

#[test]
fn glauber_grand_coupling_and_proof_chain() {
    for (wd, ht) in [(2, 2), (1, 4)] {
        for beta in [0.0, 0.3, 1.0] {
            let sys = ising_system(wd, ht, beta, 0.0).unwrap();
            assert!(check_monotone(&sys).is_monotone());
            assert!(glauber::check_grand_coupling(&sys, 64).unwrap().is_none());
            let prof = glauber::glauber_profile(&sys, 40).unwrap();
            for t in 0..=40u64 {
                let s = prof.separation[t as usize];
                assert!(s + 1e-9 >= glauber::coupon_survival_uniform(4, t));
                assert!(s + 1e-12 >= prof.top_to_bottom[t as usize]);
            }
        }
    }
}

#[test]
fn product_system_conditionals_ignore_neighbours() {
    let sys = glauber::product_system(3, vec![0.0, 1.0, 2.0], 0.4).unwrap();
    let reference = conditional_at_site(&sys, &[0, 0, 0], 1);
    for c in [[2, 0, 1], [1, 2, 2], [0, 1, 2]] {
        let p = conditional_at_site(&sys, &c, 1);
        for (a, b) in p.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-15);
        }
    }
    assert!(check_monotone(&sys).is_monotone());
}

#[test]
fn trial_streams_are_reproducible() {
    use rand::RngCore;
    let a: Vec<u64> = (0..4).map(|k| trial_rng(9, k).next_u64()).collect();
    let b: Vec<u64> = (0..4).map(|k| trial_rng(9, k).next_u64()).collect();
    assert_eq!(a, b);
}
