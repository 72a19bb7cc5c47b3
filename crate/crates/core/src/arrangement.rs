//! Sign vectors, the face semigroup, and arrangements given combinatorially.
//!
//! A face of a central arrangement with `m` hyperplanes is a sign vector in
//! `{+, -, 0}^m`; chambers are the sign vectors without zeros. The product
//! `FG` takes `F`'s sign wherever it is non-zero and `G`'s elsewhere. It is
//! associative, idempotent (`FF = F`) and has the deletion property
//! (`FGF = FG`).
//!
//! Braid arrangement conventions: cards are `0..n`, hyperplanes are the pairs
//! `(i, j)` with `i < j` in lexicographic order, and the coordinate for
//! `(i, j)` is `Plus` when `x_i < x_j` (card `i` sits in an earlier block,
//! i.e. above `j` in the deck), `Minus` when it sits later and `Zero` when
//! both share a block.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parameter, validation, Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Minus,
    Zero,
    Plus,
}

impl Sign {
    pub fn from_char(c: char) -> Option<Sign> {
        match c {
            '+' => Some(Sign::Plus),
            '-' => Some(Sign::Minus),
            '0' => Some(Sign::Zero),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
            Sign::Zero => '0',
        }
    }

    pub fn is_zero(self) -> bool {
        self == Sign::Zero
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
            Sign::Zero => Sign::Zero,
        }
    }
}

/// A face, one sign per hyperplane.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignVector(Vec<Sign>);

impl SignVector {
    pub fn new(coords: Vec<Sign>) -> Self {
        SignVector(coords)
    }

    /// The central face, identity of the product.
    pub fn zero(m: usize) -> Self {
        SignVector(vec![Sign::Zero; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[Sign] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Sign {
        self.0[i]
    }

    pub fn is_chamber(&self) -> bool {
        !self.0.is_empty() && self.0.iter().all(|s| !s.is_zero())
    }

    /// Indices of the non-zero coordinates.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_zero())
            .map(|(i, _)| i)
    }

    pub fn product(&self, other: &SignVector) -> Result<SignVector> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(SignVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&f, &g)| if f.is_zero() { g } else { f })
                .collect(),
        ))
    }

    /// `target <- self * target`, in place. Lengths must agree.
    pub fn act_on(&self, target: &mut SignVector) {
        debug_assert_eq!(self.len(), target.len());
        for (t, &f) in target.0.iter_mut().zip(&self.0) {
            if !f.is_zero() {
                *t = f;
            }
        }
    }

    /// Every coordinate negated; the opposite chamber of a chamber.
    pub fn opposite(&self) -> SignVector {
        SignVector(self.0.iter().map(|s| s.flip()).collect())
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for SignVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| {
                Sign::from_char(c)
                    .ok_or_else(|| validation(format!("invalid sign character {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(SignVector)
    }
}

impl From<Vec<Sign>> for SignVector {
    fn from(v: Vec<Sign>) -> Self {
        SignVector(v)
    }
}

pub fn face_product(f: &SignVector, g: &SignVector) -> Result<SignVector> {
    f.product(g)
}

pub fn is_chamber(f: &SignVector) -> bool {
    f.is_chamber()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTag {
    Braid(usize),
    Boolean(usize),
    Custom,
}

/// Size limits for materializing chambers and faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Above this many chambers the chamber list stays implicit.
    pub max_chambers: usize,
    /// Above this many faces the face universe stays implicit.
    pub max_faces: usize,
    /// Hard cap on the hyperplane count.
    pub max_hyperplanes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_chambers: 10_000,
            max_faces: 100_000,
            max_hyperplanes: 1 << 20,
        }
    }
}

/// Exhaustive closure checks run up to this many products; beyond that a
/// fixed-seed sample of this many products is checked.
pub const CLOSURE_CHECK_PRODUCTS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct Arrangement {
    hyperplanes: usize,
    family: FamilyTag,
    symmetry_certified: bool,
    chambers: Option<Vec<SignVector>>,
    chamber_index: BTreeMap<SignVector, usize>,
    faces: Option<Vec<SignVector>>,
    face_set: BTreeSet<SignVector>,
    limits: Limits,
}

impl Arrangement {
    fn assemble(
        limits: Limits,
        hyperplanes: usize,
        family: FamilyTag,
        symmetry_certified: bool,
        chambers: Option<Vec<SignVector>>,
        faces: Option<Vec<SignVector>>,
    ) -> Self {
        let chamber_index = chambers
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let face_set = faces.iter().flatten().cloned().collect();
        Arrangement {
            hyperplanes,
            family,
            symmetry_certified,
            chambers,
            chamber_index,
            faces,
            face_set,
            limits,
        }
    }

    /// Arrangement from explicit chamber and face lists.
    ///
    /// Faces must be closed under the product; this is checked exhaustively
    /// up to [`CLOSURE_CHECK_PRODUCTS`] products and on a fixed-seed sample
    /// of that size beyond it.
    pub fn custom(m: usize, chambers: Vec<SignVector>, faces: Vec<SignVector>) -> Result<Self> {
        if m == 0 {
            return Err(validation("custom arrangement needs m >= 1"));
        }
        for v in chambers.iter().chain(&faces) {
            if v.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    found: v.len(),
                });
            }
        }
        let face_set: BTreeSet<SignVector> = faces.iter().cloned().collect();
        if face_set.len() != faces.len() {
            return Err(validation("duplicate face in face list"));
        }
        let chamber_set: BTreeSet<&SignVector> = chambers.iter().collect();
        if chamber_set.len() != chambers.len() {
            return Err(validation("duplicate chamber in chamber list"));
        }
        for c in &chambers {
            if !c.is_chamber() {
                return Err(validation(format!("chamber {c} has a zero coordinate")));
            }
            if !face_set.contains(c) {
                return Err(validation(format!(
                    "chamber {c} missing from the face list"
                )));
            }
        }
        for f in &faces {
            if f.is_chamber() && !chamber_set.contains(f) {
                return Err(validation(format!(
                    "face {f} is a chamber but not listed as one"
                )));
            }
        }
        check_closure(&faces, &face_set)?;
        Ok(Arrangement::assemble(
            Limits::default(),
            m,
            FamilyTag::Custom,
            false,
            Some(chambers),
            Some(faces),
        ))
    }

    pub fn hyperplanes(&self) -> usize {
        self.hyperplanes
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    /// Whether a chamber-transitive, weight-preserving symmetry group is
    /// known for the family (the symmetric group for braid, sign flips for
    /// Boolean). Whether a given weighting is invariant is a separate matter.
    pub fn symmetry_certified(&self) -> bool {
        self.symmetry_certified
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn chambers_materialized(&self) -> bool {
        self.chambers.is_some()
    }

    pub fn chambers(&self) -> Result<&[SignVector]> {
        self.chambers.as_deref().ok_or(Error::Capacity {
            what: "chamber enumeration",
            requested: self.chamber_count().unwrap_or(u128::MAX),
            limit: self.limits.max_chambers as u128,
        })
    }

    pub fn chamber_index(&self, chamber: &SignVector) -> Option<usize> {
        self.chamber_index.get(chamber).copied()
    }

    /// Number of chambers (exact even when not materialized), `None` on overflow.
    pub fn chamber_count(&self) -> Option<u128> {
        match self.family {
            FamilyTag::Boolean(n) => 1u128.checked_shl(n as u32),
            FamilyTag::Braid(n) => math::factorial_u128(n as u64),
            FamilyTag::Custom => self.chambers.as_ref().map(|c| c.len() as u128),
        }
    }

    pub fn face_count(&self) -> Option<u128> {
        match self.family {
            FamilyTag::Boolean(n) => 3u128.checked_pow(n as u32),
            FamilyTag::Braid(n) => math::fubini_u128(n),
            FamilyTag::Custom => self.faces.as_ref().map(|f| f.len() as u128),
        }
    }

    /// Explicit face list, if it was materialized.
    pub fn faces(&self) -> Option<&[SignVector]> {
        self.faces.as_deref()
    }

    pub fn contains_face(&self, f: &SignVector) -> bool {
        if f.len() != self.hyperplanes {
            return false;
        }
        if self.faces.is_some() {
            return self.face_set.contains(f);
        }
        match self.family {
            FamilyTag::Boolean(_) => true,
            FamilyTag::Braid(n) => braid_partition_of(n, f).is_some(),
            FamilyTag::Custom => false,
        }
    }
}

fn check_closure(faces: &[SignVector], face_set: &BTreeSet<SignVector>) -> Result<()> {
    let check = |f: &SignVector, g: &SignVector| -> Result<()> {
        let fg = f.product(g)?;
        if face_set.contains(&fg) {
            Ok(())
        } else {
            Err(validation(format!(
                "faces not closed under the product: {f} * {g} = {fg} is not listed"
            )))
        }
    };
    let n = faces.len();
    if n.saturating_mul(n) <= CLOSURE_CHECK_PRODUCTS {
        for f in faces {
            for g in faces {
                check(f, g)?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x00c1_05ed);
        for _ in 0..CLOSURE_CHECK_PRODUCTS {
            let f = &faces[rng.gen_range(0..n)];
            let g = &faces[rng.gen_range(0..n)];
            check(f, g)?;
        }
    }
    Ok(())
}

/// Boolean arrangement `x_i = 0`: chambers `{+,-}^n`, faces `{+,-,0}^n`.
pub fn build_boolean(n: usize) -> Result<Arrangement> {
    build_boolean_with(n, &Limits::default())
}

/// Chamber `k` has coordinate `i` equal to `Minus` iff bit `i` of `k` is set,
/// so for `n = 2` the order is `++, -+, +-, --`.
pub fn build_boolean_with(n: usize, limits: &Limits) -> Result<Arrangement> {
    if n == 0 {
        return Err(validation("Boolean arrangement needs n >= 1"));
    }
    if n > limits.max_hyperplanes {
        return Err(Error::Capacity {
            what: "hyperplanes",
            requested: n as u128,
            limit: limits.max_hyperplanes as u128,
        });
    }
    let chambers = (n < 64 && (1usize << n) <= limits.max_chambers).then(|| {
        (0..1usize << n)
            .map(|k| {
                SignVector(
                    (0..n)
                        .map(|i| {
                            if k >> i & 1 == 1 {
                                Sign::Minus
                            } else {
                                Sign::Plus
                            }
                        })
                        .collect(),
                )
            })
            .collect::<Vec<_>>()
    });
    let face_total = 3u128.checked_pow(n as u32);
    let faces = face_total
        .filter(|&c| c <= limits.max_faces as u128)
        .map(|c| {
            (0..c as usize)
                .map(|mut k| {
                    let mut coords = Vec::with_capacity(n);
                    for _ in 0..n {
                        coords.push(match k % 3 {
                            0 => Sign::Zero,
                            1 => Sign::Plus,
                            _ => Sign::Minus,
                        });
                        k /= 3;
                    }
                    SignVector(coords)
                })
                .collect::<Vec<_>>()
        });
    Ok(Arrangement::assemble(
        *limits,
        n,
        FamilyTag::Boolean(n),
        true,
        chambers,
        faces,
    ))
}

/// Braid arrangement `x_i = x_j`: chambers are permutations (listed in
/// lexicographic order of the deck read top to bottom), faces are ordered
/// set partitions.
pub fn build_braid(n: usize) -> Result<Arrangement> {
    build_braid_with(n, &Limits::default())
}

pub fn build_braid_with(n: usize, limits: &Limits) -> Result<Arrangement> {
    if n < 2 {
        return Err(validation("braid arrangement needs n >= 2"));
    }
    let m = braid_hyperplanes(n);
    if m > limits.max_hyperplanes {
        return Err(Error::Capacity {
            what: "hyperplanes",
            requested: m as u128,
            limit: limits.max_hyperplanes as u128,
        });
    }
    let chambers = math::factorial_u128(n as u64)
        .filter(|&c| c <= limits.max_chambers as u128)
        .map(|_| {
            permutations(n)
                .into_iter()
                .map(|deck| ranks_to_sign_vector(&deck_ranks(&deck)))
                .collect::<Vec<_>>()
        });
    let faces = math::fubini_u128(n)
        .filter(|&c| c <= limits.max_faces as u128)
        .map(|_| {
            ordered_partition_ranks(n)
                .into_iter()
                .map(|r| ranks_to_sign_vector(&r))
                .collect::<Vec<_>>()
        });
    Ok(Arrangement::assemble(
        *limits,
        m,
        FamilyTag::Braid(n),
        true,
        chambers,
        faces,
    ))
}

pub fn braid_hyperplanes(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Index of hyperplane `x_i = x_j` (`i < j`) in the braid ordering.
pub fn braid_pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Braid sign vector from block ranks: card `i` lies in block `ranks[i]`.
/// Only the relative order of ranks matters, so unused ranks collapse.
pub fn ranks_to_sign_vector(ranks: &[usize]) -> SignVector {
    let n = ranks.len();
    let mut coords = Vec::with_capacity(braid_hyperplanes(n));
    for i in 0..n {
        for j in i + 1..n {
            coords.push(match ranks[i].cmp(&ranks[j]) {
                core::cmp::Ordering::Less => Sign::Plus,
                core::cmp::Ordering::Greater => Sign::Minus,
                core::cmp::Ordering::Equal => Sign::Zero,
            });
        }
    }
    SignVector(coords)
}

/// Face of `Braid(n)` for an ordered block partition of `0..n`.
pub fn partition_to_sign_vector(blocks: &[Vec<usize>], n: usize) -> Result<SignVector> {
    let mut ranks = vec![usize::MAX; n];
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(validation(format!("block {b} is empty")));
        }
        for &card in block {
            if card >= n {
                return Err(validation(format!("card {card} outside 0..{n}")));
            }
            if ranks[card] != usize::MAX {
                return Err(validation(format!("card {card} appears twice")));
            }
            ranks[card] = b;
        }
    }
    if let Some(missing) = ranks.iter().position(|&r| r == usize::MAX) {
        return Err(validation(format!("card {missing} is not covered")));
    }
    Ok(ranks_to_sign_vector(&ranks))
}

/// Inverse of [`partition_to_sign_vector`]; `None` if the sign vector is not
/// a face of `Braid(n)`.
pub fn braid_partition_of(n: usize, f: &SignVector) -> Option<Vec<Vec<usize>>> {
    if f.len() != braid_hyperplanes(n) {
        return None;
    }
    // ranks[i] = number of cards strictly before i
    let mut ranks = vec![0usize; n];
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            match f.get(idx) {
                Sign::Plus => ranks[j] += 1,
                Sign::Minus => ranks[i] += 1,
                Sign::Zero => {}
            }
            idx += 1;
        }
    }
    if ranks_to_sign_vector(&ranks) != *f {
        return None;
    }
    let mut levels: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (card, &r) in ranks.iter().enumerate() {
        levels.entry(r).or_default().push(card);
    }
    Some(levels.into_values().collect())
}

/// Deck (top to bottom) of a braid chamber.
pub fn chamber_to_deck(n: usize, c: &SignVector) -> Option<Vec<usize>> {
    let blocks = braid_partition_of(n, c)?;
    if blocks.len() != n {
        return None;
    }
    Some(blocks.into_iter().map(|b| b[0]).collect())
}

pub fn deck_to_chamber(deck: &[usize]) -> SignVector {
    ranks_to_sign_vector(&deck_ranks(deck))
}

fn deck_ranks(deck: &[usize]) -> Vec<usize> {
    let mut ranks = vec![0; deck.len()];
    for (pos, &card) in deck.iter().enumerate() {
        ranks[card] = pos;
    }
    ranks
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    // lexicographic successor
    while let Some(i) = (0..n.saturating_sub(1))
        .rev()
        .find(|&i| current[i] < current[i + 1])
    {
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
        out.push(current.clone());
    }
    out
}

/// All surjections `0..n -> 0..k`, `k = 1..=n`, as rank vectors.
fn ordered_partition_ranks(n: usize) -> Vec<Vec<usize>> {
    fn rec(ranks: &mut Vec<usize>, n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
        if ranks.len() == n {
            let mut hit = vec![false; k];
            for &r in ranks.iter() {
                hit[r] = true;
            }
            if hit.iter().all(|&h| h) {
                out.push(ranks.clone());
            }
            return;
        }
        for r in 0..k {
            ranks.push(r);
            rec(ranks, n, k, out);
            ranks.pop();
        }
    }
    let mut out = Vec::new();
    for k in 1..=n {
        rec(&mut Vec::with_capacity(n), n, k, &mut out);
    }
    out
}

/// Result of the separating-weights check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationReport {
    pub violated: Vec<usize>,
}

impl SeparationReport {
    pub fn is_separating(&self) -> bool {
        self.violated.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.violated.is_empty() {
            Ok(())
        } else {
            Err(Error::NotSeparating {
                violated: self.violated,
            })
        }
    }
}

/// Every hyperplane must be cut by some positively weighted face.
pub fn check_separating(arr: &Arrangement, w: &WeightedFaceSet) -> SeparationReport {
    check_separating_faces(arr.hyperplanes(), w.entries())
}

/// Raw form of [`check_separating`]: an empty list separates nothing.
pub fn check_separating_faces(m: usize, entries: &[(SignVector, f64)]) -> SeparationReport {
    let mut cut = vec![false; m];
    for (face, weight) in entries {
        if *weight <= 0.0 {
            continue;
        }
        for i in face.support() {
            if i < m {
                cut[i] = true;
            }
        }
    }
    SeparationReport {
        violated: (0..m).filter(|&i| !cut[i]).collect(),
    }
}

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A probability measure on faces: strictly positive weights summing to one.
#[derive(Debug, Clone)]
pub struct WeightedFaceSet {
    hyperplanes: usize,
    entries: Vec<(SignVector, f64)>,
    supports: Vec<Vec<usize>>,
    sampler: WeightedIndex<f64>,
}

impl WeightedFaceSet {
    pub fn new(entries: Vec<(SignVector, f64)>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(validation("weighted face set is empty"));
        };
        let m = first.0.len();
        let mut total = 0.0;
        for (face, weight) in &entries {
            if face.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    found: face.len(),
                });
            }
            if !(weight.is_finite() && *weight > 0.0) {
                return Err(validation(format!(
                    "weight {weight} of face {face} is not positive"
                )));
            }
            total += weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(validation(format!("weights sum to {total}, not 1")));
        }
        let supports = entries.iter().map(|(f, _)| f.support().collect()).collect();
        let sampler = WeightedIndex::new(entries.iter().map(|(_, w)| *w))
            .map_err(|e| validation(format!("{e}")))?;
        Ok(WeightedFaceSet {
            hyperplanes: m,
            entries,
            supports,
            sampler,
        })
    }

    /// Builds from possibly repeated faces, summing weights of duplicates.
    pub fn merged(entries: impl IntoIterator<Item = (SignVector, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<SignVector, f64> = BTreeMap::new();
        let mut order = Vec::new();
        for (f, w) in entries {
            match acc.get_mut(&f) {
                Some(v) => *v += w,
                None => {
                    order.push(f.clone());
                    acc.insert(f, w);
                }
            }
        }
        let merged = order
            .into_iter()
            .map(|f| {
                let w = acc[&f];
                (f, w)
            })
            .collect();
        WeightedFaceSet::new(merged)
    }

    pub fn hyperplanes(&self) -> usize {
        self.hyperplanes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(SignVector, f64)] {
        &self.entries
    }

    pub fn face(&self, idx: usize) -> &SignVector {
        &self.entries[idx].0
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.entries[idx].1
    }

    /// Non-zero coordinates of face `idx`.
    pub fn support(&self, idx: usize) -> &[usize] {
        &self.supports[idx]
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    /// Errors unless every face belongs to `arr`.
    pub fn validate_against(&self, arr: &Arrangement) -> Result<()> {
        if self.hyperplanes != arr.hyperplanes() {
            return Err(Error::Dimension {
                expected: arr.hyperplanes(),
                found: self.hyperplanes,
            });
        }
        for (f, _) in &self.entries {
            if !arr.contains_face(f) {
                return Err(validation(format!(
                    "face {f} is not a face of the arrangement"
                )));
            }
        }
        Ok(())
    }

    /// Whether the weights are constant on orbits of the family's symmetry
    /// group (needed for the equality `s(t) = P(T > t)`).
    pub fn is_invariant_under(&self, arr: &Arrangement) -> Result<bool> {
        let weight_of: BTreeMap<&SignVector, f64> =
            self.entries.iter().map(|(f, w)| (f, *w)).collect();
        let lookup = |f: &SignVector| weight_of.get(f).copied().unwrap_or(0.0);
        let close = |a: f64, b: f64| (a - b).abs() <= WEIGHT_SUM_TOLERANCE;
        match arr.family() {
            FamilyTag::Boolean(_) => Ok(self.entries.iter().all(|(f, w)| {
                f.support().all(|i| {
                    let mut g = f.clone();
                    g.0[i] = g.0[i].flip();
                    close(*w, lookup(&g))
                })
            })),
            FamilyTag::Braid(n) => {
                // invariance under adjacent transpositions generates S_n
                for (f, w) in &self.entries {
                    let blocks = braid_partition_of(n, f)
                        .ok_or_else(|| validation(format!("{f} is not a braid face")))?;
                    let mut ranks = vec![0; n];
                    for (b, block) in blocks.iter().enumerate() {
                        for &c in block {
                            ranks[c] = b;
                        }
                    }
                    for i in 0..n - 1 {
                        let mut swapped = ranks.clone();
                        swapped.swap(i, i + 1);
                        if !close(*w, lookup(&ranks_to_sign_vector(&swapped))) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            FamilyTag::Custom => Err(parameter(
                "no symmetry group is known for custom arrangements",
            )),
        }
    }
}

impl PartialEq for WeightedFaceSet {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}
