//! Words in the braid group B_n: composition, free reduction, permutations,
//! linking numbers, strand deletion, and a reducibility heuristic.
//!
//! Words are stored and manipulated as disc-braid representatives; no sphere
//! relations are applied. Invariants computed downstream (signatures, linking
//! numbers, entropy) are invariants of these representatives, and results
//! that depend on them carry a caveat to that effect.

pub mod dynnikov;

pub use dynnikov::{braid_entropy_estimate, DynnikovCoords};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Entropy threshold below which a word is flagged reducible-or-periodic.
pub const TAU_REDUCIBLE: f64 = 1e-3;

/// Default iteration budget for entropy estimation.
pub const DEFAULT_ENTROPY_ITERS: usize = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BraidError {
    #[error("strand counts differ: {left} vs {right}")]
    StrandMismatch { left: usize, right: usize },
    #[error("generator {index} out of range for {strands} strands")]
    InvalidGenerator { index: i32, strands: usize },
    #[error("strand {strand} out of range for {strands} strands")]
    InvalidStrand { strand: usize, strands: usize },
    #[error("word is not a pure braid")]
    NotPure,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at column {column}: {message}")]
pub struct ParseBraidError {
    /// 1-based byte column in the input string.
    pub column: usize,
    pub message: String,
}

/// A word in the braid group on `strands` strands. Letters are nonzero
/// integers: `i` is the generator crossing strands at positions i, i+1
/// positively, `-i` its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<i32>,
}

impl BraidWord {
    pub fn empty(strands: usize) -> Self {
        assert!(strands >= 1, "braid needs at least one strand");
        BraidWord {
            strands,
            letters: Vec::new(),
        }
    }

    pub fn new(strands: usize, letters: Vec<i32>) -> Result<Self, BraidError> {
        assert!(strands >= 1, "braid needs at least one strand");
        for &l in &letters {
            if l == 0 || l.unsigned_abs() as usize >= strands {
                return Err(BraidError::InvalidGenerator { index: l, strands });
            }
        }
        Ok(BraidWord { strands, letters })
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Freely reduced form: adjacent inverse pairs cancelled to a fixpoint.
    pub fn reduced(&self) -> BraidWord {
        let mut stack: Vec<i32> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if stack.last() == Some(&-l) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        BraidWord {
            strands: self.strands,
            letters: stack,
        }
    }

    /// Concatenation followed by free reduction.
    pub fn compose(&self, other: &BraidWord) -> Result<BraidWord, BraidError> {
        if self.strands != other.strands {
            return Err(BraidError::StrandMismatch {
                left: self.strands,
                right: other.strands,
            });
        }
        let mut letters = Vec::with_capacity(self.letters.len() + other.letters.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Ok(BraidWord {
            strands: self.strands,
            letters,
        }
        .reduced())
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    /// k-th power (inverse for negative k), freely reduced.
    pub fn power(&self, k: i64) -> BraidWord {
        let base = if k >= 0 { self.clone() } else { self.inverse() };
        let reps = k.unsigned_abs() as usize;
        let mut letters = Vec::with_capacity(base.letters.len() * reps);
        for _ in 0..reps {
            letters.extend_from_slice(&base.letters);
        }
        BraidWord {
            strands: self.strands,
            letters,
        }
        .reduced()
    }

    /// Image under the map to the symmetric group: letters applied left to
    /// right as adjacent transpositions of positions.
    pub fn permutation(&self) -> StrandPermutation {
        let mut arr: Vec<usize> = (0..self.strands).collect();
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            arr.swap(g - 1, g);
        }
        let mut image = vec![0usize; self.strands];
        for (pos, &strand) in arr.iter().enumerate() {
            image[strand] = pos;
        }
        StrandPermutation { image }
    }

    pub fn is_pure(&self) -> bool {
        self.permutation().is_identity()
    }

    /// Sum of letter signs; a homomorphism to the integers.
    pub fn exponent_sum(&self) -> i64 {
        self.letters.iter().map(|&l| l.signum() as i64).sum()
    }

    /// Signed count of crossings between strands `i` and `j` (1-based
    /// starting positions), tracked through the position action letter by
    /// letter. Defined for any word.
    pub fn pair_exponent(&self, i: usize, j: usize) -> Result<i64, BraidError> {
        self.check_strand(i)?;
        self.check_strand(j)?;
        assert!(i != j, "pair exponent needs two distinct strands");
        let (lo, hi) = (i.min(j) - 1, i.max(j) - 1);
        let mut arr: Vec<usize> = (0..self.strands).collect();
        let mut total = 0i64;
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            let (a, b) = (arr[g - 1], arr[g]);
            if (a.min(b), a.max(b)) == (lo, hi) {
                total += l.signum() as i64;
            }
            arr.swap(g - 1, g);
        }
        Ok(total)
    }

    /// Linking number of strands `i < j` in a pure braid: half the signed
    /// crossing count of the pair. Always an integer for pure words.
    pub fn linking_number(&self, i: usize, j: usize) -> Result<Rational64, BraidError> {
        if !(i < j) {
            return Err(BraidError::InvalidStrand {
                strand: i,
                strands: self.strands,
            });
        }
        if !self.is_pure() {
            return Err(BraidError::NotPure);
        }
        Ok(Rational64::new(self.pair_exponent(i, j)?, 2))
    }

    /// All signed pair crossing counts, keyed by (i, j) with i < j, 1-based.
    pub fn pair_exponent_table(&self) -> BTreeMap<(usize, usize), i64> {
        let mut arr: Vec<usize> = (0..self.strands).collect();
        let mut table = BTreeMap::new();
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            let (a, b) = (arr[g - 1], arr[g]);
            let key = (a.min(b) + 1, a.max(b) + 1);
            *table.entry(key).or_insert(0i64) += l.signum() as i64;
            arr.swap(g - 1, g);
        }
        table
    }

    /// Image under the strand-forgetting map: keeps only crossings whose two
    /// strands (identified by starting position, 1-based) both lie in `keep`.
    /// The result is a word on `keep.len()` strands, not freely reduced.
    pub fn delete_strands(&self, keep: &[usize]) -> BraidWord {
        assert!(!keep.is_empty(), "keep set must be nonempty");
        let mut kept = vec![false; self.strands];
        for &s in keep {
            assert!(
                (1..=self.strands).contains(&s),
                "strand {s} out of range for {} strands",
                self.strands
            );
            kept[s - 1] = true;
        }
        let m = kept.iter().filter(|&&k| k).count();
        let mut arr: Vec<usize> = (0..self.strands).collect();
        let mut letters = Vec::new();
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            let (a, b) = (arr[g - 1], arr[g]);
            if kept[a] && kept[b] {
                let rank = arr[..g - 1].iter().filter(|&&s| kept[s]).count();
                letters.push(l.signum() * (rank as i32 + 1));
            }
            arr.swap(g - 1, g);
        }
        BraidWord {
            strands: m,
            letters,
        }
    }

    /// Strand ids (1-based) involved in at least one crossing.
    pub fn crossing_strands(&self) -> Vec<usize> {
        let mut seen = vec![false; self.strands];
        let mut arr: Vec<usize> = (0..self.strands).collect();
        for &l in &self.letters {
            let g = l.unsigned_abs() as usize;
            seen[arr[g - 1]] = true;
            seen[arr[g]] = true;
            arr.swap(g - 1, g);
        }
        (0..self.strands).filter(|&s| seen[s]).map(|s| s + 1).collect()
    }

    /// Text form `n; s1 s2 ...`; round-trips exactly through [`BraidWord::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{};", self.strands);
        for &l in &self.letters {
            s.push(' ');
            s.push_str(&l.to_string());
        }
        s
    }

    pub fn from_text(input: &str) -> Result<Self, ParseBraidError> {
        let semi = input.find(';').ok_or_else(|| ParseBraidError {
            column: input.len() + 1,
            message: "expected ';' after the strand count".into(),
        })?;
        let head = &input[..semi];
        let head_col = head
            .find(|c: char| !c.is_whitespace())
            .map(|o| o + 1)
            .unwrap_or(1);
        let strands: usize = head.trim().parse().map_err(|_| ParseBraidError {
            column: head_col,
            message: format!("invalid strand count {:?}", head.trim()),
        })?;
        if strands == 0 {
            return Err(ParseBraidError {
                column: head_col,
                message: "strand count must be at least 1".into(),
            });
        }
        let mut letters = Vec::new();
        let tail = &input[semi + 1..];
        let mut rest = tail;
        let mut offset = semi + 1;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tok_col = offset + start + 1;
            let after = &rest[start..];
            let end = after
                .find(|c: char| c.is_whitespace())
                .unwrap_or(after.len());
            let tok = &after[..end];
            let l: i32 = tok.parse().map_err(|_| ParseBraidError {
                column: tok_col,
                message: format!("invalid letter {tok:?}"),
            })?;
            if l == 0 || l.unsigned_abs() as usize >= strands {
                return Err(ParseBraidError {
                    column: tok_col,
                    message: format!("generator {l} out of range for {strands} strands"),
                });
            }
            letters.push(l);
            offset += start + end;
            rest = &after[end..];
        }
        Ok(BraidWord { strands, letters })
    }

    fn check_strand(&self, s: usize) -> Result<(), BraidError> {
        if (1..=self.strands).contains(&s) {
            Ok(())
        } else {
            Err(BraidError::InvalidStrand {
                strand: s,
                strands: self.strands,
            })
        }
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for BraidWord {
    type Err = ParseBraidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BraidWord::from_text(s)
    }
}

/// Where each strand ends up: `image[s]` is the final position (0-based) of
/// the strand starting at position s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrandPermutation {
    image: Vec<usize>,
}

impl StrandPermutation {
    pub fn identity(n: usize) -> Self {
        StrandPermutation {
            image: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(s, &p)| s == p)
    }

    /// Final position of strand `s` (0-based).
    pub fn image_of(&self, s: usize) -> usize {
        self.image[s]
    }

    /// Permutation of `self` followed by `then`.
    pub fn compose(&self, then: &StrandPermutation) -> StrandPermutation {
        assert_eq!(self.n(), then.n());
        StrandPermutation {
            image: self.image.iter().map(|&p| then.image[p]).collect(),
        }
    }

    /// Cycle notation on 1-based strand labels; identity prints as `id`.
    pub fn to_cycles_string(&self) -> String {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = String::new();
        for start in 0..n {
            if seen[start] || self.image[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = self.image[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.image[cur];
            }
            out.push('(');
            out.push_str(
                &cycle
                    .iter()
                    .map(|&s| (s + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            out.push(')');
        }
        if out.is_empty() {
            "id".into()
        } else {
            out
        }
    }
}

/// Why a word was flagged reducible-or-periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducibilityReason {
    /// Freely reduces to the empty word.
    TrivialWord,
    /// All crossings involve a proper subset of the strands.
    CrossingsConfined,
    /// The algebraically linked strands form a proper subset and the
    /// complementary sub-braid is trivial.
    PairwiseSplit,
    /// Coordinate-growth estimate below the threshold.
    LowEntropy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducibilityReport {
    pub flagged: bool,
    pub reason: Option<ReducibilityReason>,
    /// Candidate invariant strand subset (1-based), when one was detected.
    pub witness: Option<Vec<usize>>,
    /// Filled when the entropy branch ran.
    pub entropy_estimate: Option<f64>,
}

/// Heuristic reducible-or-periodic detector. Flags a word when (in order):
/// it freely reduces to the empty word; all crossings of the reduced word
/// involve a proper strand subset; the strands with nonzero pairwise
/// crossing counts form a proper subset whose complement carries a trivial
/// sub-braid; or the entropy estimate at `iters` iterations falls below
/// [`TAU_REDUCIBLE`]. Not a Thurston classification: false positives are
/// possible on algebraically hidden braiding, hence "probably".
pub fn is_probably_reducible(w: &BraidWord, iters: usize) -> ReducibilityReport {
    assert!(w.strands() >= 3, "reducibility heuristic needs n >= 3");
    let r = w.reduced();
    if r.is_empty() {
        return ReducibilityReport {
            flagged: true,
            reason: Some(ReducibilityReason::TrivialWord),
            witness: None,
            entropy_estimate: None,
        };
    }
    let n = r.strands();
    let crossing = r.crossing_strands();
    if crossing.len() < n {
        return ReducibilityReport {
            flagged: true,
            reason: Some(ReducibilityReason::CrossingsConfined),
            witness: Some(crossing),
            entropy_estimate: None,
        };
    }
    let table = r.pair_exponent_table();
    let mut linked = vec![false; n];
    for (&(i, j), &e) in &table {
        if e != 0 {
            linked[i - 1] = true;
            linked[j - 1] = true;
        }
    }
    let linked_set: Vec<usize> = (1..=n).filter(|&s| linked[s - 1]).collect();
    if !linked_set.is_empty() && linked_set.len() < n {
        let complement: Vec<usize> = (1..=n).filter(|&s| !linked[s - 1]).collect();
        if r.delete_strands(&complement).reduced().is_empty() {
            return ReducibilityReport {
                flagged: true,
                reason: Some(ReducibilityReason::PairwiseSplit),
                witness: Some(linked_set),
                entropy_estimate: None,
            };
        }
    }
    let entropy = braid_entropy_estimate(&r, iters);
    ReducibilityReport {
        flagged: entropy < TAU_REDUCIBLE,
        reason: (entropy < TAU_REDUCIBLE).then_some(ReducibilityReason::LowEntropy),
        witness: None,
        entropy_estimate: Some(entropy),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_word(rng: &mut ChaCha8Rng, strands: usize, len: usize) -> BraidWord {
        let letters = (0..len)
            .map(|_| {
                let g = rng.random_range(1..strands as i32);
                if rng.random_bool(0.5) {
                    g
                } else {
                    -g
                }
            })
            .collect();
        BraidWord::new(strands, letters).unwrap()
    }

    #[test]
    fn empty_compose_is_identity_element() {
        let v = BraidWord::new(3, vec![1, -2]).unwrap();
        let e = BraidWord::empty(3);
        assert_eq!(e.compose(&v).unwrap(), v);
        assert_eq!(v.compose(&e).unwrap(), v);
    }

    #[test]
    fn word_times_inverse_reduces_to_empty() {
        let u = BraidWord::new(4, vec![1, -2, 3, 3, -1]).unwrap();
        assert!(u.compose(&u.inverse()).unwrap().is_empty());
        assert!(u.inverse().compose(&u).unwrap().is_empty());
    }

    #[test]
    fn distinct_generators_do_not_cancel() {
        let u = BraidWord::new(3, vec![1]).unwrap();
        let v = BraidWord::new(3, vec![2]).unwrap();
        assert_eq!(u.compose(&v).unwrap().len(), 2);
    }

    #[test]
    fn compose_rejects_strand_mismatch() {
        let u = BraidWord::empty(3);
        let v = BraidWord::empty(4);
        assert_eq!(
            u.compose(&v).unwrap_err(),
            BraidError::StrandMismatch { left: 3, right: 4 }
        );
    }

    #[test]
    fn reduction_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let w = random_word(&mut rng, 5, 30);
            let r = w.reduced();
            assert_eq!(r.reduced(), r);
        }
    }

    #[test]
    fn reduction_confluence_on_random_pairs() {
        // reduce(u·v) must equal reduce(reduce(u)·reduce(v))
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let u = random_word(&mut rng, 4, 12);
            let v = random_word(&mut rng, 4, 12);
            let direct = u.compose(&v).unwrap();
            let staged = u.reduced().compose(&v.reduced()).unwrap();
            assert_eq!(direct, staged);
        }
    }

    #[test]
    fn permutation_basics() {
        assert!(BraidWord::empty(4).permutation().is_identity());
        let s1 = BraidWord::new(2, vec![1]).unwrap();
        assert_eq!(s1.permutation().to_cycles_string(), "(1 2)");
        let s1sq = BraidWord::new(2, vec![1, 1]).unwrap();
        assert!(s1sq.permutation().is_identity());
    }

    #[test]
    fn permutation_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let u = random_word(&mut rng, 5, 10);
            let v = random_word(&mut rng, 5, 10);
            let lhs = u.compose(&v).unwrap().permutation();
            let rhs = u.permutation().compose(&v.permutation());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn exponent_sum_examples() {
        let w = BraidWord::new(3, vec![1, 2, -1]).unwrap();
        assert_eq!(w.exponent_sum(), 1);
        let ww = w.compose(&w).unwrap();
        assert_eq!(ww.exponent_sum(), 2 * w.exponent_sum());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u = random_word(&mut rng, 3, 8);
            let conj = u
                .inverse()
                .compose(&w.compose(&u).unwrap())
                .unwrap();
            assert_eq!(conj.exponent_sum(), w.exponent_sum());
        }
    }

    #[test]
    fn linking_number_examples() {
        let s1sq = BraidWord::new(2, vec![1, 1]).unwrap();
        assert_eq!(s1sq.linking_number(1, 2).unwrap(), Rational64::from(1));
        assert_eq!(
            BraidWord::empty(2).linking_number(1, 2).unwrap(),
            Rational64::from(0)
        );
        let s1 = BraidWord::new(2, vec![1]).unwrap();
        assert_eq!(s1.linking_number(1, 2).unwrap_err(), BraidError::NotPure);
    }

    fn random_pure_word(rng: &mut ChaCha8Rng, strands: usize, factors: usize) -> BraidWord {
        // product of conjugated squares A_{ij}^{±1}, the standard pure
        // braid generators
        let mut w = BraidWord::empty(strands);
        for _ in 0..factors {
            let i = rng.random_range(1..strands);
            let j = rng.random_range(i + 1..=strands);
            let mut letters = Vec::new();
            for k in ((i + 1)..j).rev() {
                letters.push(k as i32);
            }
            letters.push(i as i32);
            letters.push(i as i32);
            for k in (i + 1)..j {
                letters.push(-(k as i32));
            }
            let mut a = BraidWord::new(strands, letters).unwrap();
            if rng.random_bool(0.5) {
                a = a.inverse();
            }
            w = w.compose(&a).unwrap();
        }
        w
    }

    #[test]
    fn pure_generators_are_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let w = random_pure_word(&mut rng, 5, 4);
            assert!(w.is_pure());
        }
    }

    #[test]
    fn linking_adds_under_pure_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let u = random_pure_word(&mut rng, 4, 3);
            let v = random_pure_word(&mut rng, 4, 3);
            let uv = u.compose(&v).unwrap();
            for i in 1..4 {
                for j in (i + 1)..=4 {
                    assert_eq!(
                        uv.linking_number(i, j).unwrap(),
                        u.linking_number(i, j).unwrap() + v.linking_number(i, j).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn linking_invariant_under_pure_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = random_pure_word(&mut rng, 4, 4);
        for _ in 0..100 {
            let u = random_pure_word(&mut rng, 4, 3);
            let conj = u
                .inverse()
                .compose(&w.compose(&u).unwrap())
                .unwrap();
            for i in 1..4 {
                for j in (i + 1)..=4 {
                    assert_eq!(
                        conj.linking_number(i, j).unwrap(),
                        w.linking_number(i, j).unwrap(),
                        "pair ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn delete_strands_examples() {
        let w = BraidWord::new(3, vec![1, 1]).unwrap();
        assert_eq!(w.delete_strands(&[1, 2, 3]), w);
        let kept = w.delete_strands(&[1, 2]);
        assert_eq!(kept, BraidWord::new(2, vec![1, 1]).unwrap());
        let lone = w.delete_strands(&[3]);
        assert_eq!(lone, BraidWord::empty(1));
    }

    #[test]
    fn delete_strands_keep_all_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let w = random_word(&mut rng, 5, 20);
            assert_eq!(w.delete_strands(&[1, 2, 3, 4, 5]), w);
        }
    }

    #[test]
    fn text_format_round_trip() {
        let w = BraidWord::new(3, vec![1, -2]).unwrap();
        assert_eq!(w.to_text(), "3; 1 -2");
        assert_eq!(BraidWord::from_text("3; 1 -2").unwrap(), w);
        assert_eq!(BraidWord::from_text(&w.to_text()).unwrap(), w);
        let e = BraidWord::empty(4);
        assert_eq!(e.to_text(), "4;");
        assert_eq!(BraidWord::from_text("4;").unwrap(), e);
    }

    proptest! {
        #[test]
        fn text_round_trip_random(strands in 2usize..7, raw in proptest::collection::vec(-5i32..=5, 0..20)) {
            let letters: Vec<i32> = raw
                .into_iter()
                .filter(|&l| l != 0 && (l.unsigned_abs() as usize) < strands)
                .collect();
            let w = BraidWord::new(strands, letters).unwrap();
            prop_assert_eq!(BraidWord::from_text(&w.to_text()).unwrap(), w);
        }

        #[test]
        fn reduced_is_no_longer(strands in 2usize..6, raw in proptest::collection::vec(-4i32..=4, 0..30)) {
            let letters: Vec<i32> = raw
                .into_iter()
                .filter(|&l| l != 0 && (l.unsigned_abs() as usize) < strands)
                .collect();
            let w = BraidWord::new(strands, letters).unwrap();
            let r = w.reduced();
            prop_assert!(r.len() <= w.len());
            prop_assert_eq!(r.exponent_sum(), w.exponent_sum());
        }
    }

    #[test]
    fn parse_errors_carry_columns() {
        let e = BraidWord::from_text("3 1 2").unwrap_err();
        assert_eq!(e.column, 6);
        let e = BraidWord::from_text("x; 1").unwrap_err();
        assert_eq!(e.column, 1);
        let e = BraidWord::from_text("3; 1 q").unwrap_err();
        assert_eq!(e.column, 6);
        let e = BraidWord::from_text("3; 1 5").unwrap_err();
        assert_eq!(e.column, 6);
        let e = BraidWord::from_text("3; 0").unwrap_err();
        assert_eq!(e.column, 4);
    }

    #[test]
    fn reducibility_trivial_word() {
        let w = BraidWord::new(3, vec![1, -1]).unwrap();
        let rep = is_probably_reducible(&w, 50);
        assert!(rep.flagged);
        assert_eq!(rep.reason, Some(ReducibilityReason::TrivialWord));
    }

    #[test]
    fn reducibility_confined_crossings() {
        let w = BraidWord::new(4, vec![1, 1, 1, -1, 1]).unwrap();
        let rep = is_probably_reducible(&w, 50);
        assert!(rep.flagged);
        assert_eq!(rep.reason, Some(ReducibilityReason::CrossingsConfined));
        assert_eq!(rep.witness, Some(vec![1, 2]));
    }

    #[test]
    fn reducibility_does_not_flag_pseudo_anosov() {
        let w = BraidWord::new(3, vec![1, -2]).unwrap();
        let rep = is_probably_reducible(&w, DEFAULT_ENTROPY_ITERS);
        assert!(!rep.flagged, "report: {rep:?}");
        assert!(rep.entropy_estimate.unwrap() > 0.9);
    }

    #[test]
    fn reducibility_flags_commutator_of_commuting_generators() {
        // trivial as a braid but not freely reducible; caught by the
        // entropy branch (identity action, zero growth)
        let w = BraidWord::new(4, vec![1, 3, -1, -3]).unwrap();
        let rep = is_probably_reducible(&w, 50);
        assert!(rep.flagged, "report: {rep:?}");
    }
}
