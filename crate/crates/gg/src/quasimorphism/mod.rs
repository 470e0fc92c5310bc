//! Word functionals on braid groups: signed crossing counts, pairwise
//! linking, and the signature of the closure link, together with power
//! homogenization and empirical defect estimation.
//!
//! The three functionals share one interface: exact rational evaluation
//! on a [`BraidWord`]. Exponent sum and pairwise linking are homomorphisms
//! (zero defect); the closure signature is not, but its defect is bounded,
//! which is what makes its homogenization well defined.

mod goeritz;

pub use goeritz::{closure_diagram, signature_of_closure, GoeritzData};

use crate::braid::{BraidError, BraidWord};
use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Default powers used for homogenization; the estimate extrapolates from
/// the last two entries.
pub const DEFAULT_POWER_SCHEDULE: [u32; 3] = [8, 16, 32];

#[derive(Debug, Error, PartialEq)]
pub enum QuasimorphismError {
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error("unknown quasimorphism {0:?}; expected exponent_sum, linking:i,j, or signature")]
    UnknownName(String),
    #[error("linking strands must satisfy 1 <= i < j, got {i} and {j}")]
    BadLinkingPair { i: usize, j: usize },
    #[error("power schedule needs at least two entries, got {0}")]
    ScheduleTooShort(usize),
}

/// Selects one of the supported word functionals.
///
/// Parses from and displays as `exponent_sum`, `linking:i,j`, or
/// `signature`, which is also the serialized form used in config files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum QuasimorphismSpec {
    /// Sum of letter signs. A homomorphism to the integers.
    ExponentSum,
    /// Linking number of strands `i < j`. Defined on pure words only,
    /// where it is a homomorphism.
    Linking { i: usize, j: usize },
    /// Signature of the closure link. Not a homomorphism; its defect is
    /// bounded, so powers grow linearly up to a bounded error.
    Signature,
}

impl QuasimorphismSpec {
    /// Exact value of the functional on `w`.
    pub fn evaluate(&self, w: &BraidWord) -> Result<Rational64, QuasimorphismError> {
        match self {
            QuasimorphismSpec::ExponentSum => Ok(Rational64::from_integer(w.exponent_sum())),
            QuasimorphismSpec::Linking { i, j } => Ok(w.linking_number(*i, *j)?),
            QuasimorphismSpec::Signature => {
                Ok(Rational64::from_integer(signature_of_closure(w)))
            }
        }
    }

    /// Same as [`evaluate`](Self::evaluate), converted to `f64`.
    pub fn evaluate_f64(&self, w: &BraidWord) -> Result<f64, QuasimorphismError> {
        let v = self.evaluate(w)?;
        Ok(*v.numer() as f64 / *v.denom() as f64)
    }

    /// True when the functional is additive on composition, so that its
    /// defect vanishes identically and homogenization is the identity.
    pub fn is_homomorphism(&self) -> bool {
        !matches!(self, QuasimorphismSpec::Signature)
    }
}

impl fmt::Display for QuasimorphismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuasimorphismSpec::ExponentSum => write!(f, "exponent_sum"),
            QuasimorphismSpec::Linking { i, j } => write!(f, "linking:{i},{j}"),
            QuasimorphismSpec::Signature => write!(f, "signature"),
        }
    }
}

impl FromStr for QuasimorphismSpec {
    type Err = QuasimorphismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exponent_sum" => return Ok(QuasimorphismSpec::ExponentSum),
            "signature" => return Ok(QuasimorphismSpec::Signature),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("linking:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if let [a, b] = parts[..] {
                let i = a.trim().parse::<usize>();
                let j = b.trim().parse::<usize>();
                if let (Ok(i), Ok(j)) = (i, j) {
                    if i >= 1 && i < j {
                        return Ok(QuasimorphismSpec::Linking { i, j });
                    }
                    return Err(QuasimorphismError::BadLinkingPair { i, j });
                }
            }
        }
        Err(QuasimorphismError::UnknownName(s.to_string()))
    }
}

impl TryFrom<String> for QuasimorphismSpec {
    type Error = QuasimorphismError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<QuasimorphismSpec> for String {
    fn from(spec: QuasimorphismSpec) -> String {
        spec.to_string()
    }
}

/// Raw power sequence and extrapolated limit from a homogenization run.
#[derive(Debug, Clone, Serialize)]
pub struct HomogenizationReport {
    /// Powers the word was raised to.
    pub powers: Vec<u32>,
    /// `q(w^p) / p` for each power, in schedule order.
    pub raw: Vec<f64>,
    /// Difference quotient of `q(w^p)` over the last two powers. Exact
    /// when `q(w^p)` is affine in `p`, which holds for homomorphisms and
    /// up to bounded error in general.
    pub value: f64,
}

/// Estimates `lim q(w^p) / p` by evaluating on freely reduced powers over
/// `schedule` and extrapolating from the last two points.
///
/// The extrapolation `(q(w^b) - q(w^a)) / (b - a)` cancels any constant
/// offset in `q(w^p)`, so the `O(1/p)` bias of the raw quotients drops to
/// the defect-sized wobble of the increments.
pub fn homogenize(
    spec: &QuasimorphismSpec,
    w: &BraidWord,
    schedule: &[u32],
) -> Result<HomogenizationReport, QuasimorphismError> {
    if schedule.len() < 2 {
        return Err(QuasimorphismError::ScheduleTooShort(schedule.len()));
    }
    let mut powers = Vec::with_capacity(schedule.len());
    let mut values = Vec::with_capacity(schedule.len());
    let mut raw = Vec::with_capacity(schedule.len());
    for &p in schedule {
        assert!(p >= 1, "powers must be positive");
        let wp = w.power(p as i64).reduced();
        let q = spec.evaluate(&wp)?;
        let qf = *q.numer() as f64 / *q.denom() as f64;
        powers.push(p);
        values.push(qf);
        raw.push(qf / p as f64);
    }
    let k = schedule.len();
    let (pa, pb) = (powers[k - 2] as f64, powers[k - 1] as f64);
    let value = (values[k - 1] - values[k - 2]) / (pb - pa);
    Ok(HomogenizationReport { powers, raw, value })
}

/// Largest observed additivity violation `|q(uv) - q(u) - q(v)|` over
/// `trials` sampled word pairs. A lower bound for the true defect; exact
/// (zero) for homomorphisms.
///
/// Pairs are drawn by `sample`, which must produce words on a common
/// strand count (and pure words when the functional needs them).
pub fn empirical_defect<F>(
    spec: &QuasimorphismSpec,
    trials: usize,
    mut sample: F,
) -> Result<f64, QuasimorphismError>
where
    F: FnMut() -> (BraidWord, BraidWord),
{
    let mut worst = 0f64;
    for _ in 0..trials {
        let (u, v) = sample();
        let uv = u.compose(&v).expect("sampled pair on mismatched strand counts");
        let q_uv = spec.evaluate_f64(&uv)?;
        let q_u = spec.evaluate_f64(&u)?;
        let q_v = spec.evaluate_f64(&v)?;
        worst = worst.max((q_uv - q_u - q_v).abs());
    }
    Ok(worst)
}

/// Uniform random word: `len` letters drawn from the nonzero generators
/// of the braid group on `strands` strands.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, strands: usize, len: usize) -> BraidWord {
    assert!(strands >= 2, "need at least two strands");
    let letters: Vec<i32> = (0..len)
        .map(|_| {
            let g = rng.random_range(1..strands) as i32;
            if rng.random_bool(0.5) {
                g
            } else {
                -g
            }
        })
        .collect();
    BraidWord::new(strands, letters).expect("generated letters are in range")
}

/// Random pure word assembled from `blocks` conjugated generator squares
/// `u sigma_g^{2} u^{-1}`, each of which fixes every strand position.
pub fn random_pure_word<R: Rng + ?Sized>(
    rng: &mut R,
    strands: usize,
    blocks: usize,
) -> BraidWord {
    assert!(strands >= 2, "need at least two strands");
    let mut w = BraidWord::empty(strands);
    for _ in 0..blocks {
        let conj_len = rng.random_range(0..=3);
        let u = random_word(rng, strands, conj_len);
        let g = rng.random_range(1..strands) as i32;
        let sign = if rng.random_bool(0.5) { 1 } else { -1 };
        let core = BraidWord::new(strands, vec![sign * g, sign * g]).unwrap();
        let block = u.compose(&core).unwrap().compose(&u.inverse()).unwrap();
        w = w.compose(&block).unwrap();
    }
    let w = w.reduced();
    debug_assert!(w.is_pure());
    w
}
