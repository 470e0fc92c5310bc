//! Integer coordinates for multicurves in the punctured disc and the
//! piecewise-linear braid action on them; entropy estimation from
//! coordinate growth.
//!
//! Coordinates are exact integers at all times (growth is exponential for
//! pseudo-Anosov words, so fixed-width arithmetic would overflow).

use super::BraidWord;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Coordinate vector of length 2n-4 for a multicurve in the disc with
/// n >= 3 punctures, laid out as (a_1..a_{n-2}, b_1..b_{n-2}). The two
/// boundary generators update a single (a, b) pair; every other generator
/// updates two adjacent pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynnikovCoords {
    n: usize,
    coords: Vec<BigInt>,
}

impl DynnikovCoords {
    pub fn new(n: usize, coords: Vec<BigInt>) -> Self {
        assert!(n >= 3, "coordinates need at least 3 punctures");
        assert_eq!(coords.len(), 2 * n - 4, "expected 2n-4 coordinates");
        assert!(
            coords.iter().any(|c| !c.is_zero()),
            "coordinate vector must not be identically zero"
        );
        DynnikovCoords { n, coords }
    }

    /// k-th standard basis vector, 0 <= k < 2n-4.
    pub fn unit(n: usize, k: usize) -> Self {
        assert!(n >= 3);
        let mut coords = vec![BigInt::ZERO; 2 * n - 4];
        coords[k] = BigInt::from(1);
        DynnikovCoords { n, coords }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn l1_norm(&self) -> BigInt {
        self.coords.iter().map(|c| c.abs()).sum()
    }

    /// Natural log of the L1 norm, safe for values far beyond f64 range.
    pub fn ln_l1(&self) -> f64 {
        ln_big(&self.l1_norm())
    }

    /// Applies one letter (generator index with sign) in place.
    ///
    /// A negative letter is handled by conjugation: negating the whole
    /// a-block is an involution that swaps each generator with its inverse.
    pub fn step(&mut self, letter: i32) {
        assert!(letter != 0);
        let g = letter.unsigned_abs() as usize;
        assert!(g <= self.n - 1, "generator {g} out of range");
        if letter > 0 {
            self.step_positive(g);
        } else {
            self.negate_a_block();
            self.step_positive(g);
            self.negate_a_block();
        }
    }

    fn negate_a_block(&mut self) {
        for c in &mut self.coords[..self.n - 2] {
            let v = std::mem::take(c);
            *c = -v;
        }
    }

    fn step_positive(&mut self, g: usize) {
        let na = self.n - 2;
        if g == 1 {
            // leftmost pair only
            let a = self.coords[0].clone();
            let b = self.coords[na].clone();
            let (a2, b2) = if b.is_negative() {
                (pos(&a) - &b, a)
            } else {
                ((-&b).max(a.clone()), &a + &b)
            };
            self.coords[0] = a2;
            self.coords[na] = b2;
        } else if g == self.n - 1 {
            // rightmost pair only
            let a = self.coords[na - 1].clone();
            let b = self.coords[2 * na - 1].clone();
            let (a2, b2) = if b.is_negative() {
                ((-&b).min(a.clone()), &a + &b)
            } else {
                (neg(&a) - &b, a)
            };
            self.coords[na - 1] = a2;
            self.coords[2 * na - 1] = b2;
        } else {
            // two adjacent pairs; the b-sum over the window is conserved
            let am = self.coords[g - 2].clone();
            let bm = self.coords[na + g - 2].clone();
            let ag = self.coords[g - 1].clone();
            let bg = self.coords[na + g - 1].clone();
            let nbg = bm.clone().max(&ag - &am + pos(&bm) + pos(&bg));
            let nbm = &bm + &bg - &nbg;
            let nam = am.clone().min(&am - &bm).min(&ag - &bm);
            let nag = ag.clone().max(&ag - &bg).max(&am - &bg);
            self.coords[g - 2] = nam;
            self.coords[na + g - 2] = nbm;
            self.coords[g - 1] = nag;
            self.coords[na + g - 1] = nbg;
        }
    }

    /// Applies a whole word, letters left to right.
    pub fn apply_word(&mut self, w: &BraidWord) {
        assert_eq!(w.strands(), self.n, "strand count mismatch");
        for &l in w.letters() {
            self.step(l);
        }
    }
}

fn pos(x: &BigInt) -> BigInt {
    if x.is_positive() {
        x.clone()
    } else {
        BigInt::ZERO
    }
}

fn neg(x: &BigInt) -> BigInt {
    if x.is_negative() {
        x.clone()
    } else {
        BigInt::ZERO
    }
}

fn ln_big(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "log of non-positive integer");
    let bits = x.bits();
    if bits <= 53 {
        return x.to_string().parse::<f64>().unwrap().ln();
    }
    let shift = bits - 53;
    let top: BigInt = x >> shift;
    let top_f: f64 = top.to_string().parse().unwrap();
    top_f.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exponential growth rate of coordinate norms under repeated application
/// of `w`: least-squares slope of log-norm against iteration count over the
/// last half of `1..=iters`, maximized over the standard basis of starting
/// coordinates. Zero exactly for words that freely reduce to nothing.
pub fn braid_entropy_estimate(w: &BraidWord, iters: usize) -> f64 {
    assert!(w.strands() >= 3, "entropy estimate needs n >= 3");
    assert!(iters >= 10, "entropy estimate needs iters >= 10");
    let r = w.reduced();
    if r.is_empty() {
        return 0.0;
    }
    let dim = 2 * r.strands() - 4;
    let mut best = f64::NEG_INFINITY;
    for k in 0..dim {
        let mut c = DynnikovCoords::unit(r.strands(), k);
        let mut lognorms = Vec::with_capacity(iters);
        for _ in 0..iters {
            c.apply_word(&r);
            lognorms.push(c.ln_l1());
        }
        let lo = iters / 2;
        let slope = lsq_slope(&lognorms[lo..], lo + 1);
        best = best.max(slope);
    }
    best
}

/// Least-squares slope of y against x = first_x, first_x+1, ...
fn lsq_slope(y: &[f64], first_x: usize) -> f64 {
    let m = y.len() as f64;
    assert!(y.len() >= 2);
    let mean_x = first_x as f64 + (m - 1.0) / 2.0;
    let mean_y: f64 = y.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let dx = first_x as f64 + i as f64 - mean_x;
        sxy += dx * (yi - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}
