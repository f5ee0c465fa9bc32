//! Seeded random inputs. A `u64` seed fully determines every sequence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{DyadicIndex, DyadicStep};
use crate::rational::{int, rat, Rational};
use crate::witness::near_unit_scale;

pub type Gen = ChaCha8Rng;

pub fn rng(seed: u64) -> Gen {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for trial `i` of a run seeded with `seed`, so that
/// parallel trials do not depend on scheduling.
pub fn trial_rng(seed: u64, i: u64) -> Gen {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i);
    r
}

/// `n/d` with `1 ≤ d ≤ max_den` and `|n/d| ≤ bound`.
pub fn rational(g: &mut Gen, max_den: i64, bound: i64) -> Rational {
    let d = g.random_range(1..=max_den);
    let n = g.random_range(-bound * d..=bound * d);
    rat(n, d)
}

pub fn step(g: &mut Gen, max_level: u32, max_den: i64) -> DyadicStep {
    let level = g.random_range(0..=max_level);
    let values = (0..1usize << level).map(|_| rational(g, max_den, 2)).collect();
    DyadicStep::new(level, values).expect("level within range")
}

pub fn nonzero_step(g: &mut Gen, max_level: u32, max_den: i64) -> DyadicStep {
    loop {
        let f = step(g, max_level, max_den);
        if !f.is_zero() {
            return f;
        }
    }
}

/// A step function that differs from its reflection.
pub fn asymmetric_step(g: &mut Gen, max_level: u32, max_den: i64) -> DyadicStep {
    loop {
        let f = step(g, max_level.max(1), max_den);
        if f != f.reflect() {
            return f;
        }
    }
}

/// A functional with sup-norm at most 1.
pub fn functional(g: &mut Gen, max_level: u32, max_den: i64) -> DyadicStep {
    let level = g.random_range(0..=max_level);
    let values = (0..1usize << level).map(|_| rational(g, max_den, 1)).collect();
    DyadicStep::new(level, values).expect("level within range")
}

/// `r·f` with `⦀r f⦀² ∈ [1 − 4·prec, 1]`.
pub fn near_unit(g: &mut Gen, max_level: u32, max_den: i64, prec: &Rational) -> DyadicStep {
    let f = nonzero_step(g, max_level, max_den);
    near_unit_scale(&f, prec).expect("nonzero input")
}

/// A random set of pairwise disjoint dyadic intervals of level at most
/// `max_level`, obtained by splitting `[0,1)` at random and keeping each
/// piece with probability 1/2.
pub fn disjoint_sets(g: &mut Gen, max_level: u32) -> Vec<DyadicIndex> {
    let mut out = Vec::new();
    let mut stack = vec![DyadicIndex::new(0, 1).expect("root")];
    while let Some(i) = stack.pop() {
        if i.k() < max_level && g.random_bool(0.5) {
            let (k, j) = (i.k() + 1, 2 * i.j());
            stack.push(DyadicIndex::new(k, j - 1).expect("child"));
            stack.push(DyadicIndex::new(k, j).expect("child"));
        } else if g.random_bool(0.5) {
            out.push(i);
        }
    }
    out.shuffle(g);
    out
}

/// `m` non-increasing deltas drawn from `[lo, 1)` on the grid `1/64`.
pub fn deltas(g: &mut Gen, m: usize, lo: &Rational) -> Vec<Rational> {
    let start = (lo * int(64)).ceil().to_integer();
    let start: i64 = start.try_into().expect("small grid");
    let mut out: Vec<Rational> = (0..m).map(|_| rat(g.random_range(start.max(1)..64), 64)).collect();
    out.sort_by(|a, b| b.cmp(a));
    out
}

pub fn coefficients(g: &mut Gen, m: usize, max_den: i64) -> Vec<Rational> {
    (0..m).map(|_| rational(g, max_den, 4)).collect()
}
