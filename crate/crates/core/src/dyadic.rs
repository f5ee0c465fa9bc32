//! Dyadic step functions on `[0, 1)`.
//!
//! A [`DyadicStep`] of level `K` is constant on each of the `2^K` intervals
//! `I(K, i) = [(i-1)/2^K, i/2^K)` and stores those constants densely as exact
//! rationals. Functions of different levels are compared, added and paired
//! at their common (finer) level.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, pow2, Rational};

/// Largest supported level; a step function holds at most `2^MAX_LEVEL` cells.
pub const MAX_LEVEL: u32 = 20;

/// The dyadic interval `I(k, j) = [(j-1)/2^k, j/2^k)` with `1 <= j <= 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicIndex {
    k: u32,
    j: u64,
}

impl DyadicIndex {
    pub fn new(k: u32, j: u64) -> Result<Self> {
        if k > 62 || j == 0 || j > (1u64 << k) {
            return Err(Error::BadIndex { k, j });
        }
        Ok(Self { k, j })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn j(&self) -> u64 {
        self.j
    }

    /// Lebesgue measure `2^-k`.
    pub fn measure(&self) -> Rational {
        pow2(-(self.k as i64))
    }

    /// Whether `self` is contained in `other` (as sets).
    pub fn is_within(&self, other: &DyadicIndex) -> bool {
        self.k >= other.k && (self.j - 1) >> (self.k - other.k) == other.j - 1
    }

    /// Dyadic intervals are nested or disjoint.
    pub fn overlaps(&self, other: &DyadicIndex) -> bool {
        self.is_within(other) || other.is_within(self)
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I({},{})", self.k, self.j)
    }
}

/// A step function constant on the level-`K` dyadic cells.
#[derive(Debug, Clone)]
pub struct DyadicStep {
    level: u32,
    values: Vec<Rational>,
}

/// `|f|`, `f+` and `f-` of a step function.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub abs: DyadicStep,
    pub pos: DyadicStep,
    pub neg: DyadicStep,
}

/// `‖f‖₁` and `‖f‖∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Norms {
    pub l1: Rational,
    pub linf: Rational,
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        Err(Error::LevelOverflow { requested: level })
    } else {
        Ok(())
    }
}

impl DyadicStep {
    pub fn new(level: u32, values: Vec<Rational>) -> Result<Self> {
        check_level(level)?;
        let expected = 1usize << level;
        if values.len() != expected {
            return Err(Error::LengthMismatch { level, expected, got: values.len() });
        }
        Ok(Self { level, values })
    }

    /// Convenience constructor from integer cell values.
    pub fn from_ints(level: u32, values: &[i64]) -> Result<Self> {
        Self::new(level, values.iter().map(|&v| rational::int(v)).collect())
    }

    pub fn constant(c: Rational) -> Self {
        Self { level: 0, values: vec![c] }
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    /// `scale · 1_I` for a dyadic interval `I`.
    pub fn indicator(idx: DyadicIndex, scale: Rational) -> Result<Self> {
        check_level(idx.k)?;
        let mut values = vec![Rational::zero(); 1usize << idx.k];
        values[(idx.j - 1) as usize] = scale;
        Ok(Self { level: idx.k, values })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.values
    }

    /// Number of cells, `2^level`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    /// Value on cell `i` (0-based) of the finer level `at`, `at >= level`.
    fn value_at(&self, at: u32, i: usize) -> &Rational {
        &self.values[i >> (at - self.level)]
    }

    /// Same function, stored at level `target >= level`.
    pub fn refine(&self, target: u32) -> Result<Self> {
        if target < self.level {
            return Err(Error::Precondition(format!(
                "cannot refine level {} to coarser level {target}",
                self.level
            )));
        }
        check_level(target)?;
        let shift = target - self.level;
        let values = (0..1usize << target).map(|i| self.values[i >> shift].clone()).collect();
        Ok(Self { level: target, values })
    }

    /// Pointwise `a·f + b·g` at the common level.
    pub fn lin_comb(a: &Rational, f: &DyadicStep, b: &Rational, g: &DyadicStep) -> Self {
        let level = f.level.max(g.level);
        let values = (0..1usize << level)
            .map(|i| a * f.value_at(level, i) + b * g.value_at(level, i))
            .collect();
        Self { level, values }
    }

    pub fn map(&self, op: impl Fn(&Rational) -> Rational) -> Self {
        Self { level: self.level, values: self.values.iter().map(op).collect() }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn decompose(&self) -> Decomposition {
        let zero = Rational::zero();
        Decomposition {
            abs: self.abs(),
            pos: self.map(|v| if v.is_positive() { v.clone() } else { zero.clone() }),
            neg: self.map(|v| if v.is_negative() { -v } else { zero.clone() }),
        }
    }

    /// `∫_{I(k,j)} f dλ`, exact, for any `k`.
    pub fn integral_over(&self, idx: &DyadicIndex) -> Rational {
        if idx.k >= self.level {
            let cell = ((idx.j - 1) >> (idx.k - self.level)) as usize;
            &self.values[cell] * idx.measure()
        } else {
            let width = 1usize << (self.level - idx.k);
            let start = (idx.j - 1) as usize * width;
            let sum: Rational = self.values[start..start + width].iter().sum();
            sum * pow2(-(self.level as i64))
        }
    }

    /// `∫_{[0,1]} f dλ`.
    pub fn integral(&self) -> Rational {
        let sum: Rational = self.values.iter().sum();
        sum * pow2(-(self.level as i64))
    }

    /// Integrals of `f` over every `I(k, j)`, `j = 1..=2^k`, for `k <= level`.
    pub fn cell_integrals(&self, k: u32) -> Vec<Rational> {
        assert!(k <= self.level, "cell_integrals needs k <= level");
        let width = 1usize << (self.level - k);
        let cell = pow2(-(self.level as i64));
        self.values
            .chunks(width)
            .map(|chunk| chunk.iter().sum::<Rational>() * &cell)
            .collect()
    }

    pub fn norms(&self) -> Norms {
        Norms { l1: self.l1(), linf: self.linf() }
    }

    pub fn l1(&self) -> Rational {
        let sum: Rational = self.values.iter().map(|v| v.abs()).sum();
        sum * pow2(-(self.level as i64))
    }

    pub fn linf(&self) -> Rational {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// `⟨f, h⟩ = ∫ f h dλ`.
    pub fn pairing(&self, h: &DyadicStep) -> Rational {
        let level = self.level.max(h.level);
        let sum: Rational = (0..1usize << level)
            .map(|i| self.value_at(level, i) * h.value_at(level, i))
            .sum();
        sum * pow2(-(level as i64))
    }

    /// Conditional expectation onto the level-`k` dyadic algebra: cell
    /// averages at level `k`, or a plain refinement when `k >= level`.
    pub fn dyadic_project(&self, k: u32) -> Result<Self> {
        if k >= self.level {
            return self.refine(k);
        }
        let avg = pow2(-((self.level - k) as i64));
        let values = self
            .values
            .chunks(1usize << (self.level - k))
            .map(|chunk| chunk.iter().sum::<Rational>() * &avg)
            .collect();
        Ok(Self { level: k, values })
    }

    /// `t ↦ f(1 - t)`, up to the null set of cell endpoints.
    pub fn reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { level: self.level, values }
    }

    /// The same function at the smallest level that represents it.
    pub fn coarsen(&self) -> Self {
        let mut out = self.clone();
        while out.level > 0 && out.values.chunks(2).all(|p| p[0] == p[1]) {
            out.values = out.values.chunks(2).map(|p| p[0].clone()).collect();
            out.level -= 1;
        }
        out
    }
}

impl PartialEq for DyadicStep {
    fn eq(&self, other: &Self) -> bool {
        let level = self.level.max(other.level);
        (0..1usize << level).all(|i| self.value_at(level, i) == other.value_at(level, i))
    }
}

impl Eq for DyadicStep {}

impl fmt::Display for DyadicStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step({};", self.level)?;
        for (i, v) in self.values.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{v}")?;
        }
        write!(f, ")")
    }
}

impl Add for &DyadicStep {
    type Output = DyadicStep;
    fn add(self, rhs: &DyadicStep) -> DyadicStep {
        let one = rational::int(1);
        DyadicStep::lin_comb(&one, self, &one, rhs)
    }
}

impl Sub for &DyadicStep {
    type Output = DyadicStep;
    fn sub(self, rhs: &DyadicStep) -> DyadicStep {
        DyadicStep::lin_comb(&rational::int(1), self, &rational::int(-1), rhs)
    }
}

impl Neg for &DyadicStep {
    type Output = DyadicStep;
    fn neg(self) -> DyadicStep {
        self.map(|v| -v)
    }
}

impl Mul<&DyadicStep> for &Rational {
    type Output = DyadicStep;
    fn mul(self, rhs: &DyadicStep) -> DyadicStep {
        rhs.scale(self)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexJson {
    k: u32,
    j: u64,
}

impl Serialize for DyadicIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IndexJson { k: self.k, j: self.j }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = IndexJson::deserialize(d)?;
        DyadicIndex::new(raw.k, raw.j).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct StepJson {
    level: u32,
    #[serde(with = "rational::serde_q_vec")]
    values: Vec<Rational>,
}

impl Serialize for DyadicStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepJson { level: self.level, values: self.values.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StepJson::deserialize(d)?;
        DyadicStep::new(raw.level, raw.values).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::testutil::arb_step;
    use proptest::prelude::*;

    fn step(level: u32, v: &[i64]) -> DyadicStep {
        DyadicStep::from_ints(level, v).unwrap()
    }

    fn idx(k: u32, j: u64) -> DyadicIndex {
        DyadicIndex::new(k, j).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            DyadicStep::from_ints(1, &[1, 2, 3]),
            Err(Error::LengthMismatch { level: 1, expected: 2, got: 3 })
        ));
        assert!(matches!(
            DyadicStep::new(21, vec![]),
            Err(Error::LevelOverflow { requested: 21 })
        ));
        assert!(DyadicIndex::new(2, 5).is_err());
        assert!(DyadicIndex::new(2, 0).is_err());
    }

    #[test]
    fn refine_examples() {
        assert_eq!(step(0, &[1]).refine(1).unwrap().values(), step(1, &[1, 1]).values());
        assert_eq!(
            step(1, &[2, 0]).refine(2).unwrap().values(),
            step(2, &[2, 2, 0, 0]).values()
        );
        let f = step(2, &[1, -2, 3, 0]);
        assert_eq!(f.refine(2).unwrap().values(), f.values());
        assert!(matches!(f.refine(21), Err(Error::LevelOverflow { .. })));
        assert!(f.refine(1).is_err());
    }

    #[test]
    fn lin_comb_examples() {
        let one = int(1);
        assert_eq!(
            DyadicStep::lin_comb(&one, &step(1, &[1, 0]), &one, &step(1, &[0, 1])),
            step(1, &[1, 1])
        );
        let r = DyadicStep::lin_comb(&int(2), &step(0, &[1]), &int(-1), &step(1, &[1, 3]));
        assert_eq!(r.level(), 1);
        assert_eq!(r.values(), step(1, &[1, -1]).values());
        let z = DyadicStep::lin_comb(&int(0), &step(1, &[4, 5]), &int(0), &step(2, &[1, 2, 3, 4]));
        assert!(z.is_zero());
    }

    #[test]
    fn decompose_examples() {
        let d = step(1, &[2, -3]).decompose();
        assert_eq!(d.abs.values(), step(1, &[2, 3]).values());
        assert_eq!(d.pos.values(), step(1, &[2, 0]).values());
        assert_eq!(d.neg.values(), step(1, &[0, 3]).values());
        let f = step(2, &[1, 0, 5, 2]);
        let d = f.decompose();
        assert_eq!(d.pos, f);
        assert!(d.neg.is_zero());
        let d = DyadicStep::zero().decompose();
        assert!(d.abs.is_zero() && d.pos.is_zero() && d.neg.is_zero());
    }

    #[test]
    fn integral_over_examples() {
        assert_eq!(step(1, &[2, 0]).integral_over(&idx(0, 1)), int(1));
        assert_eq!(step(2, &[4, 0, 0, 0]).integral_over(&idx(1, 1)), int(1));
        assert_eq!(step(0, &[1]).integral_over(&idx(3, 5)), rat(1, 8));
    }

    #[test]
    fn norms_examples() {
        assert_eq!(step(1, &[2, 0]).norms(), Norms { l1: int(1), linf: int(2) });
        assert_eq!(step(1, &[1, -1]).norms(), Norms { l1: int(1), linf: int(1) });
        assert_eq!(DyadicStep::zero().norms(), Norms { l1: int(0), linf: int(0) });
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(step(1, &[1, -1]).pairing(&step(1, &[1, 1])), int(0));
        assert_eq!(step(0, &[2]).pairing(&step(1, &[1, 0])), int(1));
        let f = step(3, &[1, 2, -3, 4, 0, 7, -1, 1]);
        assert_eq!(f.pairing(&step(0, &[1])), f.integral_over(&idx(0, 1)));
    }

    #[test]
    fn project_examples() {
        assert_eq!(
            step(2, &[4, 0, 0, 0]).dyadic_project(1).unwrap().values(),
            step(1, &[2, 0]).values()
        );
        let f = step(2, &[1, 5, -2, 3]);
        assert_eq!(f.dyadic_project(2).unwrap().values(), f.values());
        assert_eq!(step(1, &[1, -1]).dyadic_project(0).unwrap().values(), step(0, &[0]).values());
    }

    #[test]
    fn reflect_examples() {
        let f = DyadicStep::new(1, vec![rat(1, 3), int(-7)]).unwrap();
        assert_eq!(f.reflect().values(), &[int(-7), rat(1, 3)]);
        assert_eq!(f.reflect().reflect(), f);
    }

    #[test]
    fn equality_across_levels() {
        assert_eq!(step(0, &[3]), step(2, &[3, 3, 3, 3]));
        assert_ne!(step(1, &[3, 2]), step(2, &[3, 3, 3, 3]));
        assert_eq!(step(2, &[1, 1, 2, 2]).coarsen().level(), 1);
    }

    #[test]
    fn index_containment() {
        assert!(idx(3, 5).is_within(&idx(1, 2)));
        assert!(!idx(3, 4).is_within(&idx(1, 2)));
        assert!(idx(1, 2).overlaps(&idx(3, 5)));
        assert!(!idx(2, 1).overlaps(&idx(2, 2)));
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let f = DyadicStep::new(1, vec![rat(1, 2), rat(-3, 1)]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"level":1,"values":["1/2","-3/1"]}"#);
        let back: DyadicStep = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<DyadicStep>(r#"{"level":1,"values":["1"]}"#).is_err());
        assert!(serde_json::from_str::<DyadicStep>(r#"{"level":0,"values":["1/0"]}"#).is_err());
    }

    proptest! {
        #[test]
        fn refinement_preserves_integrals(f in arb_step(), extra in 0u32..3, k in 0u32..7, seed in any::<u64>()) {
            let g = f.refine(f.level() + extra).unwrap();
            let j = seed % (1u64 << k) + 1;
            let i = idx(k, j);
            prop_assert_eq!(g.integral_over(&i), f.integral_over(&i));
        }

        #[test]
        fn integrals_are_additive_over_children(f in arb_step(), k in 0u32..4, gap in 1u32..3, seed in any::<u64>()) {
            let m = k + gap;
            let j = seed % (1u64 << k) + 1;
            let lo = (j - 1) * (1u64 << (m - k)) + 1;
            let hi = j * (1u64 << (m - k));
            let children: Rational = (lo..=hi).map(|i| f.integral_over(&idx(m, i))).sum();
            prop_assert_eq!(children, f.integral_over(&idx(k, j)));
        }

        #[test]
        fn pairing_is_bilinear_and_holder(f in arb_step(), g in arb_step(), h in arb_step(), a in -5i64..5) {
            let a = int(a);
            let lhs = DyadicStep::lin_comb(&a, &f, &int(1), &g).pairing(&h);
            prop_assert_eq!(lhs, &a * f.pairing(&h) + g.pairing(&h));
            prop_assert!(f.pairing(&h).abs() <= f.l1() * h.linf());
        }

        #[test]
        fn projection_is_idempotent_and_contracts_l1(f in arb_step(), k in 0u32..5) {
            let p = f.dyadic_project(k).unwrap();
            prop_assert_eq!(p.dyadic_project(k).unwrap(), p.clone());
            prop_assert!(p.l1() <= f.l1());
            for kk in 0..=k.min(f.level()) {
                for j in 1..=(1u64 << kk) {
                    prop_assert_eq!(p.integral_over(&idx(kk, j)), f.integral_over(&idx(kk, j)));
                }
            }
        }

        #[test]
        fn decomposition_is_consistent(f in arb_step()) {
            let d = f.decompose();
            prop_assert_eq!(&d.pos - &d.neg, f.clone());
            prop_assert_eq!(&d.pos + &d.neg, d.abs.clone());
            for (p, n) in d.pos.values().iter().zip(d.neg.values()) {
                prop_assert!((p * n).is_zero());
            }
        }
    }
}
