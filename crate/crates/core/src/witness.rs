//! Diameter-2 witnesses for `(L₁[0,1], ⦀·⦀)`.
//!
//! Given a center `f` in the unit ball and a weak neighborhood
//! `V = {g : |⟨g − f, h_l⟩| < δ}`, [`d2p_witness`] builds `g₁, g₂ ∈ V ∩ B`
//! with `⦀g₁ − g₂⦀ > 2 − ε`:
//!
//! 1. pick `γ = 2^{-p}` with `(5‖f‖∞ + 1)γ < δ` and `2(1−γ)^{3/2} > 2 − ε`;
//! 2. pick the level `K` with `2^{-K} < γ`, fine enough that every `h_l` is
//!    constant on the level-`K` cells;
//! 3. split the positive and negative mass of `f` on each level-`K` cell into
//!    two disjoint level-`(K+2)` spikes per function ([`split_pair`]);
//! 4. shrink: `g_i = (1 − γ) f_i`.
//!
//! Every identity the construction depends on is re-checked exactly and
//! recorded in the report.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize};

use crate::dyadic::{DyadicIndex, DyadicStep, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::rational::{self, int, pow2, Rational};
use crate::renorm::tnorm_sq;

/// `V = {g : |⟨g − f, h_l⟩| < δ for every l}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakNbhd {
    center: DyadicStep,
    functionals: Vec<DyadicStep>,
    #[serde(with = "rational::serde_q")]
    delta: Rational,
}

impl WeakNbhd {
    pub fn new(center: DyadicStep, functionals: Vec<DyadicStep>, delta: Rational) -> Result<Self> {
        if !delta.is_positive() {
            return Err(Error::Precondition("delta must be positive".into()));
        }
        for (index, h) in functionals.iter().enumerate() {
            let linf = h.linf();
            if linf > Rational::one() {
                return Err(Error::FunctionalTooLarge { index: index + 1, linf: rational::format(&linf) });
            }
        }
        Ok(Self { center, functionals, delta })
    }

    pub fn center(&self) -> &DyadicStep {
        &self.center
    }

    pub fn functionals(&self) -> &[DyadicStep] {
        &self.functionals
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    /// Largest `|⟨g − f, h_l⟩|` over the functionals (0 when there are none).
    pub fn max_deviation(&self, g: &DyadicStep) -> Rational {
        let diff = g - &self.center;
        self.functionals
            .iter()
            .map(|h| diff.pairing(h).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, g: &DyadicStep) -> bool {
        self.max_deviation(g) < self.delta
    }

    pub fn with_delta(&self, delta: Rational) -> Result<Self> {
        Self::new(self.center.clone(), self.functionals.clone(), delta)
    }
}

#[derive(Deserialize)]
struct NbhdJson {
    center: DyadicStep,
    #[serde(default)]
    functionals: Vec<DyadicStep>,
    #[serde(with = "rational::serde_q")]
    delta: Rational,
}

impl<'de> Deserialize<'de> for WeakNbhd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = NbhdJson::deserialize(d)?;
        WeakNbhd::new(raw.center, raw.functionals, raw.delta).map_err(serde::de::Error::custom)
    }
}

/// The two level-`(K+2)` functions that share every level-`≤K` cell
/// integral (signed and absolute) with `f` while being disjointly supported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPair {
    #[serde(rename = "K")]
    pub k: u32,
    #[serde(with = "rational::serde_q_vec")]
    pub b: Vec<Rational>,
    #[serde(with = "rational::serde_q_vec")]
    pub c: Vec<Rational>,
    pub f1: DyadicStep,
    pub f2: DyadicStep,
}

/// One exact comparison `lhs ~ rhs`, recorded with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    #[serde(with = "rational::serde_q")]
    pub lhs: Rational,
    #[serde(with = "rational::serde_q")]
    pub rhs: Rational,
    pub ok: bool,
}

impl Check {
    pub fn eq(lhs: Rational, rhs: Rational) -> Self {
        let ok = lhs == rhs;
        Self { lhs, rhs, ok }
    }

    pub fn le(lhs: Rational, rhs: Rational) -> Self {
        let ok = lhs <= rhs;
        Self { lhs, rhs, ok }
    }

    pub fn lt(lhs: Rational, rhs: Rational) -> Self {
        let ok = lhs < rhs;
        Self { lhs, rhs, ok }
    }

    pub fn ge(lhs: Rational, rhs: Rational) -> Self {
        let ok = lhs >= rhs;
        Self { lhs, rhs, ok }
    }
}

pub type Checks = BTreeMap<String, Check>;

pub fn failed(checks: &Checks) -> Vec<&str> {
    checks.iter().filter(|(_, c)| !c.ok).map(|(n, _)| n.as_str()).collect()
}

/// `(2 − ε)²`, or `None` when `ε > 2` makes `⦀·⦀ > 2 − ε` vacuous.
fn gap_target_sq(eps: &Rational) -> Option<Rational> {
    let two = int(2);
    if eps > &two {
        None
    } else {
        let d = two - eps;
        Some(&d * &d)
    }
}

/// Whether `√norm_sq > 2 − ε`.
pub fn exceeds_gap(norm_sq: &Rational, eps: &Rational) -> bool {
    gap_target_sq(eps).is_none_or(|t| norm_sq > &t)
}

/// Largest `γ = 2^{-p}`, `p ≥ 1`, with `(5‖f‖∞ + 1)γ < δ` and
/// `4(1−γ)³ > (2−ε)²` (the latter vacuous for `ε ≥ 2`).
pub fn choose_gamma(f_inf: &Rational, delta: &Rational, eps: &Rational) -> Result<Rational> {
    if !delta.is_positive() || !eps.is_positive() {
        return Err(Error::Precondition("delta and eps must be positive".into()));
    }
    if f_inf.is_negative() {
        return Err(Error::Precondition("sup-norm cannot be negative".into()));
    }
    let weight = int(5) * f_inf + int(1);
    let target = if eps >= &int(2) { None } else { gap_target_sq(eps) };
    let mut gamma = rational::rat(1, 2);
    loop {
        let one_minus = int(1) - &gamma;
        let first = &weight * &gamma < *delta;
        let second = target.as_ref().is_none_or(|t| int(4) * &one_minus * &one_minus * &one_minus > *t);
        if first && second {
            return Ok(gamma);
        }
        gamma /= int(2);
    }
}

/// Smallest `K ≥ max(levels)` with `2^{-K} < γ`.
pub fn choose_k(gamma: &Rational, functional_levels: &[u32]) -> Result<u32> {
    if !gamma.is_positive() || gamma >= &Rational::one() {
        return Err(Error::Precondition("gamma must lie in (0, 1)".into()));
    }
    let mut k = functional_levels.iter().copied().max().unwrap_or(0);
    while pow2(-(k as i64)) >= *gamma {
        k += 1;
    }
    if k + 2 > MAX_LEVEL {
        return Err(Error::LevelOverflow { requested: k + 2 });
    }
    Ok(k)
}

/// `b_j = ∫_{I(K,j)} f⁺`, `c_j = ∫_{I(K,j)} f⁻`;
/// `f₁ = 2^{K+2} Σ_j (b_j 1_{I(K+2,4j−3)} − c_j 1_{I(K+2,4j−2)})`,
/// `f₂` the same on positions `4j−1, 4j`.
pub fn split_pair(f: &DyadicStep, k: u32) -> Result<SplitPair> {
    let fine = k + 2;
    if fine > MAX_LEVEL {
        return Err(Error::LevelOverflow { requested: fine });
    }
    let parts = f.decompose();
    let cells = 1u64 << k;
    let index = |j| DyadicIndex::new(k, j).expect("index within level");
    let b: Vec<Rational> = (1..=cells).map(|j| parts.pos.integral_over(&index(j))).collect();
    let c: Vec<Rational> = (1..=cells).map(|j| parts.neg.integral_over(&index(j))).collect();
    let height = pow2(fine as i64);
    let mut v1 = vec![Rational::zero(); 1usize << fine];
    let mut v2 = v1.clone();
    for (j, (bj, cj)) in b.iter().zip(&c).enumerate() {
        v1[4 * j] = &height * bj;
        v1[4 * j + 1] = -(&height * cj);
        v2[4 * j + 2] = &height * bj;
        v2[4 * j + 3] = -(&height * cj);
    }
    Ok(SplitPair {
        k,
        b,
        c,
        f1: DyadicStep::new(fine, v1)?,
        f2: DyadicStep::new(fine, v2)?,
    })
}

impl SplitPair {
    /// Cell-integral identities on every `I(k, j)`, `k ≤ K`:
    /// `∫f₁ = ∫f₂ = ∫f`, `∫|f₁| = ∫|f₂| = ∫|f|`, `∫|f₁ − f₂| = 2∫|f|`,
    /// plus `‖f_i‖∞ ≤ 4‖f‖∞`. The identity checks carry the total absolute
    /// discrepancy as `lhs` against 0.
    pub fn identity_checks(&self, f: &DyadicStep) -> Checks {
        let abs_f = f.abs();
        let (a1, a2) = (self.f1.abs(), self.f2.abs());
        let spread = (&self.f1 - &self.f2).abs();
        let mut d5 = Rational::zero();
        let mut d6 = Rational::zero();
        let mut d7 = Rational::zero();
        for k in 0..=self.k {
            let i1 = self.f1.cell_integrals(k);
            let i2 = self.f2.cell_integrals(k);
            let m1 = a1.cell_integrals(k);
            let m2 = a2.cell_integrals(k);
            let sp = spread.cell_integrals(k);
            for j in 0..(1usize << k) {
                let idx = DyadicIndex::new(k, j as u64 + 1).expect("index within level");
                let sf = f.integral_over(&idx);
                let af = abs_f.integral_over(&idx);
                d5 += (&i1[j] - &sf).abs() + (&i2[j] - &sf).abs();
                d6 += (&m1[j] - &af).abs() + (&m2[j] - &af).abs();
                d7 += (&sp[j] - int(2) * &af).abs();
            }
        }
        let mut checks = Checks::new();
        checks.insert("id5".into(), Check::eq(d5, Rational::zero()));
        checks.insert("id6".into(), Check::eq(d6, Rational::zero()));
        checks.insert("id7".into(), Check::eq(d7, Rational::zero()));
        checks.insert(
            "linf4x".into(),
            Check::le(self.f1.linf().max(self.f2.linf()), int(4) * f.linf()),
        );
        checks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    #[serde(with = "rational::serde_q")]
    pub gamma: Rational,
    #[serde(rename = "K")]
    pub k: u32,
    pub pair: SplitPair,
    pub g1: DyadicStep,
    pub g2: DyadicStep,
    pub checks: Checks,
    #[serde(with = "rational::serde_q")]
    pub guaranteed_gap_sq: Rational,
    #[serde(with = "rational::serde_q")]
    pub gap_sq: Rational,
}

/// Builds `g₁, g₂ ∈ V ∩ B` with `⦀g₁ − g₂⦀ > 2 − ε`; see the module docs.
///
/// The center must satisfy `⦀f⦀² ≤ 1`, and `4(1−γ)²(⦀f⦀² − 2^{-K})` must
/// exceed `(2−ε)²`, otherwise a [`Error::GapCondition`] names the failing
/// inequality.
pub fn d2p_witness(nbhd: &WeakNbhd, eps: &Rational) -> Result<WitnessReport> {
    if !eps.is_positive() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let f = nbhd.center();
    let f_sq = tnorm_sq(f);
    if f_sq > Rational::one() {
        return Err(Error::Precondition(format!(
            "center lies outside the unit ball: tnorm_sq = {}",
            rational::format(&f_sq)
        )));
    }
    let gamma = choose_gamma(&f.linf(), nbhd.delta(), eps)?;
    let levels: Vec<u32> = nbhd.functionals().iter().map(DyadicStep::level).collect();
    let k = choose_k(&gamma, &levels)?;
    let one_minus = int(1) - &gamma;
    let cell = pow2(-(k as i64));
    let guaranteed_gap_sq = int(4) * &one_minus * &one_minus * (&f_sq - &cell);
    if !exceeds_gap(&guaranteed_gap_sq, eps) {
        let target = gap_target_sq(eps).unwrap_or_else(Rational::zero);
        return Err(Error::GapCondition(format!(
            "4(1-gamma)^2 (tnorm_sq(f) - 2^-K) = {} does not exceed (2-eps)^2 = {} \
             (gamma = {}, K = {k}, tnorm_sq(f) = {})",
            rational::format(&guaranteed_gap_sq),
            rational::format(&target),
            rational::format(&gamma),
            rational::format(&f_sq),
        )));
    }

    let pair = split_pair(f, k)?;
    let g1 = pair.f1.scale(&one_minus);
    let g2 = pair.f2.scale(&one_minus);

    let mut checks = pair.identity_checks(f);
    let fi_sq = tnorm_sq(&pair.f1).max(tnorm_sq(&pair.f2));
    checks.insert("tail_bound".into(), Check::le(fi_sq, &f_sq + &cell));
    let spread_sq = tnorm_sq(&(&pair.f1 - &pair.f2));
    checks.insert("gap_bound".into(), Check::ge(spread_sq, int(4) * (&f_sq - &cell)));
    let deviation = nbhd.max_deviation(&g1).max(nbhd.max_deviation(&g2));
    checks.insert("pairing_l".into(), Check::lt(deviation, nbhd.delta().clone()));
    let ball = tnorm_sq(&g1).max(tnorm_sq(&g2));
    checks.insert("ball".into(), Check::lt(ball, Rational::one()));
    let gap_sq = tnorm_sq(&(&g1 - &g2));
    let target = gap_target_sq(eps).unwrap_or_else(Rational::zero);
    checks.insert(
        "gap".into(),
        Check { ok: exceeds_gap(&gap_sq, eps), lhs: gap_sq.clone(), rhs: target },
    );
    checks.insert("gap_guarantee".into(), Check::ge(gap_sq.clone(), guaranteed_gap_sq.clone()));

    let bad = failed(&checks);
    if !bad.is_empty() {
        return Err(Error::Verification(format!("witness checks failed: {}", bad.join(", "))));
    }
    Ok(WitnessReport { gamma, k, pair, g1, g2, checks, guaranteed_gap_sq, gap_sq })
}

/// The scale `r`, the largest rational with denominator at most `1/prec`
/// such that `r²·⦀f⦀² ≤ 1`.
pub fn near_unit_factor(f: &DyadicStep, prec: &Rational) -> Result<Rational> {
    if f.is_zero() {
        return Err(Error::ZeroOperand);
    }
    if !prec.is_positive() || prec > &Rational::one() {
        return Err(Error::Precondition("precision must lie in (0, 1]".into()));
    }
    let max_den: BigInt = prec.recip().to_integer();
    let r = rational::rational_sqrt_floor(&tnorm_sq(f).recip(), &max_den);
    if r.is_zero() {
        return Err(Error::Precondition("precision too coarse for this function".into()));
    }
    Ok(r)
}

/// `r·f` for the factor of [`near_unit_factor`]; `⦀r f⦀² ∈ [1 − 2⦀f⦀·prec, 1]`.
pub fn near_unit_scale(f: &DyadicStep, prec: &Rational) -> Result<DyadicStep> {
    Ok(f.scale(&near_unit_factor(f, prec)?))
}

/// Decimal floor of `√gap_sq`.
pub fn gap_float(gap_sq: &Rational, digits: u32) -> String {
    rational::sqrt_decimal(gap_sq, digits)
}
