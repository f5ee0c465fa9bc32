//! Octahedrality and asymptotically isometric `ℓ₁` in `(L₁[0,1], ‖·‖₁)`.
//!
//! Everything here uses the canonical norm `‖·‖₁`, never `⦀·⦀`.
//!
//! * [`octahedral_direction`] returns a spike `y` below the resolution of a
//!   finite set `E`, so that `‖x + αy‖₁ ≥ (1−ε)(‖x‖₁ + |α|)` on `span(E)`;
//!   [`verify_octahedral`] checks this exactly for one `x` and all `α`.
//! * [`greedy_asymptotic_ell1`] chains such spikes into a family with
//!   `Σ(1−δ_k)|α_k| ≤ ‖Σ α_k x_k‖₁ ≤ Σ|α_k|`.
//! * [`disjoint_spike_family`] realizes the lower bound with equality, and
//!   [`dual_segment`] / [`nonsmooth_pairings`] build the explicit sign
//!   patterns that norm it.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize};

use crate::dyadic::{DyadicIndex, DyadicStep, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::probes::check_disjoint;
use crate::rational::{self, ceil_log2_recip, int, pow2, Rational};
use crate::witness::{Check, Checks};

/// Maximal constant pieces of several functions at once: each entry is a
/// length and the values of every function on that piece.
pub fn common_pieces(fs: &[&DyadicStep]) -> Vec<(Rational, Vec<Rational>)> {
    let runs: Vec<Vec<(u64, u64, &Rational)>> = fs.iter().map(|f| runs(f)).collect();
    let mut cuts: Vec<u64> = runs.iter().flatten().map(|r| r.0).collect();
    cuts.push(1u64 << MAX_LEVEL);
    cuts.sort_unstable();
    cuts.dedup();
    let unit = pow2(-(MAX_LEVEL as i64));
    let mut cursor = vec![0usize; fs.len()];
    cuts.windows(2)
        .map(|w| {
            let values = runs
                .iter()
                .zip(cursor.iter_mut())
                .map(|(r, c)| {
                    while r[*c].1 <= w[0] {
                        *c += 1;
                    }
                    r[*c].2.clone()
                })
                .collect();
            (Rational::from_integer((w[1] - w[0]).into()) * &unit, values)
        })
        .collect()
}

/// Runs `(start, end, value)` in units of `2^{-MAX_LEVEL}`.
fn runs(f: &DyadicStep) -> Vec<(u64, u64, &Rational)> {
    let width = 1u64 << (MAX_LEVEL - f.level());
    let mut out: Vec<(u64, u64, &Rational)> = Vec::new();
    for (i, v) in f.values().iter().enumerate() {
        let (start, end) = (i as u64 * width, (i as u64 + 1) * width);
        match out.last_mut() {
            Some(last) if last.2 == v => last.1 = end,
            _ => out.push((start, end, v)),
        }
    }
    out
}

/// `‖Σ c_i f_i‖₁` without materializing the finest common level.
pub fn l1_combination(coeffs: &[Rational], fs: &[&DyadicStep]) -> Rational {
    assert_eq!(coeffs.len(), fs.len(), "one coefficient per function");
    common_pieces(fs)
        .into_iter()
        .map(|(len, vs)| {
            let v: Rational = coeffs.iter().zip(&vs).map(|(c, v)| c * v).sum();
            len * v.abs()
        })
        .sum()
}

/// `y = 2^K 1_{I(K,1)}` with `K = L + 1 + ⌈log₂(1/ε)⌉`, `L` the finest level
/// in `E`; a unit vector when `E` is empty.
pub fn octahedral_direction(e: &[DyadicStep], eps: &Rational) -> Result<DyadicStep> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::Precondition("eps must lie in (0, 1)".into()));
    }
    if e.is_empty() {
        return Ok(DyadicStep::constant(int(1)));
    }
    let l = e.iter().map(DyadicStep::level).max().unwrap_or(0);
    let k = l + 1 + ceil_log2_recip(eps);
    if k > MAX_LEVEL {
        return Err(Error::LevelOverflow { requested: k });
    }
    DyadicStep::indicator(DyadicIndex::new(k, 1)?, pow2(k as i64))
}

/// Exact check of `φ(α) = ‖x+αy‖₁ − (1−ε)(‖x‖₁+|α|) ≥ 0` for all real `α`:
/// `φ` is piecewise linear, so it suffices to test its breakpoints
/// (`α = 0` and `α = −x/y` on each piece) and its slope at `±∞`
/// (`‖y‖₁ − (1−ε)` on both sides).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OctCheck {
    #[serde(with = "rational::serde_q")]
    pub min_value: Rational,
    #[serde(with = "rational::serde_q")]
    pub argmin: Rational,
    #[serde(with = "rational::serde_q")]
    pub slope_at_infinity: Rational,
    pub breakpoints: usize,
    pub ok: bool,
}

pub fn verify_octahedral(x: &DyadicStep, y: &DyadicStep, eps: &Rational) -> OctCheck {
    let pieces = common_pieces(&[x, y]);
    let shrink = int(1) - eps;
    let x_l1 = x.l1();
    let phi = |alpha: &Rational| -> Rational {
        let norm: Rational = pieces.iter().map(|(len, v)| len * (&v[0] + alpha * &v[1]).abs()).sum();
        norm - &shrink * (&x_l1 + alpha.abs())
    };
    let mut alphas: Vec<Rational> = pieces
        .iter()
        .filter(|(_, v)| !v[1].is_zero())
        .map(|(_, v)| -(&v[0] / &v[1]))
        .collect();
    alphas.push(Rational::zero());
    alphas.sort();
    alphas.dedup();
    let (argmin, min_value) = alphas
        .iter()
        .map(|a| (a.clone(), phi(a)))
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("at least one breakpoint");
    let slope_at_infinity = y.l1() - &shrink;
    let ok = !min_value.is_negative() && !slope_at_infinity.is_negative();
    OctCheck { min_value, argmin, slope_at_infinity, breakpoints: alphas.len(), ok }
}

/// Finite family `x₁..x_m` with its deltas; disjoint families carry their
/// supports, greedy families their `ε` schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeFamily {
    pub members: Vec<DyadicStep>,
    #[serde(with = "rational::serde_q_vec")]
    pub deltas: Vec<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supports: Option<Vec<DyadicIndex>>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_vec")]
    pub schedule: Option<Vec<Rational>>,
}

fn ser_opt_vec<S: serde::Serializer>(v: &Option<Vec<Rational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => rational::serde_q_vec::serialize(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Deserialize)]
struct FamilyJson {
    members: Vec<DyadicStep>,
    #[serde(with = "rational::serde_q_vec")]
    deltas: Vec<Rational>,
    #[serde(default)]
    supports: Option<Vec<DyadicIndex>>,
}

impl<'de> Deserialize<'de> for SpikeFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FamilyJson::deserialize(d)?;
        if raw.members.len() != raw.deltas.len() {
            return Err(D::Error::custom("members and deltas differ in length"));
        }
        if let Some(s) = &raw.supports {
            if s.len() != raw.members.len() {
                return Err(D::Error::custom("members and supports differ in length"));
            }
            check_disjoint(s).map_err(D::Error::custom)?;
        }
        validate_deltas(&raw.deltas).map_err(D::Error::custom)?;
        Ok(SpikeFamily { members: raw.members, deltas: raw.deltas, supports: raw.supports, schedule: None })
    }
}

fn validate_deltas(deltas: &[Rational]) -> Result<()> {
    let one = Rational::one();
    if deltas.iter().any(|d| !d.is_positive() || d >= &one) {
        return Err(Error::Precondition("deltas must lie in (0, 1)".into()));
    }
    Ok(())
}

fn take_deltas(deltas: &[Rational], m: usize) -> Result<Vec<Rational>> {
    if m == 0 {
        return Err(Error::Precondition("family size must be at least 1".into()));
    }
    if deltas.len() < m {
        return Err(Error::Precondition(format!("need {m} deltas, got {}", deltas.len())));
    }
    let deltas = deltas[..m].to_vec();
    validate_deltas(&deltas)?;
    Ok(deltas)
}

/// `ε₁..ε_m`, chosen from the back as the largest powers `2^{-p}` (`p ≥ 1`)
/// with `Π_{i=k}^{m}(1−ε_i) > 1−δ_k` for every `k`.
pub fn greedy_schedule(deltas: &[Rational]) -> Result<Vec<Rational>> {
    let mut eps = vec![Rational::zero(); deltas.len()];
    let mut tail = Rational::one();
    for k in (0..deltas.len()).rev() {
        let floor = int(1) - &deltas[k];
        if tail <= floor {
            return Err(Error::ScheduleInfeasible(k + 1));
        }
        let mut e = rational::rat(1, 2);
        while (int(1) - &e) * &tail <= floor {
            e /= int(2);
        }
        tail *= int(1) - &e;
        eps[k] = e;
    }
    Ok(eps)
}

/// `Π_{i=k}^{m}(1−ε_i) > 1−δ_k` for every `k`, exactly.
pub fn schedule_holds(eps: &[Rational], deltas: &[Rational]) -> bool {
    (0..deltas.len()).all(|k| {
        let prod: Rational = eps[k..].iter().map(|e| int(1) - e).product();
        prod > int(1) - &deltas[k]
    })
}

/// `x₁ = 1`, `x_k = octahedral_direction({x₁..x_{k−1}}, ε_k)`.
pub fn greedy_asymptotic_ell1(deltas: &[Rational], m: usize) -> Result<SpikeFamily> {
    let deltas = take_deltas(deltas, m)?;
    let schedule = greedy_schedule(&deltas)?;
    if !schedule_holds(&schedule, &deltas) {
        return Err(Error::Verification("greedy schedule product condition".into()));
    }
    let mut members = vec![DyadicStep::constant(int(1))];
    for e in &schedule[1..] {
        let y = octahedral_direction(&members, e)?;
        members.push(y);
    }
    Ok(SpikeFamily { members, deltas, supports: None, schedule: Some(schedule) })
}

/// `x_k = (1−δ_k) 2^K 1_{I(K,k)}`.
pub fn disjoint_spike_family(deltas: &[Rational], m: usize, k: u32) -> Result<SpikeFamily> {
    if k > MAX_LEVEL {
        return Err(Error::LevelOverflow { requested: k });
    }
    if (1u64 << k) < m as u64 {
        return Err(Error::Capacity { members: m, level: k });
    }
    let deltas = take_deltas(deltas, m)?;
    let supports: Vec<DyadicIndex> = (1..=m as u64).map(|j| DyadicIndex::new(k, j)).collect::<Result<_>>()?;
    let members = supports
        .iter()
        .zip(&deltas)
        .map(|(s, d)| DyadicStep::indicator(*s, (int(1) - d) * pow2(k as i64)))
        .collect::<Result<_>>()?;
    Ok(SpikeFamily { members, deltas, supports: Some(supports), schedule: None })
}

/// `Σ(1−δ_k)|α_k| ≤ ‖Σ α_k x_k‖₁ ≤ Σ|α_k|`, exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ell1Check {
    #[serde(with = "rational::serde_q")]
    pub value: Rational,
    #[serde(with = "rational::serde_q")]
    pub lower: Rational,
    #[serde(with = "rational::serde_q")]
    pub upper: Rational,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

pub fn ell1_bounds(family: &SpikeFamily, alpha: &[Rational]) -> Result<Ell1Check> {
    if alpha.len() != family.members.len() {
        return Err(Error::Precondition(format!(
            "{} coefficients for {} members",
            alpha.len(),
            family.members.len()
        )));
    }
    let fs: Vec<&DyadicStep> = family.members.iter().collect();
    let value = l1_combination(alpha, &fs);
    let lower: Rational = alpha.iter().zip(&family.deltas).map(|(a, d)| (int(1) - d) * a.abs()).sum();
    let upper: Rational = alpha.iter().map(Signed::abs).sum();
    let lower_ok = value >= lower;
    let upper_ok = value <= upper;
    Ok(Ell1Check { value, lower, upper, lower_ok, upper_ok })
}

/// Two norm-one sign patterns at distance 2 whose midpoint also has norm 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPair {
    pub xstar: DyadicStep,
    pub ystar: DyadicStep,
    /// Rows `[⟨x_k, x*⟩, ⟨x_k, y*⟩]`.
    #[serde(with = "rational::serde_q_mat")]
    pub pairings: Vec<Vec<Rational>>,
    pub checks: Checks,
}

impl DualPair {
    pub fn ok(&self) -> bool {
        self.checks.values().all(|c| c.ok)
    }
}

/// `x* = 1` on every support; `y* = +1` on even-indexed supports and `−1`
/// on odd-indexed ones.
pub fn dual_segment(family: &SpikeFamily) -> Result<DualPair> {
    let supports = family.supports.as_ref().ok_or(Error::MissingSupports)?;
    if supports.is_empty() {
        return Err(Error::Precondition("empty family".into()));
    }
    check_disjoint(supports)?;
    let level = supports.iter().map(DyadicIndex::k).max().unwrap_or(0);
    let mut xs = vec![Rational::zero(); 1usize << level];
    let mut ys = xs.clone();
    for (i, s) in supports.iter().enumerate() {
        let width = 1usize << (level - s.k());
        let start = (s.j() - 1) as usize * width;
        let sign = if i % 2 == 1 { int(1) } else { int(-1) };
        for c in start..start + width {
            xs[c] = int(1);
            ys[c] = sign.clone();
        }
    }
    let xstar = DyadicStep::new(level, xs)?;
    let ystar = DyadicStep::new(level, ys)?;
    let half = rational::rat(1, 2);
    let mid = DyadicStep::lin_comb(&half, &xstar, &half, &ystar);

    let pairings: Vec<Vec<Rational>> =
        family.members.iter().map(|x| vec![x.pairing(&xstar), x.pairing(&ystar)]).collect();
    let mut mismatch = Rational::zero();
    for (i, (row, d)) in pairings.iter().zip(&family.deltas).enumerate() {
        let size = int(1) - d;
        let signed = if i % 2 == 1 { size.clone() } else { -size.clone() };
        mismatch += (&row[0] - &size).abs() + (&row[1] - signed).abs();
    }
    let mut checks = Checks::new();
    checks.insert("linf_xstar".into(), Check::eq(xstar.linf(), int(1)));
    checks.insert("linf_ystar".into(), Check::eq(ystar.linf(), int(1)));
    checks.insert("linf_midpoint".into(), Check::eq(mid.linf(), int(1)));
    checks.insert("linf_difference".into(), Check::eq((&xstar - &ystar).linf(), int(2)));
    checks.insert("pairing_pattern".into(), Check::eq(mismatch, Rational::zero()));
    Ok(DualPair { xstar, ystar, pairings, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonsmoothReport {
    /// `⟨x_{2i−1}, y*⟩`, expected `−(1−δ_{2i−1})`.
    #[serde(with = "rational::serde_q_vec")]
    pub odd: Vec<Rational>,
    /// `⟨x_{2i}, y*⟩`, expected `1−δ_{2i}`.
    #[serde(with = "rational::serde_q_vec")]
    pub even: Vec<Rational>,
    /// `⟨x_{2i} − x_{2i−1}, y*⟩`, expected `2 − δ_{2i} − δ_{2i−1}`.
    #[serde(with = "rational::serde_q_vec")]
    pub gaps: Vec<Rational>,
    pub ok: bool,
}

pub fn nonsmooth_pairings(family: &SpikeFamily, pair: &DualPair) -> NonsmoothReport {
    let mut report = NonsmoothReport { odd: vec![], even: vec![], gaps: vec![], ok: true };
    for (xs, ds) in family.members.chunks_exact(2).zip(family.deltas.chunks_exact(2)) {
        let odd = xs[0].pairing(&pair.ystar);
        let even = xs[1].pairing(&pair.ystar);
        let gap = (&xs[1] - &xs[0]).pairing(&pair.ystar);
        report.ok &= odd == -(int(1) - &ds[0]) && even == int(1) - &ds[1] && gap == int(2) - &ds[0] - &ds[1];
        report.odd.push(odd);
        report.even.push(even);
        report.gaps.push(gap);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::testutil::{arb_step, step};
    use proptest::prelude::*;

    fn q(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    /// `min φ` over a fine grid of `α`, evaluated densely.
    fn grid_min(x: &DyadicStep, y: &DyadicStep, eps: &Rational) -> Rational {
        (-40..=40)
            .map(|i| {
                let a = rat(i, 32);
                DyadicStep::lin_comb(&int(1), x, &a, y).l1() - (int(1) - eps) * (x.l1() + a.abs())
            })
            .min()
            .unwrap()
    }

    #[test]
    fn direction_examples() {
        let one = step(0, &[1]);
        let y = octahedral_direction(std::slice::from_ref(&one), &rat(1, 2)).unwrap();
        assert_eq!(y, step(2, &[4, 0, 0, 0]));
        let spot = DyadicStep::lin_comb(&int(1), &one, &rat(-1, 4), &y).l1();
        assert_eq!(spot, rat(3, 4));
        assert!(spot >= rat(5, 8));
        let c = verify_octahedral(&one, &y, &rat(1, 2));
        assert!(c.ok);
        assert!(c.min_value <= grid_min(&one, &y, &rat(1, 2)));

        assert_eq!(octahedral_direction(&[], &rat(1, 2)).unwrap(), one);
        let y = octahedral_direction(&[step(1, &[1, -1])], &rat(1, 4)).unwrap();
        assert_eq!(y.level(), 4);
        assert_eq!(y.values()[0], int(16));
        assert!(octahedral_direction(std::slice::from_ref(&one), &int(1)).is_err());
        let deep = DyadicStep::new(18, vec![int(0); 1 << 18]).unwrap();
        assert!(matches!(octahedral_direction(&[deep], &rat(1, 4)), Err(Error::LevelOverflow { requested: 21 })));
    }

    #[test]
    fn verifier_detects_failure() {
        // a direction that overlaps x at full resolution is not octahedral
        let x = step(1, &[2, 0]);
        let y = step(1, &[-2, 0]);
        let c = verify_octahedral(&x, &y, &rat(1, 2));
        assert!(!c.ok);
        assert_eq!(c.argmin, int(1));
    }

    #[test]
    fn greedy_examples() {
        let fam = greedy_asymptotic_ell1(&q(&[(1, 2), (1, 4), (1, 8)]), 3).unwrap();
        assert_eq!(fam.members.len(), 3);
        assert!(fam.members.iter().all(|x| x.l1() == int(1)));
        let sched = fam.schedule.clone().unwrap();
        assert!(schedule_holds(&sched, &fam.deltas));
        let c = ell1_bounds(&fam, &[int(1), int(-1), int(0)]).unwrap();
        assert!(c.value >= rat(1, 2) * int(2));
        assert!(c.lower_ok && c.upper_ok);
        for k in 0..3 {
            let mut e = vec![int(0); 3];
            e[k] = rat(-3, 2);
            assert_eq!(ell1_bounds(&fam, &e).unwrap().value, rat(3, 2));
        }
        let single = greedy_asymptotic_ell1(&q(&[(1, 3)]), 1).unwrap();
        assert_eq!(single.members, vec![step(0, &[1])]);
        assert!(matches!(greedy_schedule(&q(&[(1, 8), (1, 2)])), Err(Error::ScheduleInfeasible(1))));
        assert!(greedy_asymptotic_ell1(&q(&[(1, 2)]), 2).is_err());
    }

    #[test]
    fn schedule_is_tight() {
        let deltas = q(&[(9, 10), (4, 5), (7, 10), (3, 5), (1, 2)]);
        let sched = greedy_schedule(&deltas).unwrap();
        assert!(schedule_holds(&sched, &deltas));
        // doubling any single ε breaks some condition
        for i in 0..sched.len() {
            let mut bigger = sched.clone();
            bigger[i] *= int(2);
            assert!(bigger[i] >= int(1) || !schedule_holds(&bigger, &deltas));
        }
        let fam = greedy_asymptotic_ell1(&deltas, 5).unwrap();
        assert!(fam.members.iter().all(|m| m.level() <= MAX_LEVEL));
    }

    #[test]
    fn disjoint_examples() {
        let fam = disjoint_spike_family(&q(&[(1, 2), (1, 3)]), 2, 2).unwrap();
        assert_eq!(fam.members[0], step(2, &[2, 0, 0, 0]));
        assert_eq!(fam.members[1], DyadicStep::new(2, q(&[(0, 1), (8, 3), (0, 1), (0, 1)])).unwrap());
        assert_eq!(ell1_bounds(&fam, &[int(1), int(1)]).unwrap().value, rat(7, 6));
        let c = ell1_bounds(&fam, &[int(1), int(-1)]).unwrap();
        assert_eq!((c.value.clone(), c.lower.clone()), (rat(7, 6), rat(7, 6)));
        assert!(c.upper_ok && c.value < c.upper);
        for (x, d) in fam.members.iter().zip(&fam.deltas) {
            assert_eq!(x.l1(), int(1) - d);
        }
        assert!(matches!(
            disjoint_spike_family(&q(&[(1, 2), (1, 2), (1, 2)]), 3, 1),
            Err(Error::Capacity { members: 3, level: 1 })
        ));
    }

    #[test]
    fn dual_examples() {
        let fam = disjoint_spike_family(&q(&[(1, 2), (1, 3)]), 2, 2).unwrap();
        let pair = dual_segment(&fam).unwrap();
        assert!(pair.ok(), "{:?}", pair.checks);
        assert_eq!(pair.xstar, step(1, &[1, 0]));
        assert_eq!(pair.ystar, step(2, &[-1, 1, 0, 0]));
        assert_eq!(pair.pairings[0][0], rat(1, 2));
        assert_eq!(pair.pairings[1][1], rat(2, 3));
        let mid = DyadicStep::lin_comb(&rat(1, 2), &pair.xstar, &rat(1, 2), &pair.ystar);
        assert_eq!(mid, step(2, &[0, 1, 0, 0]));

        let ns = nonsmooth_pairings(&fam, &pair);
        assert!(ns.ok);
        assert_eq!(ns.gaps, vec![rat(7, 6)]);

        let single = disjoint_spike_family(&q(&[(1, 2)]), 1, 0).unwrap();
        let pair = dual_segment(&single).unwrap();
        assert!(!pair.checks["linf_midpoint"].ok);
        assert!(nonsmooth_pairings(&single, &pair).gaps.is_empty());

        let greedy = greedy_asymptotic_ell1(&q(&[(1, 2)]), 1).unwrap();
        assert_eq!(dual_segment(&greedy), Err(Error::MissingSupports));
    }

    #[test]
    fn gaps_tend_to_two() {
        let deltas: Vec<Rational> = (1..=8).map(|i| pow2(-i)).collect();
        let fam = disjoint_spike_family(&deltas, 8, 3).unwrap();
        let pair = dual_segment(&fam).unwrap();
        let ns = nonsmooth_pairings(&fam, &pair);
        assert!(ns.ok);
        assert!(ns.gaps.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ns.gaps[3], int(2) - pow2(-8) - pow2(-7));
    }

    #[test]
    fn family_json_round_trip() {
        let fam = disjoint_spike_family(&q(&[(1, 2), (1, 3)]), 2, 2).unwrap();
        let text = serde_json::to_string(&fam).unwrap();
        assert!(text.contains(r#""supports":[{"k":2,"j":1},{"k":2,"j":2}]"#));
        let back: SpikeFamily = serde_json::from_str(&text).unwrap();
        assert_eq!(back, fam);
        let bad = text.replace(r#"{"k":2,"j":2}"#, r#"{"k":1,"j":1}"#);
        assert!(serde_json::from_str::<SpikeFamily>(&bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn pieces_agree_with_dense(f in arb_step(), g in arb_step(), a in -5i64..5, b in -5i64..5) {
            let dense = DyadicStep::lin_comb(&int(a), &f, &int(b), &g).l1();
            prop_assert_eq!(l1_combination(&[int(a), int(b)], &[&f, &g]), dense);
        }

        #[test]
        fn direction_is_octahedral(e in prop::collection::vec(arb_step(), 1..3), p in 1u32..4, coeffs in prop::collection::vec(-6i64..6, 2)) {
            let eps = pow2(-(p as i64));
            let y = octahedral_direction(&e, &eps).unwrap();
            let mut x = DyadicStep::zero();
            for (c, f) in coeffs.iter().zip(&e) {
                x = DyadicStep::lin_comb(&int(1), &x, &int(*c), f);
            }
            let c = verify_octahedral(&x, &y, &eps);
            prop_assert!(c.ok);
            prop_assert!(c.min_value <= grid_min(&x, &y, &eps));
        }

        #[test]
        fn disjoint_lower_bound_is_equality(ds in prop::collection::vec(1i64..16, 1..6), al in prop::collection::vec(-9i64..9, 6)) {
            let deltas: Vec<Rational> = ds.iter().map(|d| rat(*d, 16)).collect();
            let fam = disjoint_spike_family(&deltas, deltas.len(), 3).unwrap();
            let alpha: Vec<Rational> = al[..deltas.len()].iter().map(|a| int(*a)).collect();
            let c = ell1_bounds(&fam, &alpha).unwrap();
            prop_assert_eq!(&c.value, &c.lower);
            prop_assert!(c.upper_ok);
        }
    }
}
