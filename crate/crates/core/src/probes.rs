//! Finite probes of the rotundity and extremal structure of `⦀·⦀`.
//!
//! Strict convexity shows up as a positive midpoint defect; the absence of
//! strongly extreme points as a pair `center ± u` inside the ball with `u`
//! of fixed size; the equi-integrability device as one exact inequality;
//! and the diameter-2 property as slice gaps exceeding `2 − ε`.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{DyadicIndex, DyadicStep};
use crate::error::{Error, Result};
use crate::rational::{self, int, rat, Rational};
use crate::renorm::tnorm_sq;
use crate::witness::{d2p_witness, exceeds_gap, WeakNbhd};

/// `(⦀f⦀² + ⦀g⦀²)/2 − ⦀(f+g)/2⦀²`; zero exactly when `f = g`.
pub fn midpoint_defect(f: &DyadicStep, g: &DyadicStep) -> Rational {
    let half = rat(1, 2);
    let mid = DyadicStep::lin_comb(&half, f, &half, g);
    (tnorm_sq(f) + tnorm_sq(g)) * &half - tnorm_sq(&mid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeFailureWitness {
    pub center: DyadicStep,
    pub u: DyadicStep,
    #[serde(with = "rational::serde_q_vec")]
    pub ball_check_sq: Vec<Rational>,
    #[serde(with = "rational::serde_q")]
    pub l1_of_u: Rational,
    #[serde(with = "rational::serde_q")]
    pub gamma: Rational,
    pub ok: bool,
}

/// `center = (g₁+g₂)/2` and `u = (g₁−g₂)/2` from a witness run: both
/// `center ± u` lie in the open unit ball while `‖u‖₁ = (1−γ)‖f‖₁`.
pub fn strong_extreme_failure(nbhd: &WeakNbhd, eps: &Rational) -> Result<ExtremeFailureWitness> {
    let report = d2p_witness(nbhd, eps)?;
    let half = rat(1, 2);
    let center = DyadicStep::lin_comb(&half, &report.g1, &half, &report.g2);
    let u = DyadicStep::lin_comb(&half, &report.g1, &(-&half), &report.g2);
    let ball_check_sq = vec![tnorm_sq(&(&center + &u)), tnorm_sq(&(&center - &u))];
    let l1_of_u = u.l1();
    let expected = (int(1) - &report.gamma) * nbhd.center().l1();
    let ok = ball_check_sq.iter().all(|b| b < &int(1)) && l1_of_u >= expected;
    Ok(ExtremeFailureWitness { center, u, ball_check_sq, l1_of_u, gamma: report.gamma, ok })
}

/// The four integrals of `½(‖f+g‖₁ + ‖f−g‖₁) ≥ ‖f‖₁ + ∫_A|g| − 2∫_A|f|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    #[serde(with = "rational::serde_q")]
    pub l1_f_plus_g: Rational,
    #[serde(with = "rational::serde_q")]
    pub l1_f_minus_g: Rational,
    #[serde(with = "rational::serde_q")]
    pub g_on_a: Rational,
    #[serde(with = "rational::serde_q")]
    pub f_on_a: Rational,
    #[serde(with = "rational::serde_q")]
    pub lhs: Rational,
    #[serde(with = "rational::serde_q")]
    pub rhs: Rational,
    pub ok: bool,
}

pub fn check_disjoint(sets: &[DyadicIndex]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        if let Some(b) = sets[i + 1..].iter().find(|b| a.overlaps(b)) {
            return Err(Error::OverlappingSets { k1: a.k(), j1: a.j(), k2: b.k(), j2: b.j() });
        }
    }
    Ok(())
}

pub fn perturbation_l1_chain(f: &DyadicStep, g: &DyadicStep, a: &[DyadicIndex]) -> Result<ChainReport> {
    check_disjoint(a)?;
    let l1_f_plus_g = (f + g).l1();
    let l1_f_minus_g = (f - g).l1();
    let (abs_f, abs_g) = (f.abs(), g.abs());
    let g_on_a: Rational = a.iter().map(|i| abs_g.integral_over(i)).sum();
    let f_on_a: Rational = a.iter().map(|i| abs_f.integral_over(i)).sum();
    let lhs = (&l1_f_plus_g + &l1_f_minus_g) * rat(1, 2);
    let rhs = f.l1() + &g_on_a - int(2) * &f_on_a;
    let ok = lhs >= rhs;
    Ok(ChainReport { l1_f_plus_g, l1_f_minus_g, g_on_a, f_on_a, lhs, rhs, ok })
}

/// `max_{k ≤ D, j} |∫_{I(k,j)} u|`, a finite proxy for weak smallness.
pub fn weak_smallness(u: &DyadicStep, depth: u32) -> Rational {
    // below the level of u the cell integrals only shrink
    (0..=depth.min(u.level()))
        .flat_map(|k| u.cell_integrals(k))
        .map(|v| v.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceEntry {
    #[serde(with = "rational::serde_q")]
    pub eps: Rational,
    #[serde(with = "rational::serde_q")]
    pub gap_sq: Rational,
    pub gap_float: String,
    pub ok: bool,
}

/// One witness run per `ε`; `ok` records `2 − ε < gap ≤ 2`.
pub fn slice_diameter_lb(nbhd: &WeakNbhd, schedule: &[Rational], float_digits: u32) -> Vec<Result<SliceEntry>> {
    schedule
        .par_iter()
        .map(|eps| {
            let report = d2p_witness(nbhd, eps)?;
            let gap_sq = report.gap_sq;
            let ok = exceeds_gap(&gap_sq, eps) && gap_sq <= int(4);
            let gap_float = rational::sqrt_decimal(&gap_sq, float_digits);
            Ok(SliceEntry { eps: eps.clone(), gap_sq, gap_float, ok })
        })
        .collect()
}

/// CSV rows `eps,gap_sq,gap_float` for the successful entries.
pub fn write_slice_csv<W: std::io::Write>(entries: &[Result<SliceEntry>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "gap_sq", "gap_float"])?;
    for e in entries.iter().flatten() {
        w.write_record([rational::format(&e.eps), rational::format(&e.gap_sq), e.gap_float.clone()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{arb_step, step};
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn idx(k: u32, j: u64) -> DyadicIndex {
        DyadicIndex::new(k, j).unwrap()
    }

    fn example_nbhd(delta: Rational) -> WeakNbhd {
        let r = rational::rational_sqrt_floor(&rat(7, 8), &BigInt::from(10_000));
        WeakNbhd::new(DyadicStep::constant(r), vec![step(0, &[1])], delta).unwrap()
    }

    #[test]
    fn midpoint_examples() {
        let f = step(1, &[1, 0]);
        assert_eq!(midpoint_defect(&f, &f), int(0));
        assert_eq!(midpoint_defect(&f, &step(1, &[0, 1])), rat(1, 28));
        let g = step(2, &[1, -2, 0, 5]);
        assert_eq!(midpoint_defect(&g, &g.scale(&int(3))), tnorm_sq(&g));
    }

    #[test]
    fn extreme_failure_example() {
        let nbhd = example_nbhd(rat(1, 10));
        let w = strong_extreme_failure(&nbhd, &rat(1, 5)).unwrap();
        let r = nbhd.center().values()[0].clone();
        assert!(w.ok);
        assert_eq!(w.l1_of_u, rat(63, 64) * &r);
        assert!((rational::to_f64(&w.l1_of_u) - 0.92).abs() < 0.01);
        assert!(w.ball_check_sq.iter().all(|b| b < &int(1)));

        let none = WeakNbhd::new(nbhd.center().clone(), vec![], rat(1, 10)).unwrap();
        let w = strong_extreme_failure(&none, &rat(1, 5)).unwrap();
        assert!(w.ok && w.l1_of_u >= rat(9, 10) * &r);

        let zero = WeakNbhd::new(DyadicStep::zero(), vec![], rat(1, 10)).unwrap();
        assert!(strong_extreme_failure(&zero, &rat(1, 5)).is_err());
    }

    #[test]
    fn chain_examples() {
        let f = step(0, &[1]);
        let g = step(2, &[4, 0, 0, 0]);
        let c = perturbation_l1_chain(&f, &g, &[idx(2, 1)]).unwrap();
        assert_eq!((c.l1_f_plus_g.clone(), c.l1_f_minus_g.clone()), (int(2), rat(3, 2)));
        assert_eq!((c.g_on_a.clone(), c.f_on_a.clone()), (int(1), rat(1, 4)));
        assert_eq!((c.lhs.clone(), c.rhs.clone(), c.ok), (rat(7, 4), rat(3, 2), true));

        let c = perturbation_l1_chain(&f, &DyadicStep::zero(), &[idx(1, 2)]).unwrap();
        assert_eq!(c.lhs, int(1));
        assert_eq!(c.rhs, int(0));
        let c = perturbation_l1_chain(&f, &g, &[]).unwrap();
        assert!(c.ok && c.lhs >= f.l1());

        assert!(matches!(
            perturbation_l1_chain(&f, &g, &[idx(1, 1), idx(2, 2)]),
            Err(Error::OverlappingSets { k1: 1, j1: 1, k2: 2, j2: 2 })
        ));
    }

    #[test]
    fn weak_smallness_examples() {
        let u = step(1, &[1, -1]);
        assert_eq!(weak_smallness(&u, 0), int(0));
        assert_eq!(weak_smallness(&u, 1), rat(1, 2));
        let n = 6;
        let rademacher = DyadicStep::from_ints(n, &(0..64).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect::<Vec<_>>()).unwrap();
        for d in 0..n {
            assert_eq!(weak_smallness(&rademacher, d), int(0));
        }
        assert_eq!(rademacher.l1(), int(1));
        assert_eq!(weak_smallness(&rademacher, 30), rat(1, 64));
    }

    #[test]
    fn slice_examples() {
        let nbhd = example_nbhd(rat(1, 10));
        let out = slice_diameter_lb(&nbhd, &[rat(1, 5), int(2), rat(1, 100)], 6);
        let entries: Vec<_> = out.into_iter().map(|e| e.unwrap()).collect();
        assert!(entries.iter().all(|e| e.ok));
        let first = rational::to_f64(&entries[0].gap_sq);
        assert!(first > 3.24 && first <= 4.0);
        assert!(entries[2].gap_sq > entries[0].gap_sq);

        // a slice where ε is the binding constraint: gaps strictly increase
        let slice = example_nbhd(int(1));
        let out = slice_diameter_lb(&slice, &[rat(1, 5), rat(1, 10), rat(1, 100)], 6);
        let gaps: Vec<Rational> = out.into_iter().map(|e| e.unwrap().gap_sq).collect();
        assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2] && gaps[2] < int(4));

        let mut buf = Vec::new();
        let entries = slice_diameter_lb(&nbhd, &[rat(1, 5)], 4);
        write_slice_csv(&entries, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("eps,gap_sq,gap_float"));
        assert!(lines.next().unwrap().starts_with("1/5,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn defect_nonnegative_and_separates(f in arb_step(), g in arb_step()) {
            let d = midpoint_defect(&f, &g);
            prop_assert!(!d.is_negative());
            prop_assert_eq!(d.is_zero(), f == g);
            let r = f.reflect();
            prop_assert_eq!(midpoint_defect(&f, &r).is_positive(), f != r);
        }

        #[test]
        fn chain_always_holds(f in arb_step(), g in arb_step(), k in 0u32..4, picks in prop::collection::vec(any::<bool>(), 16)) {
            let a: Vec<DyadicIndex> = (1..=(1u64 << k))
                .filter(|j| picks[(*j - 1) as usize])
                .map(|j| idx(k, j))
                .collect();
            prop_assert!(perturbation_l1_chain(&f, &g, &a).unwrap().ok);
        }

        #[test]
        fn weak_smallness_bounded_by_l1(u in arb_step(), d in 0u32..8) {
            prop_assert!(weak_smallness(&u, d) <= u.l1());
        }
    }
}
