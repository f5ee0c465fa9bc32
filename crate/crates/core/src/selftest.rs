//! The invariant suite: every headline property checked on seeded random
//! inputs against exact or independent oracles.
//!
//! Each check returns an [`Outcome`] with a trial count, a failure count and
//! a one-line detail. Trials run in parallel on independent per-trial RNG
//! streams, so results depend only on the seed.

use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{DyadicIndex, DyadicStep};
use crate::gen::{self, trial_rng, Gen};
use crate::octahedral::{
    disjoint_spike_family, dual_segment, ell1_bounds, greedy_asymptotic_ell1, nonsmooth_pairings, octahedral_direction,
    verify_octahedral, SpikeFamily,
};
use crate::probes::{midpoint_defect, perturbation_l1_chain, slice_diameter_lb};
use crate::rational::{self, int, pow2, rat, Rational};
use crate::renorm::{check_equivalence, dual_norm_estimate, tail_formula, tnorm_sq, triangle_equality_case};
use crate::ured::{segment_check, ured_recursion, verify_claim};
use crate::witness::{d2p_witness, exceeds_gap, failed, split_pair, WeakNbhd};

/// Float tolerance of the dual-norm estimator against the grid optimum.
pub const DUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub detail: String,
    pub ok: bool,
}

impl Outcome {
    fn new(id: u32, name: &'static str, trials: usize, failures: usize, detail: String) -> Self {
        Self { id, name, trials, failures, detail, ok: failures == 0 }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<22} {}/{} trials ok; {}",
            if self.ok { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.trials - self.failures,
            self.trials,
            self.detail
        )
    }
}

/// Trial counts; `Counts::full()` is the acceptance configuration.
#[derive(Debug, Clone, Copy)]
pub struct Counts {
    pub cap: usize,
}

impl Counts {
    pub fn full() -> Self {
        Self { cap: usize::MAX }
    }

    pub fn capped(cap: usize) -> Self {
        Self { cap: cap.max(1) }
    }

    fn n(&self, full: usize) -> usize {
        full.min(self.cap)
    }
}

/// Runs `trial(rng, i)` for `i < n` on independent streams and counts `false`.
fn count_failures(seed: u64, n: usize, trial: impl Fn(&mut Gen, usize) -> bool + Sync) -> usize {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = trial_rng(seed, i as u64);
            usize::from(!trial(&mut g, i))
        })
        .sum()
}

/// `Σ_{k<T} 4^{-k} Σ_j (∫_{I(k,j)} |f|)²`, straight from the definition.
pub fn brute_partial_sum(f: &DyadicStep, t: u32) -> Rational {
    let abs = f.abs();
    (0..t)
        .map(|k| {
            let s: Rational = (1..=1u64 << k)
                .map(|j| {
                    let m = abs.integral_over(&DyadicIndex::new(k, j).expect("valid index"));
                    &m * &m
                })
                .sum();
            pow2(-2 * k as i64) * s
        })
        .sum()
}

pub fn norm_closed_form(seed: u64, c: Counts) -> Outcome {
    let unit = tnorm_sq(&DyadicStep::constant(int(1))) == rat(8, 7);
    let n = c.n(200);
    let failures = count_failures(seed, n, |g, _| {
        let f = gen::step(g, 6, 64);
        let closed = tnorm_sq(&f);
        let l = f.level();
        [l, l + 1, l + 5].into_iter().all(|t| {
            let tail = tail_formula(&f, t).expect("t ≥ level");
            brute_partial_sum(&f, t) + tail == closed
        })
    });
    let failures = failures + usize::from(!unit);
    Outcome::new(1, "norm closed form", n + 1, failures, format!("tnorm_sq(1) = 8/7: {unit}; T ∈ {{K, K+1, K+5}}, exact"))
}

pub fn equivalence(seed: u64, c: Counts) -> Outcome {
    let n = c.n(1000);
    let failures = count_failures(seed, n, |g, _| check_equivalence(&gen::step(g, 6, 64)).ok());
    Outcome::new(2, "norm equivalence", n, failures, "l1² ≤ tnorm_sq ≤ (4/3)·l1² ≤ 2·l1², exact".into())
}

pub fn split_identities(seed: u64, c: Counts) -> Outcome {
    let n = c.n(500);
    let failures = count_failures(seed, n, |g, _| {
        let f = gen::step(g, 5, 64);
        let k = g.random_range(0..=5);
        let pair = split_pair(&f, k).expect("K + 2 ≤ 7");
        failed(&pair.identity_checks(&f)).is_empty()
    });
    Outcome::new(3, "split identities", n, failures, "three cell-integral identities for all k ≤ K, linf ≤ 4·linf(f), exact".into())
}

fn random_nbhd(g: &mut Gen) -> WeakNbhd {
    let center = gen::near_unit(g, 3, 16, &rat(1, 1000));
    let m = g.random_range(0..=3);
    let functionals = (0..m).map(|_| gen::functional(g, 3, 8)).collect();
    let deltas = [rat(1, 20), rat(1, 10), rat(1, 5), rat(1, 2), int(1)];
    let delta = deltas[g.random_range(0..deltas.len())].clone();
    WeakNbhd::new(center, functionals, delta).expect("valid neighborhood")
}

/// The gaps of a slice where `ε` is the binding constraint on `γ`.
pub fn slice_schedule_gaps() -> Vec<Option<Rational>> {
    let center = crate::witness::near_unit_scale(&DyadicStep::constant(int(1)), &rat(1, 10_000)).expect("nonzero");
    let slice = WeakNbhd::new(center, vec![DyadicStep::constant(int(1))], int(1)).expect("valid slice");
    slice_diameter_lb(&slice, &[rat(1, 5), rat(1, 10), rat(1, 100)], 6)
        .into_iter()
        .map(|e| e.ok().filter(|e| e.ok).map(|e| e.gap_sq))
        .collect()
}

pub fn d2p_witnesses(seed: u64, c: Counts) -> Outcome {
    let n = c.n(100);
    let eps = rat(1, 10);
    let failures = count_failures(seed, n, |g, _| {
        let nbhd = random_nbhd(g);
        let Ok(w) = d2p_witness(&nbhd, &eps) else { return false };
        let in_ball = [&w.g1, &w.g2].iter().all(|gi| tnorm_sq(gi) < int(1));
        let in_nbhd = [&w.g1, &w.g2].iter().all(|gi| {
            nbhd.functionals().iter().all(|h| (*gi - nbhd.center()).pairing(h).abs() < *nbhd.delta())
        });
        let gap = exceeds_gap(&tnorm_sq(&(&w.g1 - &w.g2)), &eps);
        in_ball && in_nbhd && gap
    });
    let gaps = slice_schedule_gaps();
    let increasing = gaps.iter().all(Option::is_some) && {
        let g: Vec<&Rational> = gaps.iter().flatten().collect();
        g[0] < g[1] && g[1] < g[2] && g[2] < &int(4)
    };
    let shown: Vec<String> =
        gaps.iter().map(|g| g.as_ref().map_or("-".into(), |g| format!("{:.4}", rational::to_f64(g)))).collect();
    Outcome::new(
        4,
        "d2p witness",
        n + 1,
        failures + usize::from(!increasing),
        format!("ε = 1/10 exact membership and gap; slice gap² for ε = 1/5, 1/10, 1/100: {}", shown.join(" < ")),
    )
}

/// Cellwise criterion: `f = t·g` for some `t ≥ 0` with `g ≠ 0`, or `f = g = 0`.
pub fn brute_proportional(f: &DyadicStep, g: &DyadicStep) -> bool {
    let l = f.level().max(g.level());
    let (f, g) = (f.refine(l).expect("level"), g.refine(l).expect("level"));
    let mut ratio: Option<Rational> = None;
    for (a, b) in f.values().iter().zip(g.values()) {
        if b.is_zero() {
            if !a.is_zero() {
                return false;
            }
        } else {
            let r = a / b;
            if r.is_negative() || ratio.as_ref().is_some_and(|q| q != &r) {
                return false;
            }
            ratio = Some(r);
        }
    }
    ratio.is_some() || f.is_zero()
}

/// `⦀f+g⦀ = ⦀f⦀ + ⦀g⦀` from exact squares: `d = S − A − B ≥ 0` and `d² = 4AB`.
pub fn norm_additive(f: &DyadicStep, g: &DyadicStep) -> bool {
    let (a, b, s) = (tnorm_sq(f), tnorm_sq(g), tnorm_sq(&(f + g)));
    let d = &s - &a - &b;
    !d.is_negative() && &d * &d == int(4) * a * b
}

pub fn strict_convexity(seed: u64, c: Counts) -> Outcome {
    let (random, built, mids) = (c.n(1000), c.n(100), c.n(500));
    let classify = |f: &DyadicStep, g: &DyadicStep| {
        let got = triangle_equality_case(f, g).is_degenerate();
        let g_nonzero = !g.is_zero() || f.is_zero();
        got == brute_proportional(f, g) && (!got || norm_additive(f, g)) && (got || !g_nonzero || !norm_additive(f, g))
    };
    let f1 = count_failures(seed, random, |g, _| {
        let (a, b) = (gen::step(g, 3, 3), gen::step(g, 3, 3));
        classify(&a, &b)
    });
    let f2 = count_failures(seed ^ 0x5eed, built, |g, i| {
        let b = gen::step(g, 3, 8);
        let t = if i % 10 == 0 { int(0) } else { rat(g.random_range(1..=20), g.random_range(1..=7)) };
        let a = b.scale(&t).refine(b.level() + g.random_range(0..=2)).expect("level");
        triangle_equality_case(&a, &b).is_degenerate() && classify(&a, &b)
    });
    let f3 = count_failures(seed ^ 0xface, mids, |g, _| {
        let f = gen::asymmetric_step(g, 4, 16);
        midpoint_defect(&f, &f.reflect()).is_positive() && midpoint_defect(&f, &f).is_zero()
    });
    Outcome::new(
        5,
        "strict convexity",
        random + built + mids,
        f1 + f2 + f3,
        format!("{random} random + {built} proportional pairs vs cellwise and exact-norm oracles; {mids} reflected pairs"),
    )
}

pub fn equi_integrability(seed: u64, c: Counts) -> Outcome {
    let n = c.n(500);
    let failures = count_failures(seed, n, |g, _| {
        let (f, h) = (gen::step(g, 4, 16), gen::step(g, 4, 16));
        let a = gen::disjoint_sets(g, 5);
        perturbation_l1_chain(&f, &h, &a).is_ok_and(|r| r.ok)
    });
    Outcome::new(6, "equi-integrability", n, failures, "½(‖f+g‖₁+‖f−g‖₁) ≥ ‖f‖₁ + ∫_A|g| − 2∫_A|f|, exact".into())
}

pub fn octahedrality(seed: u64, c: Counts) -> Outcome {
    let (sets, per) = (c.n(100), c.n(50));
    let epsilons = [rat(1, 2), rat(1, 4), rat(1, 8)];
    let failures = count_failures(seed, sets, |g, _| {
        let m = g.random_range(0..=3);
        let e: Vec<DyadicStep> = (0..m).map(|_| gen::step(g, 4, 16)).collect();
        let eps = &epsilons[g.random_range(0..3)];
        let Ok(y) = octahedral_direction(&e, eps) else { return false };
        (0..per).all(|_| {
            let x = e.iter().fold(DyadicStep::zero(), |acc, f| {
                DyadicStep::lin_comb(&int(1), &acc, &gen::rational(g, 16, 4), f)
            });
            verify_octahedral(&x, &y, eps).ok
        })
    });
    Outcome::new(7, "octahedrality oracle", sets, failures, format!("{per} span elements per set; all α via breakpoints and slopes, exact"))
}

pub fn asymptotic_ell1(seed: u64, c: Counts) -> Outcome {
    let n = c.n(100);
    let disjoint = count_failures(seed, n, |g, _| {
        let m = g.random_range(1..=8);
        let d = gen::deltas(g, m, &rat(1, 64));
        let Ok(fam) = disjoint_spike_family(&d, m, 3) else { return false };
        let alpha = gen::coefficients(g, m, 16);
        ell1_bounds(&fam, &alpha).is_ok_and(|b| b.value == b.lower && b.upper_ok)
    });
    let greedy = count_failures(seed ^ 0x11, n, |g, _| {
        let m = g.random_range(1..=5);
        let d = gen::deltas(g, m, &rat(1, 2));
        let Ok(fam) = greedy_asymptotic_ell1(&d, m) else { return false };
        let alpha = gen::coefficients(g, m, 16);
        ell1_bounds(&fam, &alpha).is_ok_and(|b| b.lower_ok && b.upper_ok)
    });
    Outcome::new(
        8,
        "asymptotic l1",
        2 * n,
        disjoint + greedy,
        "disjoint: lower bound with equality; greedy (m ≤ 5, δ ≥ 1/2): both bounds, exact".into(),
    )
}

/// A disjoint family on random dyadic supports: `x_k = (1−δ_k)|I_k|^{-1} 1_{I_k}`.
fn random_support_family(g: &mut Gen) -> SpikeFamily {
    let supports = loop {
        let s = gen::disjoint_sets(g, 4);
        if s.len() >= 2 {
            break s;
        }
    };
    let deltas = gen::deltas(g, supports.len(), &rat(1, 64));
    let members = supports
        .iter()
        .zip(&deltas)
        .map(|(s, d)| DyadicStep::indicator(*s, (int(1) - d) * pow2(s.k() as i64)).expect("level"))
        .collect();
    SpikeFamily { members, deltas, supports: Some(supports), schedule: None }
}

pub fn dual_segments(seed: u64, c: Counts) -> Outcome {
    let n = c.n(50);
    let failures = count_failures(seed, n, |g, i| {
        let fam = if i % 2 == 0 {
            let m = g.random_range(2..=8);
            disjoint_spike_family(&gen::deltas(g, m, &rat(1, 64)), m, g.random_range(3..=4)).expect("capacity")
        } else {
            random_support_family(g)
        };
        let Ok(pair) = dual_segment(&fam) else { return false };
        pair.ok() && nonsmooth_pairings(&fam, &pair).ok
    });
    Outcome::new(9, "dual segment", n, failures, "linf x* = y* = midpoint = 1, linf(x*−y*) = 2, pairing pattern, exact".into())
}

pub fn ured_failure() -> Outcome {
    let eps: Vec<Rational> = (1..=10).map(|n| pow2(-n)).collect();
    let grid = [int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1)];
    let result = ured_recursion(&rat(1, 2), &eps, 10).and_then(|run| {
        let claim = verify_claim(&run);
        let seg = segment_check(&run, &grid, 10)?;
        Ok((claim, seg))
    });
    let (ok, detail) = match result {
        Ok((claim, seg)) => {
            let last = &claim.sup_two_x_plus_z[10];
            let ok = claim.ok && seg.ok && last >= &(int(2) - pow2(-8));
            (ok, format!("‖2x₁₀+z‖ = {} ≥ 2 − 2⁻⁸; segment grid of 5 points", rational::format(last)))
        }
        Err(e) => (false, e.to_string()),
    };
    Outcome::new(10, "ured failure", 1, usize::from(!ok), detail)
}

/// `max (⟨f,h⟩)² / ⦀f⦀²` over sign-aligned level-2 `f` with cell values
/// in `{0, 1/32, …, 1}`, in floating point.
pub fn grid_dual_sq(h: &DyadicStep) -> f64 {
    let hv: Vec<f64> = h.refine(2).expect("level ≤ 2").values().iter().map(|v| rational::to_f64(v).abs()).collect();
    let mut best = 0.0f64;
    let steps = 33usize;
    for idx in 0..steps.pow(4) {
        let w = [idx % steps, idx / steps % steps, idx / steps.pow(2) % steps, idx / steps.pow(3)].map(|c| c as f64 / 32.0);
        let m: Vec<f64> = w.iter().map(|x| x / 4.0).collect();
        let top = m.iter().sum::<f64>().powi(2);
        if top == 0.0 {
            continue;
        }
        let halves = ((m[0] + m[1]).powi(2) + (m[2] + m[3]).powi(2)) / 4.0;
        let tail = 8.0 / 7.0 / 256.0 * w.iter().map(|x| x * x).sum::<f64>();
        let pairing: f64 = m.iter().zip(&hv).map(|(a, b)| a * b).sum();
        best = best.max(pairing * pairing / (top + halves + tail));
    }
    best
}

pub fn dual_estimator(seed: u64, c: Counts) -> Outcome {
    let n = c.n(20);
    let shortfalls: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = trial_rng(seed, i as u64);
            let h = gen::functional(&mut g, 2, 8);
            let est = dual_norm_estimate(&h, 2, &rat(1, 1_000_000_000_000)).ok()?;
            if est.upper_sq.as_ref().is_some_and(|u| u < &est.value_sq) {
                return None;
            }
            let grid = grid_dual_sq(&h).sqrt();
            Some(grid - rational::to_f64(&est.value_sq).sqrt())
        })
        .collect();
    let failures = shortfalls.iter().filter(|s| s.is_none_or(|s| s > DUAL_TOLERANCE)).count();
    let worst = shortfalls.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    Outcome::new(
        11,
        "dual-norm estimator",
        n,
        failures,
        format!("grid optimum − certified bound ≤ {DUAL_TOLERANCE:e} (worst {worst:.3e}); certified ≤ exact upper"),
    )
}

/// Checks 1–11; determinism of the command-line front end is checked by
/// the caller.
pub fn run_all(seed: u64, c: Counts) -> Vec<Outcome> {
    vec![
        norm_closed_form(seed, c),
        equivalence(seed, c),
        split_identities(seed, c),
        d2p_witnesses(seed, c),
        strict_convexity(seed, c),
        equi_integrability(seed, c),
        octahedrality(seed, c),
        asymptotic_ell1(seed, c),
        dual_segments(seed, c),
        ured_failure(),
        dual_estimator(seed, c),
    ]
}
