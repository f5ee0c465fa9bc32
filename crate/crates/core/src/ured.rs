//! A diameter-2 space that is not uniformly rotund in every direction,
//! realized on finitely supported sup-norm sequences.
//!
//! With `z = (1−δ)e₁` and `x_n = Σ_{i≤n} (1−ε_i/4) e_{i+1}` the pair
//! `x_n, y_n = z + x_n` stays inside the unit ball with fixed difference
//! `−z`, yet `‖x_n + y_n‖ = ‖2x_n + z‖ = 2(1−ε_n/4) → 2`. The norm-one
//! projection is "forget the first coordinate"; its kernel holds `z`.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, int, rat, Rational};
use crate::witness::{failed, Check, Checks};

/// A finitely supported sequence `(c_1, c_2, …)` with no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseSeq {
    coords: BTreeMap<u64, Rational>,
}

impl SparseSeq {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c·e_i`.
    pub fn unit(i: u64, c: Rational) -> Result<Self> {
        Self::from_pairs([(i, c)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, Rational)>) -> Result<Self> {
        let mut s = Self::zero();
        for (i, c) in pairs {
            if i == 0 {
                return Err(Error::Precondition("sequence indices start at 1".into()));
            }
            s.add_at(i, &c);
        }
        Ok(s)
    }

    fn add_at(&mut self, i: u64, c: &Rational) {
        let v = self.coords.entry(i).or_insert_with(Rational::zero);
        *v += c;
        if v.is_zero() {
            self.coords.remove(&i);
        }
    }

    pub fn get(&self, i: u64) -> Rational {
        self.coords.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coords(&self) -> &BTreeMap<u64, Rational> {
        &self.coords
    }

    pub fn sup_norm(&self) -> Rational {
        self.coords.values().map(Signed::abs).max().unwrap_or_else(Rational::zero)
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: &Rational, b: &Rational, other: &SparseSeq) -> SparseSeq {
        let mut out = SparseSeq::zero();
        for (i, v) in &self.coords {
            out.add_at(*i, &(a * v));
        }
        for (i, v) in &other.coords {
            out.add_at(*i, &(b * v));
        }
        out
    }
}

impl Serialize for SparseSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<u64, String> = self.coords.iter().map(|(i, v)| (*i, rational::format(v))).collect();
        m.serialize(s)
    }
}

/// Zeroes the first coordinate: a norm-one projection with kernel `span(e₁)`.
pub fn projection_tail(x: &SparseSeq) -> SparseSeq {
    let mut out = x.clone();
    out.coords.remove(&1);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionRun {
    #[serde(with = "rational::serde_q")]
    pub delta: Rational,
    #[serde(with = "rational::serde_q_vec")]
    pub eps: Vec<Rational>,
    pub z: SparseSeq,
    /// `x_1, …, x_n` (`x_0 = 0`).
    pub xs: Vec<SparseSeq>,
    /// The coordinate `j_n` evaluated by `x*_n`.
    pub xstars: Vec<u64>,
    pub checks: Checks,
}

impl RecursionRun {
    pub fn steps(&self) -> usize {
        self.xs.len()
    }

    /// `x_n`, with `x_0 = 0`.
    pub fn x(&self, n: usize) -> SparseSeq {
        if n == 0 {
            SparseSeq::zero()
        } else {
            self.xs[n - 1].clone()
        }
    }

    pub fn ok(&self) -> bool {
        failed(&self.checks).is_empty()
    }
}

fn height(eps: &Rational) -> Rational {
    int(1) - eps / int(4)
}

fn key(name: &str, n: usize) -> String {
    format!("{name}[{n:03}]")
}

/// Condition (1) `‖z + x_n‖ < 1` for `n ≤ steps` and condition (2)
/// `x*_n(x_m) = x*_n(x_n) > 1 − ε_n` for `m ≥ n`.
fn claim_checks(eps: &[Rational], z: &SparseSeq, xs: &[SparseSeq], xstars: &[u64]) -> Checks {
    let one = int(1);
    let mut checks = Checks::new();
    checks.insert(key("claim1", 0), Check::lt(z.sup_norm(), one.clone()));
    for (n, x) in xs.iter().enumerate() {
        let n1 = n + 1;
        checks.insert(key("claim1", n1), Check::lt(z.lin_comb(&one, &one, x).sup_norm(), one.clone()));
        let at = x.get(xstars[n]);
        let drift: Rational = xs[n..].iter().map(|xm| (xm.get(xstars[n]) - &at).abs()).sum();
        checks.insert(key("claim2", n1), Check::lt(&one - &eps[n], at));
        checks.insert(key("claim2_stable", n1), Check::eq(drift, Rational::zero()));
        // y₁ − y₂ = 2(1−ε_n/4) e_{j_n}
        let spread = int(2) * height(&eps[n]);
        checks.insert(key("spread", n1), Check::lt(int(2) - &eps[n], spread));
    }
    checks
}

pub fn ured_recursion(delta: &Rational, eps: &[Rational], steps: usize) -> Result<RecursionRun> {
    if !delta.is_positive() || delta >= &int(1) {
        return Err(Error::Precondition("delta must lie in (0, 1)".into()));
    }
    if eps.len() < steps {
        return Err(Error::Precondition(format!("need {steps} eps values, got {}", eps.len())));
    }
    let eps = eps[..steps].to_vec();
    if eps.iter().any(|e| !e.is_positive() || e > &int(2)) {
        return Err(Error::Precondition("eps values must lie in (0, 2]".into()));
    }
    if eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Precondition("eps must be non-increasing".into()));
    }
    let z = SparseSeq::unit(1, int(1) - delta)?;
    let mut xs = Vec::with_capacity(steps);
    let mut xstars = Vec::with_capacity(steps);
    let mut x = SparseSeq::zero();
    for (n, e) in eps.iter().enumerate() {
        // fresh coordinate, never touched again
        let j = n as u64 + 2;
        x = x.lin_comb(&int(1), &int(1), &SparseSeq::unit(j, height(e))?);
        xs.push(x.clone());
        xstars.push(j);
    }
    let checks = claim_checks(&eps, &z, &xs, &xstars);
    let run = RecursionRun { delta: delta.clone(), eps, z, xs, xstars, checks };
    if !run.ok() {
        return Err(Error::Verification(format!("recursion checks failed: {}", failed(&run.checks).join(", "))));
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimReport {
    /// `‖2x_n + z‖` for `n = 0..=steps`.
    #[serde(with = "rational::serde_q_vec")]
    pub sup_two_x_plus_z: Vec<Rational>,
    pub checks: Checks,
    pub ok: bool,
}

/// Re-derives the claim conditions from the vectors alone and adds
/// `‖½z + x_m‖ ≥ 1 − ε_n` (`m ≥ n`), `‖2x_n + z‖ = 2(1−ε_n/4)`, and the
/// projection contract `P x_n = x_n`, `P z = 0`.
pub fn verify_claim(run: &RecursionRun) -> ClaimReport {
    let (one, two, half) = (int(1), int(2), rat(1, 2));
    let mut checks = claim_checks(&run.eps, &run.z, &run.xs, &run.xstars);
    let mut sups = Vec::with_capacity(run.steps() + 1);
    for n in 0..=run.steps() {
        let x = run.x(n);
        let s = x.lin_comb(&two, &one, &run.z).sup_norm();
        let expected = if n == 0 { &one - &run.delta } else { &two * height(&run.eps[n - 1]) };
        checks.insert(key("sup_2x_plus_z", n), Check::eq(s.clone(), expected));
        sups.push(s);
        checks.insert(key("projection_fixes_x", n), Check::eq(projection_tail(&x).lin_comb(&one, &-&one, &x).sup_norm(), Rational::zero()));
        if n >= 1 {
            let lowest = (n..=run.steps())
                .map(|m| run.x(m).lin_comb(&one, &half, &run.z).sup_norm())
                .min()
                .expect("m = n is in range");
            checks.insert(key("half_z_plus_x", n), Check::ge(lowest, &one - &run.eps[n - 1]));
        }
    }
    checks.insert("projection_kills_z".into(), Check::eq(projection_tail(&run.z).sup_norm(), Rational::zero()));
    let ok = failed(&checks).is_empty();
    ClaimReport { sup_two_x_plus_z: sups, checks, ok }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "rational::serde_q_vec")]
    pub grid: Vec<Rational>,
    /// `‖t z + x_N‖` per grid point.
    #[serde(with = "rational::serde_q_vec")]
    pub values: Vec<Rational>,
    #[serde(with = "rational::serde_q")]
    pub lower: Rational,
    pub ok: bool,
}

/// `1 − ε_N/4 ≤ ‖t z + x_N‖ < 1` for every `t` in the grid: the truncated
/// shadow of the segment `{λz + x** : λ ∈ [0,1]}` on the sphere.
pub fn segment_check(run: &RecursionRun, grid: &[Rational], n: usize) -> Result<SegmentReport> {
    if grid.is_empty() {
        return Err(Error::Precondition("empty t-grid".into()));
    }
    if n == 0 || n > run.steps() {
        return Err(Error::Precondition(format!("truncation must lie in 1..={}", run.steps())));
    }
    if grid.iter().any(|t| t.is_negative() || t > &int(1)) {
        return Err(Error::Precondition("t-grid values must lie in [0, 1]".into()));
    }
    let x = run.x(n);
    let values: Vec<Rational> = grid.iter().map(|t| x.lin_comb(&int(1), t, &run.z).sup_norm()).collect();
    let lower = height(&run.eps[n - 1]);
    let ok = values.iter().all(|v| v >= &lower && v < &int(1));
    Ok(SegmentReport { n, grid: grid.to_vec(), values, lower, ok })
}
