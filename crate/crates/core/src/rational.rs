//! Exact rational scalars.
//!
//! All scalars in the crate are arbitrary-precision rationals backed by
//! `num-rational`. This module adds the parsing and rendering conventions
//! used by the JSON formats (`"p/q"` strings) plus a few exact helpers:
//! powers of two, floors of square roots and best rational square-root
//! approximations from below.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n/d`, reduced. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact `2^e` for any integer exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Parses `"p/q"`, `"p"`, or a plain decimal such as `"0.0001"` exactly.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::BadRational(s.to_string()));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| Error::BadRational(s.to_string()))?;
        let d: BigInt = d.trim().parse().map_err(|_| Error::BadRational(s.to_string()))?;
        if d.is_zero() {
            return Err(Error::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::BadRational(s.to_string()));
        }
        let whole: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| Error::BadRational(s.to_string()))?
        };
        let frac_int: BigInt = frac.parse().map_err(|_| Error::BadRational(s.to_string()))?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = Rational::new(whole * &scale + frac_int, scale);
        return Ok(if negative { -mag } else { mag });
    }
    let n: BigInt = t.parse().map_err(|_| Error::BadRational(s.to_string()))?;
    Ok(Rational::from_integer(n))
}

/// Canonical `"p/q"` rendering; integers keep the `/1`.
pub fn format(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Floor of the square root of a nonnegative integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    assert!(n.sign() != Sign::Minus, "isqrt of a negative number");
    n.sqrt()
}

/// Decimal rendering of `floor(sqrt(x) * 10^digits) / 10^digits`, computed
/// exactly. `x` must be nonnegative.
pub fn sqrt_decimal(x: &Rational, digits: u32) -> String {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    let scale = num_traits::pow(BigInt::from(10), 2 * digits as usize);
    let scaled = (x.numer() * scale).div_floor(x.denom());
    let root = isqrt(&scaled);
    let unit = num_traits::pow(BigInt::from(10), digits as usize);
    let (whole, frac) = root.div_rem(&unit);
    if digits == 0 {
        whole.to_string()
    } else {
        format!("{}.{:0>width$}", whole, frac.to_string(), width = digits as usize)
    }
}

/// The largest `p/q <= sqrt(x)` with `1 <= q <= max_den`, found by a
/// Stern-Brocot descent that uses only exact comparisons `p^2 <= x q^2`.
pub fn rational_sqrt_floor(x: &Rational, max_den: &BigInt) -> Rational {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    assert!(max_den >= &BigInt::one(), "denominator bound must be >= 1");
    let (xn, xd) = (x.numer().clone(), x.denom().clone());
    // p/q <= sqrt(xn/xd)  <=>  p^2 xd <= xn q^2
    let below = |p: &BigInt, q: &BigInt| p * p * &xd <= &xn * q * q;

    let (mut lp, mut lq) = (BigInt::zero(), BigInt::one());
    let (mut hp, mut hq) = (BigInt::one(), BigInt::zero());
    loop {
        let mq = &lq + &hq;
        if &mq > max_den {
            break;
        }
        let mp = &lp + &hp;
        if below(&mp, &mq) {
            let ok = |k: &BigInt| {
                let q = &lq + k * &hq;
                &q <= max_den && below(&(&lp + k * &hp), &q)
            };
            let k = max_true(ok);
            lp += &k * &hp;
            lq += &k * &hq;
        } else {
            let ok = |k: &BigInt| {
                let q = &hq + k * &lq;
                &q <= max_den && !below(&(&hp + k * &lp), &q)
            };
            let k = max_true(ok);
            hp += &k * &lp;
            hq += &k * &lq;
        }
    }
    Rational::new(lp, lq)
}

/// Largest `k >= 1` with `pred(k)`, assuming `pred(1)` holds and `pred` is
/// monotone (true then false).
fn max_true(pred: impl Fn(&BigInt) -> bool) -> BigInt {
    let mut lo = BigInt::one();
    let mut hi = BigInt::from(2);
    while pred(&hi) {
        lo = hi.clone();
        hi <<= 1;
    }
    // pred(lo) holds, pred(hi) fails
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1;
        if pred(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest `p >= 0` with `2^p * eps >= 1`, i.e. `ceil(log2(1/eps))` for
/// `0 < eps <= 1`, and 0 for `eps >= 1`.
pub fn ceil_log2_recip(eps: &Rational) -> u32 {
    assert!(eps.is_positive(), "eps must be positive");
    let mut p = 0u32;
    let mut scaled = eps.clone();
    let one = Rational::one();
    while scaled < one {
        scaled *= int(2);
        p += 1;
    }
    p
}

/// `(de)serialize_with` helpers for `"p/q"` strings.
pub mod serde_q {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse(&raw).map_err(D::Error::custom)
    }
}

pub mod serde_q_vec {
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(qs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(qs.len()))?;
        for q in qs {
            seq.serialize_element(&super::format(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|r| super::parse(r).map_err(D::Error::custom))
            .collect()
    }
}

pub mod serde_q_mat {
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(rows: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            let row: Vec<String> = row.iter().map(super::format).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|row| row.iter().map(|r| super::parse(r).map_err(D::Error::custom)).collect())
            .collect()
    }
}
