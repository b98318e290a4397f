//! Concrete characterizing sets: factorials, Prüfer groups and continued
//! fraction denominators, plus factorial digit expansions.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::charset::CharSet;
use crate::error::{Error, Result};
use crate::torus::cf::cf_convergents;
use crate::torus::num::{factorial, floor_div, quarter};
use crate::torus::{Character, CircleValue, Interval, Precision, QuadSurd};

/// `B` with level `n` (1-based, stored at index `n - 1`) equal to
/// `{k n! : 0 < k <= n}`.
pub fn factorial_charset(n_max: u64) -> Result<CharSet> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let levels = (1..=n_max)
        .map(|n| {
            let f = factorial(n);
            (1..=n).map(|k| Character::scalar(&f * k)).collect()
        })
        .collect();
    CharSet::new(1, levels)
}

/// `{p^n : 0 <= n < n_max}`, one power per level.
pub fn prufer_charset(p: u64, n_max: u64) -> Result<CharSet> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let p = BigInt::from(p);
    let seq = (0..n_max).map(|n| Character::scalar(num_traits::pow(p.clone(), n as usize))).collect();
    CharSet::from_sequence(1, seq)
}

/// Continued-fraction denominators `q_1, ..., q_k` of `alpha`, deduplicated.
pub fn cyclic_cf_charset(alpha: &CircleValue, k_max: usize) -> Result<CharSet> {
    let conv = cf_convergents(alpha, k_max, &Precision::default())?;
    CharSet::from_sequence(1, conv.into_iter().map(|c| Character::scalar(c.q)).collect())
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Digits of `x = sum_{n >= 1} c_n / (n+1)!` with `0 <= c_n <= n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorialDigits {
    pub x: CircleValue,
    /// `c_1, ..., c_N`.
    #[serde(serialize_with = "ser_digits")]
    pub digits: Vec<BigInt>,
    /// True when the expansion terminated: every later digit is zero.
    pub terminating: bool,
}

fn ser_digits<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for d in v {
        seq.serialize_element(&d.to_u64().expect("digits are small"))?;
    }
    seq.end()
}

impl FactorialDigits {
    /// `c_n` for `1 <= n <= N`.
    pub fn digit(&self, n: usize) -> Option<&BigInt> {
        n.checked_sub(1).and_then(|i| self.digits.get(i))
    }

    /// `sum_{n <= N} c_n / (n+1)!`.
    pub fn partial_sum(&self) -> BigRational {
        self.digits
            .iter()
            .enumerate()
            .map(|(i, c)| BigRational::new(c.clone(), factorial(i as u64 + 2)))
            .sum()
    }
}

/// Greedy factorial expansion to depth `depth`.
///
/// Rational and quadratic inputs are expanded exactly; interval inputs fail
/// once a digit can no longer be determined.
pub fn factorial_expand(x: &CircleValue, depth: usize) -> Result<FactorialDigits> {
    let mut digits = Vec::with_capacity(depth);
    let mut terminating = false;
    match x {
        CircleValue::Rational(r) => {
            let mut rest = r.clone();
            for n in 1..=depth as u64 {
                rest *= BigRational::from_integer((n + 1).into());
                let c = rest.floor().to_integer();
                rest -= BigRational::from_integer(c.clone());
                digits.push(c);
            }
            terminating = rest.is_zero();
        }
        CircleValue::Quadratic(q) => {
            let mut rest: QuadSurd = q.clone();
            for n in 1..=depth as u64 {
                rest = rest.scale(&BigInt::from(n + 1)).expect("nonzero factor");
                let c = rest.floor();
                rest = rest.add_rational(&BigRational::from_integer(-&c));
                digits.push(c);
            }
        }
        CircleValue::Interval(iv) => {
            let mut rest: Interval = iv.clone();
            for n in 1..=depth as u64 {
                rest = rest.scale(&BigInt::from(n + 1));
                let one = BigInt::one() << rest.bits();
                let lo = floor_div(rest.lo_numer(), &one);
                let hi = floor_div(rest.hi_numer(), &one);
                if lo != hi {
                    return Err(Error::PrecisionExhausted {
                        bits: rest.bits(),
                        context: format!("factorial digit {n} of {x} is not determined by the enclosure"),
                    });
                }
                rest = rest.add_rational(&BigRational::from_integer(-&lo));
                digits.push(lo);
            }
        }
    }
    Ok(FactorialDigits { x: x.clone(), digits, terminating })
}

/// A verified pair with `||k n! x|| >= 1/4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessPair {
    pub k: u64,
    pub n: u64,
    /// `c_n` is neither `0` nor `n`, which is the case where the
    /// factorial-expansion argument guarantees a witness.
    pub digit_guaranteed: bool,
    /// Verified lower bound on `||k n! x||`.
    #[serde(serialize_with = "ser_rational")]
    pub lower: BigRational,
}

fn ser_rational<S: serde::Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::torus::num::fmt_rational(v))
}

/// Scans `k = 1..n` for `||k n! x|| >= 1/4`, verified by exact arithmetic or
/// refined intervals, and returns the first hit.
pub fn witness_pair(x: &CircleValue, n: u64, prec: &Precision) -> Result<Option<WitnessPair>> {
    if n == 0 {
        return Err(Error::invalid("levels start at n = 1"));
    }
    let digits = factorial_expand(x, n as usize)?;
    let c = digits.digit(n as usize).expect("expanded to depth n");
    let digit_guaranteed = !c.is_zero() && *c != BigInt::from(n);
    let f = factorial(n);
    let quarter = quarter();
    for k in 1..=n {
        let v = x.scale(&(&f * k));
        if v.cmp_norm(&quarter, prec)? != Ordering::Less {
            let lower = v.norm()?.lower();
            return Ok(Some(WitnessPair { k, n, digit_guaranteed, lower }));
        }
    }
    Ok(None)
}

/// Witness pairs at every level `1..=n_max`.
pub fn witness_scan(x: &CircleValue, n_max: u64, prec: &Precision) -> Result<Vec<WitnessPair>> {
    let levels: Vec<u64> = (1..=n_max).collect();
    let found = crate::par::try_map(&levels, |&n| witness_pair(x, n, prec))?;
    Ok(found.into_iter().flatten().collect())
}

/// Smallest `N` with every later factorial level exactly annihilating the
/// rational `x`: the least `n` such that the denominator divides `n!`.
pub fn factorial_annihilation_level(x: &BigRational) -> u64 {
    let q = x.denom().abs();
    let mut n = 1u64;
    let mut f = BigInt::one();
    loop {
        if (&f % &q).is_zero() {
            return n;
        }
        n += 1;
        f *= n;
    }
}
