use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::num::floor_div;
use super::surd::QuadSurd;
use super::value::{CircleValue, Precision};
use crate::error::{Error, Result};

/// Eventually periodic continued fraction `[a0; a1, ...]` of a quadratic irrational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub preperiod: Vec<BigInt>,
    pub period: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigInt,
    pub q: BigInt,
}

/// `floor((p + sqrt(disc)) / q)` with `disc` a non-square.
fn floor_surd(p: &BigInt, disc: &BigInt, q: &BigInt) -> BigInt {
    let s = disc.sqrt();
    if q.is_positive() {
        floor_div(&(p + &s), q)
    } else {
        floor_div(&(-p - &s - 1), &-q)
    }
}

impl ContinuedFraction {
    pub fn of(x: &QuadSurd) -> ContinuedFraction {
        // Write x = (P + sqrt(D)) / Q with Q | D - P^2.
        let bb = x.b() * x.b() * x.d();
        let (mut p, mut q) = if x.b().is_positive() {
            (x.a().clone(), x.c().clone())
        } else {
            (-x.a(), -x.c())
        };
        let mut disc = bb;
        if !((&disc - &p * &p) % &q).is_zero() {
            let qa = q.abs();
            p *= &qa;
            disc = disc * &q * &q;
            q *= &qa;
        }
        let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
        let mut terms = Vec::new();
        loop {
            if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
                let period = terms.split_off(start);
                return ContinuedFraction { preperiod: terms, period };
            }
            seen.insert((p.clone(), q.clone()), terms.len());
            let a = floor_surd(&p, &disc, &q);
            let np = &a * &q - &p;
            let nq = (&disc - &np * &np) / &q;
            terms.push(a);
            p = np;
            q = nq;
        }
    }

    pub fn term(&self, i: usize) -> &BigInt {
        if i < self.preperiod.len() {
            &self.preperiod[i]
        } else {
            &self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    pub fn terms(&self, k: usize) -> Vec<BigInt> {
        (0..k).map(|i| self.term(i).clone()).collect()
    }

    pub fn convergents(&self, k: usize) -> Vec<Convergent> {
        let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
        let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let a = self.term(i);
            let p = a * &p1 + &p2;
            let q = a * &q1 + &q2;
            out.push(Convergent { p: p.clone(), q: q.clone() });
            p2 = std::mem::replace(&mut p1, p);
            q2 = std::mem::replace(&mut q1, q);
        }
        out
    }
}

pub(crate) fn require_quadratic(alpha: &CircleValue) -> Result<&QuadSurd> {
    match alpha {
        CircleValue::Quadratic(q) => Ok(q),
        other => Err(Error::invalid(format!("expected a quadratic irrational, got {other}"))),
    }
}

/// The first `k` convergents of `alpha` (its representative in `(0,1)`),
/// each checked against `|alpha - p/q| < 1/(q q')` with interval arithmetic.
pub fn cf_convergents(alpha: &CircleValue, k: usize, prec: &Precision) -> Result<Vec<Convergent>> {
    let q = require_quadratic(alpha)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let cf = ContinuedFraction::of(q);
    let all = cf.convergents(k + 1);
    for w in all.windows(2) {
        verify_convergent(q, &w[0], &w[1].q, prec)?;
    }
    Ok(all[..k].to_vec())
}

fn verify_convergent(alpha: &QuadSurd, c: &Convergent, next_q: &BigInt, prec: &Precision) -> Result<()> {
    let target = BigRational::new(c.p.clone(), c.q.clone());
    let bound = BigRational::new(BigInt::one(), &c.q * next_q);
    let mut last = prec.start_bits;
    for bits in prec.schedule() {
        last = bits;
        let iv = alpha.enclose(bits);
        let err_hi = (iv.hi() - &target).abs().max((iv.lo() - &target).abs());
        if err_hi < bound {
            return Ok(());
        }
    }
    Err(Error::PrecisionExhausted { bits: last, context: format!("convergent {}/{} not verified", c.p, c.q) })
}
