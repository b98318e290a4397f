use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::num::{ceil_div, floor_div, pow2};
use crate::error::{Error, Result};

/// A closed dyadic interval `[lo / 2^bits, hi / 2^bits]` on the real line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

impl Interval {
    pub fn new(lo: BigInt, hi: BigInt, bits: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("interval bounds out of order: {lo} > {hi}")));
        }
        Ok(Interval { lo, hi, bits })
    }

    /// Smallest interval on the `2^-bits` grid containing `r`.
    pub fn enclose_rational(r: &BigRational, bits: u32) -> Self {
        let scale = pow2(bits);
        let n = r.numer() * &scale;
        Interval {
            lo: floor_div(&n, r.denom()),
            hi: ceil_div(&n, r.denom()),
            bits,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo_numer(&self) -> &BigInt {
        &self.lo
    }

    pub fn hi_numer(&self) -> &BigInt {
        &self.hi
    }

    pub fn lo(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.bits))
    }

    pub fn hi(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.bits))
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, pow2(self.bits))
    }

    pub fn midpoint(&self) -> BigRational {
        BigRational::new(&self.hi + &self.lo, pow2(self.bits + 1))
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        self.lo() <= *r && *r <= self.hi()
    }

    /// Re-expresses the interval on a `2^-bits` grid, rounding outward.
    pub fn at_bits(&self, bits: u32) -> Self {
        if bits >= self.bits {
            let s = bits - self.bits;
            Interval { lo: &self.lo << s, hi: &self.hi << s, bits }
        } else {
            let d = pow2(self.bits - bits);
            Interval { lo: floor_div(&self.lo, &d), hi: ceil_div(&self.hi, &d), bits }
        }
    }

    pub fn add(&self, other: &Interval) -> Self {
        let bits = self.bits.max(other.bits);
        let a = self.at_bits(bits);
        let b = other.at_bits(bits);
        Interval { lo: a.lo + b.lo, hi: a.hi + b.hi, bits }
    }

    pub fn add_rational(&self, r: &BigRational) -> Self {
        self.add(&Interval::enclose_rational(r, self.bits))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        let (lo, hi) = if k.is_negative() {
            (&self.hi * k, &self.lo * k)
        } else {
            (&self.lo * k, &self.hi * k)
        };
        Interval { lo, hi, bits: self.bits }
    }

    /// Exact multiplication by `2^-k`.
    pub fn scale_pow2(&self, k: u32) -> Self {
        Interval { lo: self.lo.clone(), hi: self.hi.clone(), bits: self.bits + k }
    }

    pub fn neg(&self) -> Self {
        Interval { lo: -&self.hi, hi: -&self.lo, bits: self.bits }
    }

    pub fn max(&self, other: &Interval) -> Self {
        let bits = self.bits.max(other.bits);
        let a = self.at_bits(bits);
        let b = other.at_bits(bits);
        Interval { lo: a.lo.max(b.lo), hi: a.hi.max(b.hi), bits }
    }

    pub fn min(&self, other: &Interval) -> Self {
        let bits = self.bits.max(other.bits);
        let a = self.at_bits(bits);
        let b = other.at_bits(bits);
        Interval { lo: a.lo.min(b.lo), hi: a.hi.min(b.hi), bits }
    }

    /// Shifts by an integer so that the lower bound lies in `[0, 1)`.
    pub fn reduce_mod1(&self) -> Self {
        let one = pow2(self.bits);
        let k = floor_div(&self.lo, &one);
        if k.is_zero() {
            return self.clone();
        }
        let shift = k * one;
        Interval { lo: &self.lo - &shift, hi: &self.hi - &shift, bits: self.bits }
    }

    /// Enclosure of `{ ||v|| : v in self }`.
    pub fn norm_enclosure(&self) -> Result<Interval> {
        let s = if self.bits == 0 { self.at_bits(1) } else { self.clone() };
        let one = pow2(s.bits);
        let half = pow2(s.bits - 1);
        if &s.hi - &s.lo >= half {
            return Err(Error::PrecisionExhausted {
                bits: s.bits,
                context: "interval too wide to bound its norm".into(),
            });
        }
        let r = s.reduce_mod1();
        let nrm = |v: &BigInt| {
            let m = v.mod_floor(&one);
            let other = &one - &m;
            if m <= other {
                m
            } else {
                other
            }
        };
        let (nl, nh) = (nrm(&r.lo), nrm(&r.hi));
        let lower = if r.hi >= one { BigInt::zero() } else { nl.clone().min(nh.clone()) };
        let contains_half = (r.lo <= half && half <= r.hi) || {
            let h2 = &half + &one;
            r.lo <= h2 && h2 <= r.hi
        };
        let upper = if contains_half { half } else { nl.max(nh) };
        Ok(Interval { lo: lower, hi: upper, bits: r.bits })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]@{}", self.lo, self.hi, self.bits)
    }
}
