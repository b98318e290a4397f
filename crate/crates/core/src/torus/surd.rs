use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::interval::Interval;
use super::num::{ceil_div, exact_sqrt, floor_div};
use crate::error::{Error, Result};

/// The real number `(a + b*sqrt(d)) / c` with `c > 0`, `b != 0` and `d > 1`
/// square-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

/// Splits `d = k^2 * d'` with `d'` free of squares of primes below 10^5.
fn extract_square(d: &BigInt) -> (BigInt, BigInt) {
    let mut k = BigInt::one();
    let mut rest = d.clone();
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(100_000u32);
    while &p * &p <= rest && p < limit {
        let pp = &p * &p;
        while (&rest % &pp).is_zero() {
            rest /= &pp;
            k *= &p;
        }
        p += 1u32;
    }
    if let Some(r) = exact_sqrt(&rest) {
        return (k * r, BigInt::one());
    }
    (k, rest)
}

impl QuadSurd {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::invalid("quadratic irrational with zero denominator"));
        }
        if !d.is_positive() {
            return Err(Error::invalid(format!("discriminant must be positive, got {d}")));
        }
        if b.is_zero() {
            return Err(Error::invalid("quadratic irrational with b = 0 is rational"));
        }
        let (k, d) = extract_square(&d);
        if d.is_one() {
            return Err(Error::invalid("discriminant is a perfect square"));
        }
        let (mut a, mut b, mut c) = (a, b * k, c);
        if c.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        let g = a.gcd(&b).gcd(&c);
        if !g.is_one() {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        Ok(QuadSurd { a, b, c, d })
    }

    /// `sqrt(n) - floor(sqrt(n))`, convenience for the usual test panel.
    pub fn frac_sqrt(n: u64) -> Result<Self> {
        let s = BigInt::from(n).sqrt();
        Ok(QuadSurd::new(-s, BigInt::one(), BigInt::one(), BigInt::from(n))?.frac())
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    /// `floor(b*sqrt(d))` for either sign of `b`, plus whether `b > 0`.
    fn scaled_root(&self) -> BigInt {
        (&self.b * &self.b * &self.d).sqrt()
    }

    pub fn floor(&self) -> BigInt {
        let s = self.scaled_root();
        if self.b.is_positive() {
            floor_div(&(&self.a + s), &self.c)
        } else {
            floor_div(&(&self.a - s - 1), &self.c)
        }
    }

    /// The representative in `(0, 1)`.
    pub fn frac(&self) -> Self {
        let f = self.floor();
        QuadSurd { a: &self.a - f * &self.c, b: self.b.clone(), c: self.c.clone(), d: self.d.clone() }
    }

    pub fn add_rational(&self, r: &BigRational) -> Self {
        // (a + b s)/c + p/q = (a q + p c + b q s) / (c q)
        let (p, q) = (r.numer(), r.denom());
        QuadSurd::new(&self.a * q + p * &self.c, &self.b * q, &self.c * q, self.d.clone())
            .expect("b stays nonzero")
    }

    pub fn scale(&self, k: &BigInt) -> Option<Self> {
        if k.is_zero() {
            return None;
        }
        Some(QuadSurd::new(&self.a * k, &self.b * k, self.c.clone(), self.d.clone()).expect("b stays nonzero"))
    }

    pub fn neg(&self) -> Self {
        QuadSurd { a: -&self.a, b: -&self.b, c: self.c.clone(), d: self.d.clone() }
    }

    /// Sum with another surd over the same discriminant; `Err(r)` when the
    /// irrational parts cancel.
    pub fn add_same_field(&self, other: &QuadSurd) -> Option<std::result::Result<Self, BigRational>> {
        if self.d != other.d {
            return None;
        }
        let a = &self.a * &other.c + &other.a * &self.c;
        let b = &self.b * &other.c + &other.b * &self.c;
        let c = &self.c * &other.c;
        if b.is_zero() {
            return Some(Err(BigRational::new(a, c)));
        }
        Some(Ok(QuadSurd::new(a, b, c, self.d.clone()).expect("nonzero b")))
    }

    /// Sign of `x + y*sqrt(d)`, exact.
    fn sign_of(x: &BigInt, y: &BigInt, d: &BigInt) -> Ordering {
        let zero = BigInt::zero();
        match (x.cmp(&zero), y.cmp(&zero)) {
            (Ordering::Equal, s) => s,
            (s, Ordering::Equal) => s,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            (Ordering::Greater, Ordering::Less) => (x * x).cmp(&(y * y * d)),
            (Ordering::Less, Ordering::Greater) => (y * y * d).cmp(&(x * x)),
        }
    }

    /// Exact comparison with a rational. Never `Equal` since the surd is irrational.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        // (a + b s)/c - p/q has the sign of (a q - p c) + b q s.
        let x = &self.a * r.denom() - r.numer() * &self.c;
        let y = &self.b * r.denom();
        QuadSurd::sign_of(&x, &y, &self.d)
    }

    /// Dyadic enclosure of the real value with width at most `2^-bits`
    /// (expressed on the finer `2^-(bits+2)` grid).
    pub fn enclose(&self, bits: u32) -> Interval {
        let w = bits + 2;
        let scale = BigInt::one() << w;
        let s = (&self.b * &self.b * &self.d * &scale * &scale).sqrt();
        let base = &self.a * &scale;
        let (lo, hi) = if self.b.is_positive() {
            (&base + &s, &base + &s + 1)
        } else {
            (&base - &s - 1, &base - &s)
        };
        Interval::new(floor_div(&lo, &self.c), ceil_div(&hi, &self.c), w).expect("ordered")
    }

    pub fn to_f64(&self) -> f64 {
        let iv = self.enclose(60);
        let m = iv.midpoint();
        num_traits::ToPrimitive::to_f64(&m).unwrap_or(f64::NAN)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sqrt({}):{},{},{}", self.d, self.a, self.b, self.c)
    }
}
