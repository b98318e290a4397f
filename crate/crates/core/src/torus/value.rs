use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::interval::Interval;
use super::num::{fmt_rational, frac, norm_rat, parse_int, parse_rational};
use super::surd::QuadSurd;
use crate::error::{Error, Result};

/// Bit budget for interval refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub start_bits: u32,
    pub cap_bits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { start_bits: 64, cap_bits: 1 << 14 }
    }
}

impl Precision {
    /// The doubling schedule `start, 2*start, ...` up to the cap.
    pub fn schedule(&self) -> impl Iterator<Item = u32> {
        let cap = self.cap_bits.max(self.start_bits);
        std::iter::successors(Some(self.start_bits.max(1)), move |b| {
            let n = b.saturating_mul(2);
            (n <= cap).then_some(n)
        })
    }
}

/// A point of the circle `R/Z`, stored by its representative in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CircleValue {
    Rational(BigRational),
    Quadratic(QuadSurd),
    /// A verified enclosure; the lower bound lies in `[0, 1)`.
    Interval(Interval),
}

/// `||z||`, either exact or enclosed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormValue {
    Exact(BigRational),
    Enclosure(Interval),
}

/// Working precision used when two surds over different fields are mixed.
const MIXED_BITS: u32 = 256;

impl CircleValue {
    pub fn zero() -> Self {
        CircleValue::Rational(BigRational::zero())
    }

    pub fn rational(r: BigRational) -> Self {
        CircleValue::Rational(frac(&r))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        CircleValue::rational(BigRational::new(n.into(), d.into()))
    }

    pub fn quadratic(q: QuadSurd) -> Self {
        CircleValue::Quadratic(q.frac())
    }

    pub fn interval(iv: Interval) -> Self {
        CircleValue::Interval(iv.reduce_mod1())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            CircleValue::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, CircleValue::Rational(_))
    }

    /// `Some(true)` iff the value is exactly `0` in `T`; `None` when an
    /// interval cannot decide.
    pub fn is_zero(&self) -> Option<bool> {
        match self {
            CircleValue::Rational(r) => Some(r.is_zero()),
            CircleValue::Quadratic(_) => Some(false),
            CircleValue::Interval(iv) => {
                let one = BigRational::one();
                if iv.contains(&BigRational::zero()) || iv.contains(&one) {
                    None
                } else {
                    Some(false)
                }
            }
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            CircleValue::Rational(r) => CircleValue::rational(-r),
            CircleValue::Quadratic(q) => CircleValue::quadratic(q.neg()),
            CircleValue::Interval(iv) => CircleValue::interval(iv.neg()),
        }
    }

    pub fn add(&self, other: &CircleValue) -> Self {
        use CircleValue::*;
        match (self, other) {
            (Rational(a), Rational(b)) => CircleValue::rational(a + b),
            (Quadratic(q), Rational(r)) | (Rational(r), Quadratic(q)) => CircleValue::quadratic(q.add_rational(r)),
            (Quadratic(p), Quadratic(q)) => match p.add_same_field(q) {
                Some(Ok(s)) => CircleValue::quadratic(s),
                Some(Err(r)) => CircleValue::rational(r),
                None => CircleValue::interval(p.enclose(MIXED_BITS).add(&q.enclose(MIXED_BITS))),
            },
            (Interval(iv), other) | (other, Interval(iv)) => {
                CircleValue::interval(iv.add(&other.enclose(iv.bits())))
            }
        }
    }

    pub fn sub(&self, other: &CircleValue) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        match self {
            CircleValue::Rational(r) => {
                let d = r.denom();
                let n = (r.numer() * k.mod_floor(d)).mod_floor(d);
                CircleValue::Rational(BigRational::new(n, d.clone()))
            }
            CircleValue::Quadratic(q) => match q.scale(k) {
                Some(s) => CircleValue::quadratic(s),
                None => CircleValue::zero(),
            },
            CircleValue::Interval(iv) => CircleValue::interval(iv.scale(k)),
        }
    }

    /// Enclosure of the representative; rationals and surds are enclosed to
    /// width `<= 2^-bits`, user intervals are returned unchanged.
    pub fn enclose(&self, bits: u32) -> Interval {
        match self {
            CircleValue::Rational(r) => Interval::enclose_rational(r, bits),
            CircleValue::Quadratic(q) => q.enclose(bits),
            CircleValue::Interval(iv) => iv.clone(),
        }
    }

    pub fn refinable(&self) -> bool {
        !matches!(self, CircleValue::Interval(_))
    }

    pub fn norm_at(&self, bits: u32) -> Result<NormValue> {
        match self {
            CircleValue::Rational(r) => Ok(NormValue::Exact(norm_rat(r))),
            _ => Ok(NormValue::Enclosure(self.enclose(bits).norm_enclosure()?)),
        }
    }

    pub fn norm(&self) -> Result<NormValue> {
        self.norm_at(Precision::default().start_bits)
    }

    /// Decides `||self||` against `t`, refining enclosures by doubling the
    /// bit count up to the cap.
    pub fn cmp_norm(&self, t: &BigRational, prec: &Precision) -> Result<Ordering> {
        if let CircleValue::Rational(r) = self {
            return Ok(norm_rat(r).cmp(t));
        }
        let mut last = prec.start_bits;
        for bits in prec.schedule() {
            last = bits;
            match self.norm_at(bits) {
                Ok(n) => {
                    if let Some(o) = n.decide(t) {
                        return Ok(o);
                    }
                }
                Err(Error::PrecisionExhausted { .. }) if self.refinable() => {}
                Err(e) => return Err(e),
            }
            if !self.refinable() {
                break;
            }
        }
        Err(Error::PrecisionExhausted { bits: last, context: format!("cannot compare ||{self}|| with {}", fmt_rational(t)) })
    }

    fn variant_rank(&self) -> u8 {
        match self {
            CircleValue::Rational(_) => 0,
            CircleValue::Quadratic(_) => 1,
            CircleValue::Interval(_) => 2,
        }
    }
}

/// Canonical order: rationals numerically, then other kinds by text.
impl Ord for CircleValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (CircleValue::Rational(a), CircleValue::Rational(b)) => a.cmp(b),
            _ => self
                .variant_rank()
                .cmp(&other.variant_rank())
                .then_with(|| self.to_string().cmp(&other.to_string())),
        }
    }
}

impl PartialOrd for CircleValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NormValue {
    pub fn lower(&self) -> BigRational {
        match self {
            NormValue::Exact(r) => r.clone(),
            NormValue::Enclosure(iv) => iv.lo(),
        }
    }

    pub fn upper(&self) -> BigRational {
        match self {
            NormValue::Exact(r) => r.clone(),
            NormValue::Enclosure(iv) => iv.hi(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NormValue::Exact(_))
    }

    /// Error bound: zero for exact values, the width for enclosures.
    pub fn error(&self) -> BigRational {
        self.upper() - self.lower()
    }

    /// Compares with `t` if the enclosure allows it.
    pub fn decide(&self, t: &BigRational) -> Option<Ordering> {
        match self {
            NormValue::Exact(r) => Some(r.cmp(t)),
            NormValue::Enclosure(iv) => {
                if iv.hi() < *t {
                    Some(Ordering::Less)
                } else if iv.lo() > *t {
                    Some(Ordering::Greater)
                } else if iv.lo() == iv.hi() {
                    Some(iv.lo().cmp(t))
                } else {
                    None
                }
            }
        }
    }

    pub fn add(&self, other: &NormValue) -> NormValue {
        match (self, other) {
            (NormValue::Exact(a), NormValue::Exact(b)) => NormValue::Exact(a + b),
            _ => {
                let bits = self.bits().max(other.bits());
                NormValue::Enclosure(self.to_interval(bits).add(&other.to_interval(bits)))
            }
        }
    }

    pub fn max(&self, other: &NormValue) -> NormValue {
        match (self, other) {
            (NormValue::Exact(a), NormValue::Exact(b)) => NormValue::Exact(a.max(b).clone()),
            _ => {
                let bits = self.bits().max(other.bits());
                NormValue::Enclosure(self.to_interval(bits).max(&other.to_interval(bits)))
            }
        }
    }

    pub fn min(&self, other: &NormValue) -> NormValue {
        match (self, other) {
            (NormValue::Exact(a), NormValue::Exact(b)) => NormValue::Exact(a.min(b).clone()),
            _ => {
                let bits = self.bits().max(other.bits());
                NormValue::Enclosure(self.to_interval(bits).min(&other.to_interval(bits)))
            }
        }
    }

    pub fn scale_pow2(&self, k: u32) -> NormValue {
        match self {
            NormValue::Exact(r) => NormValue::Exact(r / BigRational::from_integer(BigInt::one() << k)),
            NormValue::Enclosure(iv) => NormValue::Enclosure(iv.scale_pow2(k)),
        }
    }

    fn bits(&self) -> u32 {
        match self {
            NormValue::Exact(_) => 0,
            NormValue::Enclosure(iv) => iv.bits(),
        }
    }

    fn to_interval(&self, bits: u32) -> Interval {
        match self {
            NormValue::Exact(r) => Interval::enclose_rational(r, bits),
            NormValue::Enclosure(iv) => iv.clone(),
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Exact(r) => write!(f, "{}", fmt_rational(r)),
            NormValue::Enclosure(iv) => write!(f, "{iv}"),
        }
    }
}

impl fmt::Display for CircleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircleValue::Rational(r) => write!(f, "{}", fmt_rational(r)),
            CircleValue::Quadratic(q) => write!(f, "{q}"),
            CircleValue::Interval(iv) => write!(f, "{iv}"),
        }
    }
}

/// Parses `p/q`, `sqrt(D):a,b,c` or `[lo,hi]@bits`; the result is reduced mod 1.
impl FromStr for CircleValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("sqrt(") {
            let (d, tail) = rest
                .split_once("):")
                .ok_or_else(|| Error::parse(format!("expected sqrt(D):a,b,c, got {s:?}")))?;
            let parts: Vec<&str> = tail.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::parse(format!("expected three coefficients in {s:?}")));
            }
            let q = QuadSurd::new(parse_int(parts[0])?, parse_int(parts[1])?, parse_int(parts[2])?, parse_int(d)?)?;
            return Ok(CircleValue::quadratic(q));
        }
        if let Some(rest) = s.strip_prefix('[') {
            let (body, bits) = rest
                .split_once("]@")
                .ok_or_else(|| Error::parse(format!("expected [lo,hi]@bits, got {s:?}")))?;
            let (lo, hi) = body
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("expected [lo,hi]@bits, got {s:?}")))?;
            let bits: u32 = bits.trim().parse().map_err(|_| Error::parse(format!("bad bit count in {s:?}")))?;
            return Ok(CircleValue::interval(Interval::new(parse_int(lo)?, parse_int(hi)?, bits)?));
        }
        Ok(CircleValue::rational(parse_rational(s)?))
    }
}

/// JSON form: the canonical text.
impl serde::Serialize for CircleValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for CircleValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => n.to_string().parse().map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected a circle value, got {other}"))),
        }
    }
}
