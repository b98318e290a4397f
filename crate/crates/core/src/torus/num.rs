//! Small exact-arithmetic helpers shared across the crate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

pub fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

pub fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits
}

/// `2^-k` as a rational.
pub fn inv_pow2(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), pow2(k))
}

/// Representative of `r mod 1` in `[0, 1)`.
pub fn frac(r: &BigRational) -> BigRational {
    let f = r.numer().mod_floor(r.denom());
    if f.is_zero() {
        return BigRational::zero();
    }
    // gcd(f, d) = gcd(n, d) = 1
    BigRational::new_raw(f, r.denom().clone())
}

/// Distance from `r` to the nearest integer.
pub fn norm_rat(r: &BigRational) -> BigRational {
    let d = r.denom();
    let f = r.numer().mod_floor(d);
    if f.is_zero() {
        return BigRational::zero();
    }
    let g = d - &f;
    BigRational::new_raw(f.min(g), d.clone())
}

pub fn half() -> BigRational {
    rat(1, 2)
}

pub fn quarter() -> BigRational {
    rat(1, 4)
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        BigInt::zero()
    } else {
        a.lcm(b)
    }
}

pub fn parse_int(s: &str) -> Result<BigInt> {
    s.trim()
        .parse::<BigInt>()
        .map_err(|_| Error::parse(format!("not an integer: {s:?}")))
}

/// Parses `p`, `p/q` or `-p/q`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` digits after the point, truncated toward zero.
pub fn decimal(r: &BigRational, digits: usize) -> String {
    let neg = r.is_negative();
    let a = r.abs();
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (a * BigRational::from_integer(scale.clone())).floor().to_integer();
    let (ip, fp) = scaled.div_rem(&scale);
    let mut s = String::new();
    if neg && !(ip.is_zero() && fp.is_zero()) {
        s.push('-');
    }
    s.push_str(&ip.to_string());
    if digits > 0 {
        s.push('.');
        s.push_str(&format!("{:0>width$}", fp.to_string(), width = digits));
    }
    s
}

/// Integer square root check: returns `Some(r)` when `n = r^2`.
pub fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_and_norm() {
        assert_eq!(frac(&rat(-1, 3)), rat(2, 3));
        assert_eq!(norm_rat(&rat(7, 10)), rat(3, 10));
        assert_eq!(norm_rat(&rat(1, 2)), rat(1, 2));
        assert_eq!(norm_rat(&rat(-6, 5)), rat(1, 5));
    }

    #[test]
    fn rounding_division() {
        assert_eq!(floor_div(&int(-7), &int(2)), int(-4));
        assert_eq!(ceil_div(&int(-7), &int(2)), int(-3));
        assert_eq!(ceil_div(&int(7), &int(2)), int(4));
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(fmt_rational(&rat(4, 2)), "2");
        assert!(parse_rational("1/0").is_err());
        assert_eq!(decimal(&rat(1, 3), 4), "0.3333");
        assert_eq!(decimal(&rat(-5, 4), 2), "-1.25");
    }
}
