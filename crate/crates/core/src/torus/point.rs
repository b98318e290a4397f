use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::num::{lcm, parse_int};
use super::value::{CircleValue, NormValue};
use crate::error::{check_dim, Error, Result};

/// A point of `T^d`. Points of a truncated `T^omega` are stored with their
/// truncation length as dimension; all later coordinates are exactly zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusPoint(Vec<CircleValue>);

/// An integer vector acting on `T^d` by `x -> sum phi_i x_i mod 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character(Vec<BigInt>);

impl TorusPoint {
    pub fn new(coords: Vec<CircleValue>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("torus point needs at least one coordinate"));
        }
        Ok(TorusPoint(coords))
    }

    pub fn zero(dim: usize) -> Self {
        TorusPoint(vec![CircleValue::zero(); dim.max(1)])
    }

    pub fn from_rationals(coords: &[BigRational]) -> Result<Self> {
        TorusPoint::new(coords.iter().cloned().map(CircleValue::rational).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[CircleValue] {
        &self.0
    }

    pub fn is_rational(&self) -> bool {
        self.0.iter().all(CircleValue::is_rational)
    }

    pub fn rational_coords(&self) -> Option<Vec<BigRational>> {
        self.0.iter().map(|c| c.as_rational().cloned()).collect()
    }

    /// Least common denominator of the coordinates (rational points only).
    pub fn denominator(&self) -> Option<BigInt> {
        let mut q = BigInt::one();
        for c in &self.0 {
            q = lcm(&q, c.as_rational()?.denom());
        }
        Some(q)
    }

    pub fn add(&self, other: &TorusPoint) -> Result<TorusPoint> {
        check_dim(self.dim(), other.dim())?;
        Ok(TorusPoint(self.0.iter().zip(&other.0).map(|(a, b)| a.add(b)).collect()))
    }

    pub fn sub(&self, other: &TorusPoint) -> Result<TorusPoint> {
        check_dim(self.dim(), other.dim())?;
        Ok(TorusPoint(self.0.iter().zip(&other.0).map(|(a, b)| a.sub(b)).collect()))
    }

    pub fn neg(&self) -> TorusPoint {
        TorusPoint(self.0.iter().map(CircleValue::neg).collect())
    }

    pub fn scale(&self, k: &BigInt) -> TorusPoint {
        TorusPoint(self.0.iter().map(|c| c.scale(k)).collect())
    }

    pub fn is_zero(&self) -> Option<bool> {
        let mut all = true;
        for c in &self.0 {
            match c.is_zero() {
                Some(true) => {}
                Some(false) => return Some(false),
                None => all = false,
            }
        }
        if all {
            Some(true)
        } else {
            None
        }
    }
}

impl Character {
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("character needs at least one coefficient"));
        }
        Ok(Character(coeffs))
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Character(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn scalar(k: BigInt) -> Self {
        Character(vec![k])
    }

    pub fn zero(dim: usize) -> Self {
        Character(vec![BigInt::zero(); dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn max_abs(&self) -> BigInt {
        self.0.iter().map(|c| c.abs()).max().unwrap_or_default()
    }

    /// Highest index with a nonzero coefficient, if any.
    pub fn support_end(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Character) -> Result<Character> {
        check_dim(self.dim(), other.dim())?;
        Ok(Character(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn neg(&self) -> Character {
        Character(self.0.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: &BigInt) -> Character {
        Character(self.0.iter().map(|c| c * k).collect())
    }

    /// `phi` or `-phi`, whichever has a positive leading nonzero coefficient.
    pub fn canonical_sign(&self) -> Character {
        match self.0.iter().find(|c| !c.is_zero()) {
            Some(c) if c.is_negative() => self.neg(),
            _ => self.clone(),
        }
    }

    /// Pads or checks the length for use on a truncated `T^omega` of length `dim`.
    pub fn padded(&self, dim: usize) -> Result<Character> {
        if self.dim() > dim {
            if self.0[dim..].iter().all(Zero::is_zero) {
                return Ok(Character(self.0[..dim].to_vec()));
            }
            return Err(Error::DimensionMismatch { expected: dim, found: self.dim() });
        }
        let mut v = self.0.clone();
        v.resize(dim, BigInt::zero());
        Ok(Character(v))
    }

    pub fn dot_rational(&self, coords: &[BigRational]) -> Result<BigRational> {
        check_dim(self.dim(), coords.len())?;
        Ok(self
            .0
            .iter()
            .zip(coords)
            .fold(BigRational::zero(), |acc, (k, x)| acc + x * BigRational::from_integer(k.clone())))
    }
}

/// `phi(x) = sum phi_i x_i mod 1`. Exact for rational points and for points
/// whose irrational coordinates share one quadratic field.
pub fn eval_char(phi: &Character, x: &TorusPoint) -> Result<CircleValue> {
    check_dim(phi.dim(), x.dim())?;
    let mut acc: Option<CircleValue> = None;
    for (k, c) in phi.0.iter().zip(&x.0) {
        if !k.is_zero() {
            let term = c.scale(k);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
    }
    Ok(acc.unwrap_or_else(CircleValue::zero))
}

/// `||phi(x)||`.
pub fn char_norm(phi: &Character, x: &TorusPoint) -> Result<NormValue> {
    eval_char(phi, x)?.norm()
}

/// Splits `s` at commas that are not nested inside parentheses or brackets.
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Splits a coordinate list, keeping `sqrt(D):a,b,c` together.
pub(crate) fn split_coords(body: &str) -> Vec<String> {
    let pieces = split_top_level(body, ',');
    let mut out = Vec::new();
    let mut i = 0;
    while i < pieces.len() {
        let p = pieces[i].trim();
        if p.starts_with("sqrt(") && i + 2 < pieces.len() {
            out.push(format!("{},{},{}", p, pieces[i + 1].trim(), pieces[i + 2].trim()));
            i += 3;
        } else {
            out.push(p.to_string());
            i += 1;
        }
    }
    out
}

/// Strips one pair of tuple parentheses, but not the `sqrt(...)` prefix.
fn strip_tuple(s: &str) -> Option<&str> {
    let s = s.trim();
    if s.starts_with('(') && s.ends_with(')') {
        Some(&s[1..s.len() - 1])
    } else {
        None
    }
}

impl FromStr for TorusPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match strip_tuple(s) {
            Some(body) => TorusPoint::new(
                split_coords(body).iter().map(|c| c.parse()).collect::<Result<Vec<_>>>()?,
            ),
            None => TorusPoint::new(vec![s.parse()?]),
        }
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Character {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = strip_tuple(s).unwrap_or(s);
        Character::new(body.split(',').map(parse_int).collect::<Result<Vec<_>>>()?)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for TorusPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TorusPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            serde_json::Value::Array(items) => {
                let coords = items
                    .iter()
                    .map(|it| match it {
                        serde_json::Value::String(s) => s.parse::<CircleValue>(),
                        serde_json::Value::Number(n) => n.to_string().parse::<CircleValue>(),
                        other => Err(Error::parse(format!("bad coordinate {other}"))),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(serde::de::Error::custom)?;
                TorusPoint::new(coords).map_err(serde::de::Error::custom)
            }
            serde_json::Value::Number(n) => n.to_string().parse().map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected a torus point, got {other}"))),
        }
    }
}

fn int_to_json(k: &BigInt) -> serde_json::Value {
    match i64::try_from(k) {
        Ok(v) => serde_json::Value::from(v),
        Err(_) => serde_json::Value::String(k.to_string()),
    }
}

fn int_from_json(v: &serde_json::Value) -> Result<BigInt> {
    match v {
        serde_json::Value::Number(n) => parse_int(&n.to_string()),
        serde_json::Value::String(s) => parse_int(s),
        other => Err(Error::parse(format!("expected an integer, got {other}"))),
    }
}

/// One-dimensional characters serialize as a bare integer (a string when it
/// exceeds `i64`); higher-dimensional ones as arrays of those.
impl Serialize for Character {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.len() == 1 {
            int_to_json(&self.0[0]).serialize(s)
        } else {
            serde_json::Value::Array(self.0.iter().map(int_to_json).collect()).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Character {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let coeffs = match &v {
            serde_json::Value::Array(items) => items.iter().map(int_from_json).collect::<Result<Vec<_>>>(),
            serde_json::Value::String(s) if s.trim_start().starts_with('(') => {
                s.parse::<Character>().map(Character::into_coeffs)
            }
            other => int_from_json(other).map(|k| vec![k]),
        }
        .map_err(serde::de::Error::custom)?;
        Character::new(coeffs).map_err(serde::de::Error::custom)
    }
}
