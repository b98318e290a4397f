//! Finite unions of arcs of `T = [0, 1)` with exact rational endpoints.
//!
//! Endpoints are "cuts": a rational `v` together with a side, so that `v-`
//! sits just below `v` and `v+` just above it. A span `(lo, hi)` holds the
//! points strictly between its two cuts, which encodes open, closed and
//! half-open ends uniformly: `[a, b] = (a-, b+)`, `(a, b) = (a+, b-)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::torus::num::{ceil_div, floor_div, fmt_rational, half, parse_rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cut {
    pub value: BigRational,
    /// `true` for `v+`, `false` for `v-`.
    pub after: bool,
}

impl Cut {
    pub fn below(value: BigRational) -> Cut {
        Cut { value, after: false }
    }

    pub fn above(value: BigRational) -> Cut {
        Cut { value, after: true }
    }

    fn shift(&self, k: &BigInt) -> Cut {
        Cut { value: &self.value + BigRational::from_integer(k.clone()), after: self.after }
    }

    /// Image under `t -> (t - c) / s`; a negative `s` swaps the side.
    fn affine_inverse(&self, s: &BigInt, c: &BigRational) -> Cut {
        let value = (&self.value - c) / BigRational::from_integer(s.clone());
        Cut { value, after: self.after != s.is_negative() }
    }

    /// Whether the point `x` lies above this cut.
    fn below_point(&self, x: &BigRational) -> bool {
        self.value < *x || (self.value == *x && !self.after)
    }

    /// Whether the point `x` lies below this cut.
    fn above_point(&self, x: &BigRational) -> bool {
        *x < self.value || (*x == self.value && self.after)
    }
}

impl Ord for Cut {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value).then(self.after.cmp(&other.after))
    }
}

impl PartialOrd for Cut {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The points strictly between two cuts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub lo: Cut,
    pub hi: Cut,
}

impl Span {
    pub fn new(lo: Cut, hi: Cut) -> Span {
        Span { lo, hi }
    }

    pub fn closed(a: BigRational, b: BigRational) -> Span {
        Span::new(Cut::below(a), Cut::above(b))
    }

    pub fn open(a: BigRational, b: BigRational) -> Span {
        Span::new(Cut::above(a), Cut::below(b))
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn length(&self) -> BigRational {
        if self.is_empty() {
            BigRational::zero()
        } else {
            &self.hi.value - &self.lo.value
        }
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.lo.below_point(x) && self.hi.above_point(x)
    }

    /// Some point of a non-empty span.
    pub fn sample(&self) -> BigRational {
        if self.lo.value == self.hi.value {
            self.lo.value.clone()
        } else {
            (&self.lo.value + &self.hi.value) * half()
        }
    }

    pub fn lo_text(&self) -> String {
        format!("{}{}", if self.lo.after { '(' } else { '[' }, fmt_rational(&self.lo.value))
    }

    pub fn hi_text(&self) -> String {
        format!("{}{}", fmt_rational(&self.hi.value), if self.hi.after { ']' } else { ')' })
    }

    /// Parses the bracketed endpoint pair produced by [`Span::lo_text`] and [`Span::hi_text`].
    pub fn from_texts(lo: &str, hi: &str) -> Result<Span> {
        let lo = lo.trim();
        let hi = hi.trim();
        let after_lo = match lo.chars().next() {
            Some('[') => false,
            Some('(') => true,
            _ => return Err(Error::parse(format!("arc start must begin with '[' or '(': {lo:?}"))),
        };
        let after_hi = match hi.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(Error::parse(format!("arc end must finish with ']' or ')': {hi:?}"))),
        };
        Ok(Span::new(
            Cut { value: parse_rational(&lo[1..])?, after: after_lo },
            Cut { value: parse_rational(&hi[..hi.len() - 1])?, after: after_hi },
        ))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lo_text(), self.hi_text())
    }
}

impl FromStr for Span {
    type Err = Error;

    fn from_str(s: &str) -> Result<Span> {
        let (lo, hi) = s.split_once(',').ok_or_else(|| Error::parse(format!("arc needs two endpoints: {s:?}")))?;
        Span::from_texts(lo, hi)
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo_text(), self.hi_text()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        Span::from_texts(&lo, &hi).map_err(serde::de::Error::custom)
    }
}

/// A subset of `T` given by sorted, disjoint, non-touching spans inside
/// `(0-, 1-)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcSet {
    spans: Vec<Span>,
}

fn circle_lo() -> Cut {
    Cut::below(BigRational::zero())
}

fn circle_hi() -> Cut {
    Cut::below(BigRational::one())
}

impl ArcSet {
    pub fn empty() -> ArcSet {
        ArcSet { spans: Vec::new() }
    }

    pub fn full() -> ArcSet {
        ArcSet { spans: vec![Span::new(circle_lo(), circle_hi())] }
    }

    /// Normalizes arbitrary spans lying inside `(0-, 1-)`.
    pub fn from_spans(mut spans: Vec<Span>) -> ArcSet {
        spans.retain(|s| !s.is_empty());
        spans.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut out: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match out.last_mut() {
                Some(last) if last.hi >= s.lo => {
                    if s.hi > last.hi {
                        last.hi = s.hi;
                    }
                }
                _ => out.push(s),
            }
        }
        ArcSet { spans: out }
    }

    /// The image in `T` of a span of the real line.
    pub fn from_real(span: &Span) -> ArcSet {
        if span.is_empty() {
            return ArcSet::empty();
        }
        let k = floor_div(span.lo.value.numer(), span.lo.value.denom());
        let lo = span.lo.shift(&-&k);
        let hi = span.hi.shift(&-&k);
        if &hi.value - &lo.value > BigRational::one() {
            return ArcSet::full();
        }
        let mut pieces = Vec::new();
        let mut j = BigInt::zero();
        while Cut::below(BigRational::from_integer(j.clone())) < hi {
            let start = Cut::below(BigRational::from_integer(j.clone()));
            let end = Cut::below(BigRational::from_integer(&j + 1));
            let a = if lo > start { lo.clone() } else { start };
            let b = if hi < end { hi.clone() } else { end };
            pieces.push(Span::new(a.shift(&-&j), b.shift(&-&j)));
            j += 1;
        }
        ArcSet::from_spans(pieces)
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.spans.len() == 1 && self.spans[0].lo <= circle_lo() && self.spans[0].hi >= circle_hi()
    }

    pub fn measure(&self) -> BigRational {
        self.spans.iter().map(Span::length).sum()
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.spans.iter().any(|s| s.contains(x))
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        ArcSet::from_spans(self.spans.iter().chain(&other.spans).cloned().collect())
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        let (a, b) = (&self.spans, &other.spans);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.clone().max(b[j].lo.clone());
            let hi = a[i].hi.clone().min(b[j].hi.clone());
            if lo < hi {
                out.push(Span::new(lo, hi));
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        ArcSet::from_spans(out)
    }

    pub fn complement(&self) -> ArcSet {
        let mut out = Vec::with_capacity(self.spans.len() + 1);
        let mut cur = circle_lo();
        for s in &self.spans {
            out.push(Span::new(cur, s.lo.clone()));
            cur = s.hi.clone();
        }
        out.push(Span::new(cur, circle_hi()));
        ArcSet::from_spans(out)
    }

    pub fn difference(&self, other: &ArcSet) -> ArcSet {
        self.intersect(&other.complement())
    }

    pub fn is_subset_of(&self, other: &ArcSet) -> bool {
        self.difference(other).is_empty()
    }

    /// Number of connected components on the circle; a span ending at `1-`
    /// and one starting at `0-` are joined.
    pub fn component_count(&self) -> usize {
        let n = self.spans.len();
        if n >= 2 && self.spans[0].lo <= circle_lo() && self.spans[n - 1].hi >= circle_hi() {
            n - 1
        } else {
            n
        }
    }

    /// `{t in window : s t + c in target (mod 1)}` for a nonzero integer `s`.
    /// Only the pieces meeting `window` are generated, so large `|s|` stays
    /// cheap when the window is small.
    pub fn preimage(target: &ArcSet, s: &BigInt, c: &BigRational, window: &ArcSet) -> ArcSet {
        assert!(!s.is_zero(), "preimage under a zero multiplier");
        let sr = BigRational::from_integer(s.clone());
        let mut pieces = Vec::new();
        for w in &window.spans {
            // image of the window span under t -> s t + c, as a real range
            let (a, b) = {
                let x = &sr * &w.lo.value + c;
                let y = &sr * &w.hi.value + c;
                if s.is_negative() { (y, x) } else { (x, y) }
            };
            for t in &target.spans {
                // t + k meets [a, b] for k in [a - t.hi, b - t.lo]
                let below = &a - &t.hi.value;
                let above = &b - &t.lo.value;
                let k_hi = ceil_div(above.numer(), above.denom());
                let k_lo = floor_div(below.numer(), below.denom());
                let mut k = k_lo;
                while k <= k_hi {
                    let lo = t.lo.shift(&k).affine_inverse(s, c);
                    let hi = t.hi.shift(&k).affine_inverse(s, c);
                    let (lo, hi) = if s.is_negative() { (hi, lo) } else { (lo, hi) };
                    let piece = Span::new(lo, hi);
                    let clipped = Span::new(piece.lo.max(w.lo.clone()), piece.hi.min(w.hi.clone()));
                    if !clipped.is_empty() {
                        pieces.push(clipped);
                    }
                    k += 1;
                }
            }
        }
        ArcSet::from_spans(pieces)
    }

    /// `{x in T : ||x|| < r}` (open) or `<= r` (closed), for `0 < r`.
    pub fn norm_ball(r: &BigRational, closed: bool) -> ArcSet {
        let span = if closed { Span::closed(-r, r.clone()) } else { Span::open(-r, r.clone()) };
        ArcSet::from_real(&span)
    }

    /// `{x in T : ||x|| > r}` for `0 <= r < 1/2`.
    pub fn norm_above(r: &BigRational) -> ArcSet {
        ArcSet::from_real(&Span::open(r.clone(), BigRational::one() - r))
    }
}

impl fmt::Display for ArcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spans.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.spans.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" u "))
    }
}
