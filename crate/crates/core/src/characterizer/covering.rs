//! Finite covers of `N ∖ N(F; eps)` by good sets `{x : ||phi(x)|| > 1/4}`
//! on unions of circles.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arcs::{ArcSet, Span};
use crate::error::{check_dim, Error, Result};
use crate::lattice::ClosedSubgroup;
use crate::par;
use crate::quasiconvex::{character_shell, CharWindow};
use crate::torus::num::{frac, quarter};
use crate::torus::{Character, CircleValue, TorusPoint};

/// Precision of the enclosures used for irrational ball centers.
pub(crate) const INNER_BITS: u32 = 128;

/// Limits for a single covering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoveringBudget {
    /// Largest candidate pool drawn from the window.
    pub max_pool: usize,
    /// Largest `|B_n|`.
    pub max_chars: usize,
    /// Characters examined when window membership must be tested one by one.
    pub scan_limit: u64,
    /// Largest number of coset circles or plane cells.
    pub max_pieces: usize,
    /// Deepest plane subdivision.
    pub max_depth: u32,
    /// Sample/verify rounds in the plane.
    pub max_rounds: usize,
}

impl Default for CoveringBudget {
    fn default() -> Self {
        CoveringBudget {
            max_pool: 4096,
            max_chars: 512,
            scan_limit: 1 << 20,
            max_pieces: 1 << 21,
            max_depth: 14,
            max_rounds: 24,
        }
    }
}

/// The circle `t -> base + t dir` inside `T^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetCircle {
    pub base: TorusPoint,
    pub dir: Character,
}

impl CosetCircle {
    /// `T` itself.
    pub fn standard() -> CosetCircle {
        CosetCircle { base: TorusPoint::zero(1), dir: Character::from_i64(&[1]) }
    }

    pub fn dim(&self) -> usize {
        self.dir.dim()
    }

    fn base_rationals(&self) -> Vec<BigRational> {
        self.base.rational_coords().expect("coset bases are rational")
    }

    /// `(phi . dir, phi . base mod 1)`: the restriction of `phi` to the
    /// circle is `t -> s t + c`.
    pub fn restrict(&self, phi: &Character) -> Result<(BigInt, BigRational)> {
        check_dim(self.dim(), phi.dim())?;
        let s = phi.coeffs().iter().zip(self.dir.coeffs()).map(|(a, b)| a * b).sum();
        let c = frac(&phi.dot_rational(&self.base_rationals())?);
        Ok((s, c))
    }

    /// `{t : ||phi(base + t dir)|| > 1/4}` inside `within`.
    pub fn good_set(&self, phi: &Character, within: &ArcSet) -> Result<ArcSet> {
        let (s, c) = self.restrict(phi)?;
        Ok(good_preimage(&s, &c, within))
    }

    /// `{t : d_sup(base + t dir, f) < eps}`, shrunk to a rational inner
    /// approximation when `f` is irrational.
    pub fn ball_set(&self, f: &TorusPoint, eps: &BigRational) -> Result<ArcSet> {
        check_dim(self.dim(), f.dim())?;
        let base = self.base_rationals();
        let mut set = ArcSet::full();
        for ((b, d), fi) in base.iter().zip(self.dir.coeffs()).zip(f.coords()) {
            // (lo, hi) encloses base_i - f_i
            let (lo, hi) = match CircleValue::rational(b.clone()).sub(fi) {
                CircleValue::Rational(r) => (r.clone(), r),
                other => {
                    let iv = other.enclose(INNER_BITS);
                    (iv.lo(), iv.hi())
                }
            };
            let arc = ArcSet::from_real(&Span::open(-eps - &lo, eps - &hi));
            if d.is_zero() {
                if !arc.contains(&BigRational::zero()) {
                    return Ok(ArcSet::empty());
                }
                continue;
            }
            set = ArcSet::preimage(&arc, d, &BigRational::zero(), &set);
            if set.is_empty() {
                break;
            }
        }
        Ok(set)
    }

    /// `{t : d_sup(base + t dir, F) >= eps}`.
    pub fn target(&self, f: &[TorusPoint], eps: &BigRational) -> Result<ArcSet> {
        let balls = par::try_map(f, |p| self.ball_set(p, eps))?;
        let spans: Vec<Span> = balls.iter().flat_map(|b| b.spans().iter().cloned()).collect();
        Ok(ArcSet::from_spans(spans).complement())
    }
}

/// `{t in within : ||s t + c|| > 1/4}`.
pub(crate) fn good_preimage(s: &BigInt, c: &BigRational, within: &ArcSet) -> ArcSet {
    if s.is_zero() {
        let v = frac(c);
        let far = v > quarter() && v < BigRational::one() - quarter();
        return if far { within.clone() } else { ArcSet::empty() };
    }
    ArcSet::preimage(&ArcSet::norm_above(&quarter()), s, c, within)
}

/// The coset circles `x + T dir` of a closed subgroup of torus rank one,
/// one per element `x` of its finite part.
pub fn coset_circles(n: &ClosedSubgroup, budget: usize) -> Result<Vec<CosetCircle>> {
    if n.torus_rank() != 1 {
        return Err(Error::Unsupported(format!("coset circles need torus rank 1, {n} has rank {}", n.torus_rank())));
    }
    let dir = Character::new(n.torus_directions().remove(0))?;
    Ok(n.finite_part(budget)?.into_iter().map(|base| CosetCircle { base, dir: dir.clone() }).collect())
}

/// One piece of a circle certificate: `phi` is good on `span` of coset `coset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcPiece {
    pub span: Span,
    pub phi: Character,
    pub coset: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ArcPieceJson {
    Plain(String, String, Character),
    Coset(String, String, Character, usize),
}

impl Serialize for ArcPiece {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (lo, hi) = (self.span.lo_text(), self.span.hi_text());
        if self.coset == 0 {
            ArcPieceJson::Plain(lo, hi, self.phi.clone()).serialize(s)
        } else {
            ArcPieceJson::Coset(lo, hi, self.phi.clone(), self.coset).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for ArcPiece {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let (lo, hi, phi, coset) = match ArcPieceJson::deserialize(d)? {
            ArcPieceJson::Plain(lo, hi, phi) => (lo, hi, phi, 0),
            ArcPieceJson::Coset(lo, hi, phi, c) => (lo, hi, phi, c),
        };
        let span = Span::from_texts(&lo, &hi).map_err(D::Error::custom)?;
        Ok(ArcPiece { span, phi, coset })
    }
}

/// Window members in canonical order, drawn lazily.
pub(crate) struct Candidates<'a> {
    window: &'a CharWindow,
    divisor: BigInt,
    scan_limit: u64,
    cache: Vec<Character>,
    exhausted: bool,
}

impl<'a> Candidates<'a> {
    /// Members of `window`, each divided by `divisor` (which must divide
    /// every member).
    pub(crate) fn new(window: &'a CharWindow, divisor: BigInt, scan_limit: u64) -> Candidates<'a> {
        Candidates { window, divisor, scan_limit, cache: Vec::new(), exhausted: false }
    }

    /// The first `count` members (fewer if the window is scanned out).
    pub(crate) fn prefix(&mut self, count: usize) -> Result<&[Character]> {
        if self.cache.len() < count && !self.exhausted {
            let members = window_members(self.window, count, self.scan_limit)?;
            self.exhausted = members.len() < count;
            self.cache = members.into_iter().map(|m| divide(&m, &self.divisor)).collect();
        }
        Ok(&self.cache[..count.min(self.cache.len())])
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.exhausted
    }
}

fn divide(phi: &Character, g: &BigInt) -> Character {
    if g.is_one() {
        return phi.clone();
    }
    Character::new(phi.coeffs().iter().map(|c| c / g).collect()).expect("same dimension")
}

fn order_key(phi: &Character) -> (BigInt, Vec<BigInt>) {
    (phi.max_abs(), phi.coeffs().to_vec())
}

/// The first `count` nonzero members of the window in canonical order:
/// first nonzero coefficient positive, ascending `max |phi_i|`, then
/// lexicographic.
pub fn window_members(window: &CharWindow, count: usize, scan_limit: u64) -> Result<Vec<Character>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let dim = window.dim();
    if let (Some(q), Some(classes)) = (window.modulus(), window.residue_classes()) {
        let q = q.to_u64().expect("tabulated moduli are small");
        if dim == 1 {
            let residues: Vec<u64> = classes.iter().map(|r| r[0]).collect();
            let mut out = Vec::with_capacity(count);
            let mut block = 0u64;
            while out.len() < count {
                for r in &residues {
                    let k = block as u128 * q as u128 + *r as u128;
                    if k != 0 && out.len() < count {
                        out.push(Character::scalar(BigInt::from(k)));
                    }
                }
                block += 1;
            }
            return Ok(out);
        }
        return lifted_members(window, q, &classes, count);
    }
    scanned_members(window, count, scan_limit)
}

/// Residue classes lifted into growing boxes until enough members appear.
fn lifted_members(window: &CharWindow, q: u64, classes: &[Vec<u64>], count: usize) -> Result<Vec<Character>> {
    let dim = window.dim();
    let q = q as i64;
    let mut h: i64 = 1;
    loop {
        let side = 2 * h + 1;
        let lift_cost = classes.len() as f64 * ((2 * h / q + 1) as f64).powi(dim as i32);
        let scan_cost = (side as f64).powi(dim as i32);
        let mut found: Vec<Character> = if lift_cost < scan_cost {
            let mut out = Vec::new();
            for r in classes {
                let axes: Vec<Vec<i64>> = r
                    .iter()
                    .map(|&ri| {
                        let start = (ri as i64) - ((ri as i64 + h) / q) * q;
                        (0..).map(|j| start + j * q).take_while(|v| *v <= h).collect()
                    })
                    .collect();
                cartesian(&axes, &mut |v| {
                    if v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                        out.push(Character::from_i64(v));
                    }
                });
            }
            out
        } else {
            let mut out = Vec::new();
            for k in 1..=h as u64 {
                for phi in character_shell(dim, k) {
                    if window.contains(&phi)? {
                        out.push(phi);
                    }
                }
            }
            out
        };
        if found.len() >= count {
            found.sort_by_key(order_key);
            found.truncate(count);
            return Ok(found);
        }
        h *= 2;
    }
}

fn cartesian(axes: &[Vec<i64>], f: &mut impl FnMut(&[i64])) {
    fn rec(axes: &[Vec<i64>], cur: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
        match axes.split_first() {
            None => f(cur),
            Some((first, rest)) => {
                for &v in first {
                    cur.push(v);
                    rec(rest, cur, f);
                    cur.pop();
                }
            }
        }
    }
    rec(axes, &mut Vec::with_capacity(axes.len()), f);
}

/// Shell-by-shell scan with per-character membership tests. Undecidable
/// memberships count as non-members.
fn scanned_members(window: &CharWindow, count: usize, scan_limit: u64) -> Result<Vec<Character>> {
    let mut out = Vec::new();
    let mut scanned = 0u64;
    let mut h = 1u64;
    while out.len() < count && scanned < scan_limit {
        let shell = character_shell(window.dim(), h);
        scanned += shell.len() as u64;
        let hits = par::try_map(&shell, |phi| match window.contains(phi) {
            Ok(b) => Ok(b),
            Err(e) if e.is_exhaustion() => Ok(false),
            Err(e) => Err(e),
        })?;
        out.extend(shell.into_iter().zip(hits).filter(|(_, hit)| *hit).map(|(phi, _)| phi));
        h += 1;
    }
    out.truncate(count);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Gain {
    measure: BigRational,
    touched: usize,
}

impl Gain {
    fn is_zero(&self) -> bool {
        self.measure.is_zero() && self.touched == 0
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.measure.cmp(&other.measure).then(self.touched.cmp(&other.touched))
    }
}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Spans of `uncovered` that meet `hit`, where `hit ⊆ uncovered`.
fn touched(uncovered: &ArcSet, hit: &ArcSet) -> usize {
    let spans = uncovered.spans();
    let mut i = 0;
    let mut count = 0;
    let mut last = usize::MAX;
    for h in hit.spans() {
        while i < spans.len() && spans[i].hi <= h.lo {
            i += 1;
        }
        if i < spans.len() && i != last {
            count += 1;
            last = i;
        }
    }
    count
}

/// A circle covering: the chosen characters and the assigned pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleCover {
    pub chars: Vec<Character>,
    pub pieces: Vec<ArcPiece>,
}

/// Greedy cover of `targets[j] ⊆ circles[j]` by good sets of window
/// members. The pool holds the first `P` members, doubling while no member
/// makes progress.
pub(crate) fn cover_circles(
    circles: &[CosetCircle],
    targets: &[ArcSet],
    candidates: &mut Candidates<'_>,
    budget: &CoveringBudget,
) -> Result<CircleCover> {
    let mut uncovered = targets.to_vec();
    let mut chosen: Vec<Character> = Vec::new();
    let mut pool_size = 32usize.min(budget.max_pool);
    while uncovered.iter().any(|u| !u.is_empty()) {
        if chosen.len() >= budget.max_chars {
            return Err(uncovered_error(circles, &uncovered, "character budget"));
        }
        let pool: Vec<Character> =
            candidates.prefix(pool_size)?.iter().filter(|c| !chosen.contains(c)).cloned().collect();
        let gains = par::try_map(&pool, |phi| {
            let mut gain = Gain { measure: BigRational::zero(), touched: 0 };
            for (circle, u) in circles.iter().zip(&uncovered) {
                if u.is_empty() {
                    continue;
                }
                let hit = circle.good_set(phi, u)?;
                gain.measure += hit.measure();
                gain.touched += touched(u, &hit);
            }
            Ok::<_, Error>(gain)
        })?;
        let mut best: Option<usize> = None;
        for (i, g) in gains.iter().enumerate() {
            if !g.is_zero() && best.is_none_or(|b| *g > gains[b]) {
                best = Some(i);
            }
        }
        match best {
            Some(i) => {
                let phi = pool[i].clone();
                for (circle, u) in circles.iter().zip(uncovered.iter_mut()) {
                    if !u.is_empty() {
                        let hit = circle.good_set(&phi, u)?;
                        *u = u.difference(&hit);
                    }
                }
                chosen.push(phi);
            }
            None if pool_size < budget.max_pool && !candidates.exhausted() => pool_size *= 2,
            None => return Err(uncovered_error(circles, &uncovered, "candidate pool")),
        }
    }
    let pieces = assign_pieces(circles, targets, &chosen)?;
    Ok(CircleCover { chars: chosen, pieces })
}

fn uncovered_error(circles: &[CosetCircle], uncovered: &[ArcSet], what: &str) -> Error {
    let (j, u) = uncovered.iter().enumerate().find(|(_, u)| !u.is_empty()).expect("something is uncovered");
    let mut shown = u.to_string();
    if shown.len() > 200 {
        shown.truncate(200);
        shown.push_str("...");
    }
    let place = if circles.len() > 1 { format!(" on coset {j}") } else { String::new() };
    Error::BudgetExhausted(format!("{what} exhausted with {shown} uncovered{place}"))
}

/// Splits each target among the chosen characters, first come first served.
pub(crate) fn assign_pieces(circles: &[CosetCircle], targets: &[ArcSet], chars: &[Character]) -> Result<Vec<ArcPiece>> {
    let mut pieces = Vec::new();
    for (j, (circle, target)) in circles.iter().zip(targets).enumerate() {
        let mut rest = target.clone();
        for phi in chars {
            if rest.is_empty() {
                break;
            }
            let hit = circle.good_set(phi, &rest)?;
            pieces.extend(hit.spans().iter().map(|s| ArcPiece { span: s.clone(), phi: phi.clone(), coset: j }));
            rest = rest.difference(&hit);
        }
        if !rest.is_empty() {
            return Err(Error::Certificate(format!("assignment left {rest} uncovered on coset {j}")));
        }
    }
    Ok(pieces)
}

/// `gcd` of the window's residues and modulus, for one-dimensional windows.
pub(crate) fn window_period(window: &CharWindow) -> Option<BigInt> {
    if window.dim() != 1 {
        return None;
    }
    let q = window.modulus()?;
    let classes = window.residue_classes()?;
    Some(classes.iter().fold(q, |g, r| g.gcd(&BigInt::from(r[0]))))
}

/// Whether the rational set `f ⊆ T` is invariant under `x -> x + 1/g`.
pub(crate) fn invariant_under(f: &[BigRational], g: &BigInt) -> bool {
    let step = BigRational::new(BigInt::one(), g.clone());
    let mut sorted = f.to_vec();
    sorted.sort();
    sorted.iter().all(|x| sorted.binary_search(&frac(&(x + &step))).is_ok())
}

/// Pulls pieces on the quotient circle back along `t -> g t`.
pub(crate) fn pull_back(pieces: &[ArcPiece], g: &BigInt) -> Vec<ArcPiece> {
    let gr = BigRational::from_integer(g.clone());
    let count = g.to_usize().expect("period fits in memory");
    let mut out = Vec::with_capacity(pieces.len() * count);
    for j in 0..count {
        let shift = BigRational::from_integer(BigInt::from(j));
        for p in pieces {
            let mut lo = p.span.lo.clone();
            let mut hi = p.span.hi.clone();
            lo.value = (&lo.value + &shift) / &gr;
            hi.value = (&hi.value + &shift) / &gr;
            out.push(ArcPiece { span: Span::new(lo, hi), phi: p.phi.scale(g), coset: p.coset });
        }
    }
    out.sort_by(|a, b| a.span.lo.cmp(&b.span.lo));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasiconvex::char_window;
    use crate::torus::num::rat;

    fn pts(xs: &[&str]) -> Vec<TorusPoint> {
        xs.iter().map(|s| s.parse().unwrap()).collect()
    }

    fn ints(v: &[Character]) -> Vec<i64> {
        v.iter().map(|c| c.coeffs()[0].to_i64().unwrap()).collect()
    }

    fn cover_1d(f: &[&str], eps: BigRational, window: &CharWindow) -> CircleCover {
        let circle = CosetCircle::standard();
        let target = circle.target(&pts(f), &eps).unwrap();
        let mut cands = Candidates::new(window, BigInt::one(), 1000);
        cover_circles(&[circle], &[target], &mut cands, &CoveringBudget::default()).unwrap()
    }

    #[test]
    fn standard_cover_is_one_two_three() {
        let window = char_window(&pts(&["0"]), 0).unwrap();
        let cover = cover_1d(&["0"], rat(1, 8), &window);
        assert_eq!(ints(&cover.chars), [1, 2, 3]);
        let total = ArcSet::from_spans(cover.pieces.iter().map(|p| p.span.clone()).collect());
        let target = CosetCircle::standard().target(&pts(&["0"]), &rat(1, 8)).unwrap();
        assert_eq!(total, target);
    }

    #[test]
    fn even_window_needs_a_second_character() {
        // ||6/8|| = 1/4 is not > 1/4, so 1/8 and 7/8 are sealed by 4.
        let window = char_window(&pts(&["1/2"]), 0).unwrap();
        let cover = cover_1d(&["0", "1/2"], rat(1, 8), &window);
        assert_eq!(ints(&cover.chars), [2, 4]);
    }

    #[test]
    fn nothing_to_cover() {
        let window = char_window(&pts(&["0"]), 0).unwrap();
        let cover = cover_1d(&["0", "1/2"], rat(1, 2), &window);
        assert!(cover.chars.is_empty() && cover.pieces.is_empty());
    }

    #[test]
    fn window_members_in_order() {
        let w = char_window(&pts(&["1/5"]), 0).unwrap();
        assert_eq!(ints(&window_members(&w, 6, 100).unwrap()), [1, 4, 5, 6, 9, 10]);
        let w = char_window(&pts(&["(1/2,0)"]), 0).unwrap();
        let m = window_members(&w, 5, 100).unwrap();
        let want: Vec<Character> = [[0, 1], [0, 2], [2, -2], [2, -1], [2, 0]].iter().map(|v| Character::from_i64(v)).collect();
        assert_eq!(m, want);
        let root2: TorusPoint = "sqrt(2):-1,1,1".parse().unwrap();
        let w = char_window(&[TorusPoint::zero(1), root2], 0).unwrap();
        let m = window_members(&w, 4, 1000).unwrap();
        for phi in &m {
            assert!(w.contains_direct(phi).unwrap());
        }
        assert_eq!(ints(&m)[..2], [2, 3]);
    }

    #[test]
    fn irrational_balls_are_inner() {
        let root2: TorusPoint = "sqrt(2):-1,1,1".parse().unwrap();
        let ball = CosetCircle::standard().ball_set(&root2, &rat(1, 100)).unwrap();
        assert!(ball.measure() < rat(1, 50));
        assert!(ball.contains(&rat(41421, 100000)));
        assert!(!ball.contains(&rat(40421, 100000)));
    }

    #[test]
    fn coset_circles_of_a_line() {
        // N = {(x, y) : 2x + 2y = 0} = diagonal ∪ shifted diagonal.
        let lattice = crate::lattice::Lattice::from_generators(2, &[Character::from_i64(&[2, 2])]).unwrap();
        let n = ClosedSubgroup::from_annihilator(lattice);
        let circles = coset_circles(&n, 100).unwrap();
        assert_eq!(circles.len(), 2);
        for c in &circles {
            let (s, _) = c.restrict(&Character::from_i64(&[2, 2])).unwrap();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn pull_back_matches_direct_cover() {
        let f: Vec<BigRational> = (0..4).map(|k| rat(k, 4)).collect();
        assert!(invariant_under(&f, &BigInt::from(4)));
        assert!(!invariant_under(&f, &BigInt::from(8)));
        let piece = ArcPiece { span: Span::open(rat(1, 4), rat(3, 4)), phi: Character::from_i64(&[1]), coset: 0 };
        let back = pull_back(&[piece], &BigInt::from(4));
        assert_eq!(back.len(), 4);
        assert_eq!(back[1].span, Span::open(rat(5, 16), rat(7, 16)));
        assert_eq!(back[1].phi, Character::from_i64(&[4]));
    }

    #[test]
    fn pieces_serialize_as_text_arrays() {
        let p = ArcPiece { span: Span::closed(rat(1, 8), rat(1, 4)), phi: Character::from_i64(&[2]), coset: 0 };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["[1/8","1/4]",2]"#);
        assert_eq!(serde_json::from_str::<ArcPiece>(&s).unwrap(), p);
        let q = ArcPiece { coset: 3, ..p };
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<ArcPiece>(&s).unwrap(), q);
    }
}
