//! Character windows and `m`-quasi-convex hulls of finite sets.
//!
//! For a finite set `E` of rational points with common denominator `q`, the
//! value `||phi(e)||` only depends on `phi mod q`. The window
//! `A = {phi : ||phi(e)|| <= 2^-m-2 for all e in E}` is therefore a union of
//! residue classes mod `q`, and
//! `q_m(E) = {x : ||phi(x)|| <= 1/4 for all phi in A}` can be computed
//! exactly by testing the (finitely many) elements of `<E>` against one
//! representative per class.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lattice::ClosedSubgroup;
use crate::par;
use crate::torus::num::{inv_pow2, lcm, quarter};
use crate::torus::{eval_char, Character, Precision, TorusPoint};

/// Work limits for window and hull enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HullLimits {
    /// Largest `q^d` for which residue classes are tabulated.
    pub max_residues: u64,
    /// Largest `|<E>| * |R|` hull test.
    pub max_work: u64,
}

impl Default for HullLimits {
    fn default() -> Self {
        HullLimits { max_residues: 1 << 24, max_work: 1 << 34 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Membership {
    /// `member[index(phi mod q)]`.
    Residues { modulus: u64, member: Vec<bool>, count: u64 },
    /// Rational data whose residue table would be too large: every query
    /// evaluates `phi` on `E` exactly.
    Direct,
    /// Some point of `E` is irrational: queries refine intervals and may
    /// fail with a precision error.
    Semidecidable,
}

/// The set `A = {phi : ||phi(e)|| <= 2^-m-2 for all e in E}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharWindow {
    dim: usize,
    level: u32,
    points: Vec<TorusPoint>,
    membership: Membership,
    precision: Precision,
}

fn dim_of(e: &[TorusPoint]) -> Result<usize> {
    let d = e.first().ok_or_else(|| Error::invalid("E must be nonempty (use {0} for an empty stage)"))?.dim();
    for p in e {
        check_dim(d, p.dim())?;
    }
    Ok(d)
}

fn dedup_sorted(e: &[TorusPoint]) -> Vec<TorusPoint> {
    let mut v = e.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Common denominator `q` (as `u64`) and numerators of rational points.
fn numerators(points: &[TorusPoint]) -> Option<(u64, Vec<Vec<u64>>)> {
    let mut q = BigInt::one();
    for p in points {
        q = lcm(&q, &p.denominator()?);
    }
    let qn = q.to_u64().filter(|&v| v <= u32::MAX as u64)?;
    let nums = points
        .iter()
        .map(|p| {
            p.rational_coords()
                .expect("rational")
                .iter()
                .map(|c| (c * BigRational::from_integer(q.clone())).to_integer().to_u64().expect("in [0, q)"))
                .collect()
        })
        .collect();
    Some((qn, nums))
}

/// `4 * 2^m * ||v / q|| <= q`, i.e. `||v/q|| <= 2^-m-2`, or `<= 1/4` for
/// `shift = 0`.
fn small(v: u64, q: u64, shift: u32) -> bool {
    let w = v.min(q - v) as u128;
    (w << (shift + 2)) <= q as u128
}

fn dot_mod(r: &[u64], n: &[u64], q: u64) -> u64 {
    (r.iter().zip(n).map(|(&a, &b)| a as u128 * b as u128).sum::<u128>() % q as u128) as u64
}

fn residue_vector(mut index: u64, q: u64, d: usize) -> Vec<u64> {
    (0..d)
        .map(|_| {
            let r = index % q;
            index /= q;
            r
        })
        .collect()
}

impl CharWindow {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    /// `2^-m-2`.
    pub fn tolerance(&self) -> BigRational {
        inv_pow2(self.level + 2)
    }

    /// `Some(q)` when membership is periodic mod `q`.
    pub fn modulus(&self) -> Option<BigInt> {
        match &self.membership {
            Membership::Residues { modulus, .. } => Some(BigInt::from(*modulus)),
            Membership::Direct => {
                let mut q = BigInt::one();
                for p in &self.points {
                    q = lcm(&q, &p.denominator().expect("rational"));
                }
                Some(q)
            }
            Membership::Semidecidable => None,
        }
    }

    pub fn is_semidecidable(&self) -> bool {
        matches!(self.membership, Membership::Semidecidable)
    }

    /// Number of residue classes in the window, when tabulated.
    pub fn residue_count(&self) -> Option<u64> {
        match &self.membership {
            Membership::Residues { count, .. } => Some(*count),
            _ => None,
        }
    }

    /// The residue classes, each as a vector in `[0, q)^d`, in index order.
    pub fn residue_classes(&self) -> Option<Vec<Vec<u64>>> {
        match &self.membership {
            Membership::Residues { modulus, member, .. } => Some(
                member
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m)
                    .map(|(i, _)| residue_vector(i as u64, *modulus, self.dim))
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn contains(&self, phi: &Character) -> Result<bool> {
        check_dim(self.dim, phi.dim())?;
        match &self.membership {
            Membership::Residues { modulus, member, .. } => {
                let q = BigInt::from(*modulus);
                let mut index = 0u64;
                for c in phi.coeffs().iter().rev() {
                    index = index * modulus + c.mod_floor(&q).to_u64().expect("below modulus");
                }
                Ok(member[index as usize])
            }
            Membership::Direct | Membership::Semidecidable => self.contains_direct(phi),
        }
    }

    /// Membership by evaluating `phi` on every point of `E`, without the
    /// residue table.
    pub fn contains_direct(&self, phi: &Character) -> Result<bool> {
        check_dim(self.dim, phi.dim())?;
        let tol = self.tolerance();
        for e in &self.points {
            if eval_char(phi, e)?.cmp_norm(&tol, &self.precision)? == std::cmp::Ordering::Greater {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The window of `E` at level `m`, with default limits.
pub fn char_window(e: &[TorusPoint], m: u32) -> Result<CharWindow> {
    char_window_with(e, m, &HullLimits::default(), &Precision::default())
}

pub fn char_window_with(e: &[TorusPoint], m: u32, limits: &HullLimits, precision: &Precision) -> Result<CharWindow> {
    let dim = dim_of(e)?;
    let points = dedup_sorted(e);
    let base = |membership| CharWindow { dim, level: m, points: points.clone(), membership, precision: *precision };
    if !points.iter().all(TorusPoint::is_rational) {
        return Ok(base(Membership::Semidecidable));
    }
    let Some((q, nums)) = numerators(&points) else {
        return Ok(base(Membership::Direct));
    };
    let total = match (q as u128).checked_pow(dim as u32) {
        Some(t) if t <= limits.max_residues as u128 => t as u64,
        _ => return Ok(base(Membership::Direct)),
    };
    let shift = m;
    if shift > 60 {
        // 2^-m-2 < 1/q^2 forces every phi(e) to vanish.
        let member = par::map_range(total as usize, |i| {
            let r = residue_vector(i as u64, q, dim);
            nums.iter().all(|n| dot_mod(&r, n, q) == 0)
        });
        let count = member.iter().filter(|&&b| b).count() as u64;
        return Ok(base(Membership::Residues { modulus: q, member, count }));
    }
    let member = par::map_range(total as usize, |i| {
        let r = residue_vector(i as u64, q, dim);
        nums.iter().all(|n| small(dot_mod(&r, n, q), q, shift))
    });
    let count = member.iter().filter(|&&b| b).count() as u64;
    Ok(base(Membership::Residues { modulus: q, member, count }))
}

/// The result of a hull computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuasiHull {
    #[serde(rename = "E")]
    pub points: Vec<TorusPoint>,
    pub m: u32,
    pub hull: Vec<TorusPoint>,
    /// Largest cyclic order in `<E>` (the constant `M`).
    #[serde(serialize_with = "ser_big")]
    pub exponent: BigInt,
    /// The coefficient box `2^(m+1) M`.
    #[serde(serialize_with = "ser_big")]
    pub search_bound: BigInt,
    /// Number of cyclic generators of `<E>`.
    pub generators: usize,
    /// `false` when the hull came from a bounded search (irrational data).
    pub complete: bool,
}

fn ser_big<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl QuasiHull {
    /// The finiteness bound `(2^(m+2) M + 1)^n`.
    pub fn size_bound(&self) -> BigInt {
        let side: BigInt = (BigInt::one() << (self.m + 2)) * &self.exponent + 1;
        num_traits::pow(side, self.generators)
    }
}

/// `q_m(E)` for finite rational `E`, with default limits.
pub fn quasi_hull(e: &[TorusPoint], m: u32) -> Result<QuasiHull> {
    quasi_hull_with(e, m, &HullLimits::default())
}

pub fn quasi_hull_with(e: &[TorusPoint], m: u32, limits: &HullLimits) -> Result<QuasiHull> {
    let dim = dim_of(e)?;
    let points = dedup_sorted(e);
    if let Some(p) = points.iter().find(|p| !p.is_rational()) {
        return Err(Error::invalid(format!(
            "exact hulls need rational points, got {p}; use quasi_hull_bounded"
        )));
    }
    let group = ClosedSubgroup::generated_by(dim, &points)?;
    let order = group.order().expect("finitely generated by rationals");
    let exponent = group.invariant_factors().last().cloned().unwrap_or_else(BigInt::one);
    let generators = group.invariant_factors().len();
    let search_bound = (BigInt::one() << (m + 1)) * &exponent;

    let window = char_window_with(&points, m, limits, &Precision::default())?;
    let classes = window
        .residue_classes()
        .ok_or_else(|| Error::BudgetExhausted(format!("window of {} points has too many residue classes", points.len())))?;
    let work = order.clone() * BigInt::from(classes.len());
    if work > BigInt::from(limits.max_work) {
        return Err(Error::BudgetExhausted(format!(
            "hull test needs {work} checks (|<E>| = {order}, |R| = {})",
            classes.len()
        )));
    }
    let budget = order.to_usize().expect("bounded by work limit");
    let elements = group.elements(budget)?;
    let q = window.modulus().expect("periodic").to_u64().expect("tabulated");
    let (_, nums) = numerators_mod(&elements, q);
    let keep = par::filter_range(elements.len(), |i| classes.iter().all(|r| small(dot_mod(r, &nums[i], q), q, 0)));
    let hull: Vec<TorusPoint> = keep.into_iter().map(|i| elements[i].clone()).collect();
    Ok(QuasiHull { points, m, hull, exponent, search_bound, generators, complete: true })
}

/// Numerators over a known modulus `q` (every denominator divides `q`).
fn numerators_mod(points: &[TorusPoint], q: u64) -> (u64, Vec<Vec<u64>>) {
    let qb = BigRational::from_integer(BigInt::from(q));
    let nums = points
        .iter()
        .map(|p| {
            p.rational_coords()
                .expect("rational")
                .iter()
                .map(|c| (c * &qb).to_integer().to_u64().expect("in [0, q)"))
                .collect()
        })
        .collect();
    (q, nums)
}

/// Hull survivors among `candidates` when `E` may be irrational.
///
/// A candidate is dropped once some `phi` with `max |phi_i| <= char_bound`
/// is verified to lie in the window and to satisfy `||phi(x)|| > 1/4`. The
/// survivors contain `q_m(E) ∩ candidates`; the result is marked incomplete.
pub fn quasi_hull_bounded(
    e: &[TorusPoint],
    m: u32,
    candidates: &[TorusPoint],
    char_bound: u64,
    precision: &Precision,
) -> Result<QuasiHull> {
    let dim = dim_of(e)?;
    let points = dedup_sorted(e);
    let window = char_window_with(&points, m, &HullLimits::default(), precision)?;
    let chars = characters_in_box(dim, char_bound);
    let in_window: Vec<&Character> = chars
        .iter()
        .filter_map(|phi| match window.contains(phi) {
            Ok(true) => Some(Ok(phi)),
            Ok(false) | Err(Error::PrecisionExhausted { .. }) => None,
            Err(err) => Some(Err(err)),
        })
        .collect::<Result<_>>()?;
    let quarter = quarter();
    let verdicts = par::try_map(candidates, |x| -> Result<bool> {
        check_dim(dim, x.dim())?;
        for phi in &in_window {
            match eval_char(phi, x)?.cmp_norm(&quarter, precision) {
                Ok(std::cmp::Ordering::Greater) => return Ok(false),
                Ok(_) | Err(Error::PrecisionExhausted { .. }) => {}
                Err(err) => return Err(err),
            }
        }
        Ok(true)
    })?;
    let mut hull: Vec<TorusPoint> =
        candidates.iter().zip(verdicts).filter(|(_, keep)| *keep).map(|(x, _)| x.clone()).collect();
    hull.extend(points.iter().cloned());
    hull.sort();
    hull.dedup();
    Ok(QuasiHull {
        points,
        m,
        hull,
        exponent: BigInt::zero(),
        search_bound: BigInt::from(char_bound),
        generators: 0,
        complete: false,
    })
}

/// Nonzero characters with `max |phi_i| <= bound`, one per sign class,
/// ordered by `max |phi_i|` and then lexicographically.
pub fn characters_in_box(dim: usize, bound: u64) -> Vec<Character> {
    (1..=bound).flat_map(|h| character_shell(dim, h)).collect()
}

/// Characters with `max |phi_i| = h` and first nonzero coefficient
/// positive, sorted lexicographically.
pub fn character_shell(dim: usize, h: u64) -> Vec<Character> {
    let h = h as i64;
    let side = (2 * h + 1) as u64;
    let total = side.pow(dim as u32);
    let mut shell: Vec<Vec<i64>> = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let v: Vec<i64> = (0..dim)
            .map(|_| {
                let c = (rest % side) as i64 - h;
                rest /= side;
                c
            })
            .rev()
            .collect();
        if v.iter().map(|c| c.abs()).max() != Some(h) {
            continue;
        }
        if v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            shell.push(v);
        }
    }
    shell.sort();
    shell.iter().map(|v| Character::from_i64(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[&str]) -> Vec<TorusPoint> {
        xs.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn window_examples() {
        let w = char_window(&pts(&["1/5"]), 0).unwrap();
        assert_eq!(w.residue_classes().unwrap(), vec![vec![0], vec![1], vec![4]]);
        let w = char_window(&pts(&["0"]), 3).unwrap();
        assert!(w.contains(&Character::from_i64(&[17])).unwrap());
        let w = char_window(&pts(&["1/2"]), 0).unwrap();
        assert_eq!(w.residue_classes().unwrap(), vec![vec![0]]);
        assert!(w.contains(&Character::from_i64(&[-4])).unwrap());
        assert!(!w.contains(&Character::from_i64(&[3])).unwrap());
        assert!(char_window(&[], 0).is_err());
    }

    #[test]
    fn hull_examples() {
        let h = quasi_hull(&pts(&["1/5"]), 0).unwrap();
        assert_eq!(h.hull, pts(&["0", "1/5", "4/5"]));
        for m in 0..4 {
            let h = quasi_hull(&pts(&["0", "1/3", "2/3"]), m).unwrap();
            assert_eq!(h.hull, pts(&["0", "1/3", "2/3"]));
        }
        assert_eq!(quasi_hull(&pts(&["0"]), 2).unwrap().hull, pts(&["0"]));
        let h = quasi_hull(&pts(&["(1/2,0)", "(0,1/3)"]), 1).unwrap();
        assert!(h.hull.len() as u64 <= h.size_bound().to_u64().unwrap());
    }

    #[test]
    fn hull_matches_definition_by_brute_force() {
        // every phi in 0..q checked directly with exact rationals
        for (xs, m) in [(vec!["1/7", "2/7"], 1u32), (vec!["1/12"], 0), (vec!["1/6", "1/4"], 2)] {
            let e = pts(&xs);
            let h = quasi_hull(&e, m).unwrap();
            let q = 84i64;
            let tol = inv_pow2(m + 2);
            let window: Vec<Character> = (0..q)
                .map(|k| Character::from_i64(&[k]))
                .filter(|phi| e.iter().all(|x| eval_char(phi, x).unwrap().norm().unwrap().upper() <= tol))
                .collect();
            let expected: Vec<TorusPoint> = (0..q)
                .map(|k| TorusPoint::from_rationals(&[BigRational::new(k.into(), q.into())]).unwrap())
                .filter(|x| window.iter().all(|phi| eval_char(phi, x).unwrap().norm().unwrap().upper() <= quarter()))
                .collect();
            assert_eq!(h.hull, expected, "E = {xs:?}, m = {m}");
        }
    }

    #[test]
    fn candidate_box_order() {
        let c = characters_in_box(2, 1);
        let text: Vec<String> = c.iter().map(ToString::to_string).collect();
        assert_eq!(text, ["(0,1)", "(1,-1)", "(1,0)", "(1,1)"]);
        assert_eq!(characters_in_box(1, 3).len(), 3);
    }

    #[test]
    fn bounded_hull_for_irrational_points() {
        let x: TorusPoint = "sqrt(2):-1,1,1".parse().unwrap();
        let far: TorusPoint = "1/2".parse().unwrap();
        let h = quasi_hull_bounded(std::slice::from_ref(&x), 0, &[far.clone(), x.clone()], 6, &Precision::default())
            .unwrap();
        assert!(!h.complete);
        assert!(h.hull.contains(&x));
        assert!(!h.hull.contains(&far));
    }
}
