use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::torus::num::inv_pow2;
use crate::torus::{Metric, TorusPoint};

/// Positive radii `eps_0 > eps_1 > ...` attached to a hull tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonSchedule {
    pub eps: Vec<BigRational>,
    /// `Delta_{n+1}`, the least pairwise distance in `F_{n+1}` (`None` for
    /// a singleton).
    pub gaps: Vec<Option<BigRational>>,
}

/// Least pairwise distance of a finite set, as a verified lower bound.
pub fn min_gap(points: &[TorusPoint], metric: Metric) -> Result<Option<BigRational>> {
    if let Some(gap) = circle_gap(points)? {
        return Ok(gap);
    }
    let mut best: Option<BigRational> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = metric.distance(a, b)?.lower();
            if d.is_zero() {
                return Err(Error::invalid(format!("hull contains coincident points {a} and {b}")));
            }
            if best.as_ref().is_none_or(|x| d < *x) {
                best = Some(d);
            }
        }
    }
    Ok(best)
}

/// Rational points on the circle: adjacent differences after sorting.
/// Both metrics agree with `||x - y||` in dimension one.
fn circle_gap(points: &[TorusPoint]) -> Result<Option<Option<BigRational>>> {
    if points.iter().any(|p| p.dim() != 1 || !p.is_rational()) {
        return Ok(None);
    }
    let mut v: Vec<BigRational> = points.iter().map(|p| p.rational_coords().expect("rational").remove(0)).collect();
    v.sort();
    if v.len() < 2 {
        return Ok(Some(None));
    }
    let mut best = &v[0] + BigRational::one() - &v[v.len() - 1];
    for w in v.windows(2) {
        let d = &w[1] - &w[0];
        if d.is_zero() {
            return Err(Error::invalid(format!("hull contains the point {} twice", w[0])));
        }
        if d < best {
            best = d;
        }
    }
    Ok(Some(Some(best)))
}

/// `eps_0 = min(1/8, Delta_1/4)`, `eps_n = min(eps_{n-1}/2, Delta_{n+1}/4)`.
///
/// `hulls` holds `F_0, ..., F_L`; the result has `L` entries.
pub fn epsilons(hulls: &[Vec<TorusPoint>], metric: Metric) -> Result<EpsilonSchedule> {
    let mut eps: Vec<BigRational> = Vec::new();
    let mut gaps = Vec::new();
    for next in hulls.iter().skip(1) {
        let gap = min_gap(next, metric)?;
        let cap = match eps.last() {
            None => inv_pow2(3),
            Some(prev) => prev / BigRational::from_integer(2.into()),
        };
        let e = match &gap {
            Some(g) => cap.min(g / BigRational::from_integer(4.into())),
            None => cap,
        };
        eps.push(e);
        gaps.push(gap);
    }
    Ok(EpsilonSchedule { eps, gaps })
}
