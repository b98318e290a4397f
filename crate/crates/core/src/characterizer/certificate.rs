use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::covering::{coset_circles, ArcPiece, CosetCircle};
use super::plane::{cell_in_ball, cell_is_good_exact, check_tiling, CellLeaf, CellProof};
use crate::arcs::{ArcSet, Cut, Span};
use crate::error::{Error, Result};
use crate::lattice::{ClosedSubgroup, Lattice};
use crate::par;
use crate::torus::num::{fmt_rational, inv_pow2, parse_rational};
use crate::torus::{eval_char, Character, TorusPoint};

/// Evidence that every point of `N ∖ N(F_n; eps_n)` is detected by some
/// `phi ∈ B_n`, i.e. has `||phi(x)|| > 1/4`.
///
/// The domain `N` is `T` (arcs), `T^2` (cells) or, when `closure` is
/// present, the closed subgroup with that annihilator, split into coset
/// circles (arcs tagged with a coset index).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub n: usize,
    pub dim: usize,
    #[serde(rename = "E")]
    pub e: Vec<TorusPoint>,
    #[serde(rename = "F")]
    pub f: Vec<TorusPoint>,
    #[serde(serialize_with = "ser_rational", deserialize_with = "de_rational")]
    pub eps: BigRational,
    #[serde(rename = "B")]
    pub b: Vec<Character>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<Vec<Character>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cosets: Vec<CosetCircle>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arcs: Vec<ArcPiece>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellLeaf>,
}

fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(v))
}

fn de_rational<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
    use serde::de::Error as _;
    parse_rational(&String::deserialize(d)?).map_err(D::Error::custom)
}

/// Summary of a successful check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateCheck {
    pub n: usize,
    pub chars: usize,
    pub arcs: usize,
    pub cells: usize,
    #[serde(serialize_with = "ser_rational")]
    pub target_measure: BigRational,
}

fn fail(n: usize, msg: String) -> Error {
    Error::Certificate(format!("level {n}: {msg}"))
}

/// Whether `t -> s t + c` maps the span into `(k + 1/4, k + 3/4)` for one
/// integer `k`.
pub fn span_is_good(s: &BigInt, c: &BigRational, span: &Span) -> bool {
    if span.is_empty() {
        return true;
    }
    let quarter = BigRational::new(1.into(), 4.into());
    if s.is_zero() {
        let v = c - c.floor();
        return v > quarter && v < BigRational::new(3.into(), 4.into());
    }
    let sr = BigRational::from_integer(s.clone());
    let image = |cut: &Cut| Cut { value: &sr * &cut.value + c, after: cut.after != s.is_negative() };
    let (lo, hi) = if s.is_negative() { (image(&span.hi), image(&span.lo)) } else { (image(&span.lo), image(&span.hi)) };
    let k = (&lo.value - &quarter).floor();
    lo >= Cut::above(&k + &quarter) && hi <= Cut::below(k + BigRational::new(3.into(), 4.into()))
}

impl CoveringCertificate {
    /// Re-checks the certificate from its own data: `E ⊆ F`, `B_n ⊆ A_n`,
    /// and exact coverage of the closed complement of the `eps`-balls.
    pub fn verify(&self) -> Result<CertificateCheck> {
        let n = self.n;
        if !self.eps.is_positive() {
            return Err(fail(n, format!("eps = {} is not positive", fmt_rational(&self.eps))));
        }
        for p in self.e.iter().chain(&self.f) {
            if p.dim() != self.dim {
                return Err(fail(n, format!("point {p} has dimension {}, expected {}", p.dim(), self.dim)));
            }
        }
        let mut f_sorted = self.f.clone();
        f_sorted.sort();
        if let Some(e) = self.e.iter().find(|e| f_sorted.binary_search(e).is_err()) {
            return Err(fail(n, format!("{e} is in E but not in F")));
        }
        self.check_window()?;
        match (&self.closure, self.dim) {
            (Some(basis), _) => self.check_cosets(basis),
            (None, 1) => {
                if !self.cells.is_empty() {
                    return Err(fail(n, "cells given for a circle".into()));
                }
                self.check_arcs(&[CosetCircle::standard()])
            }
            (None, 2) => self.check_cells(),
            (None, d) => Err(fail(n, format!("no covering format for T^{d}"))),
        }?;
        Ok(CertificateCheck {
            n,
            chars: self.b.len(),
            arcs: self.arcs.len(),
            cells: self.cells.len(),
            target_measure: self.covered_measure(),
        })
    }

    fn check_window(&self) -> Result<()> {
        if self.e.is_empty() {
            return Err(fail(self.n, "E is empty".into()));
        }
        let level = self.n as u32;
        let tol = inv_pow2(level + 2);
        let bad = par::try_map(&self.b, |phi| -> Result<Option<String>> {
            if phi.dim() != self.dim {
                return Ok(Some(format!("character {phi} has the wrong dimension")));
            }
            for e in &self.e {
                let v = eval_char(phi, e)?;
                if v.cmp_norm(&tol, &crate::torus::Precision::default())? == std::cmp::Ordering::Greater {
                    return Ok(Some(format!("character {phi} is outside the window: ||phi({e})|| > {}", fmt_rational(&tol))));
                }
            }
            Ok(None)
        })?;
        match bad.into_iter().flatten().next() {
            Some(msg) => Err(fail(self.n, msg)),
            None => Ok(()),
        }
    }

    fn check_cosets(&self, basis: &[Character]) -> Result<()> {
        let lattice = Lattice::from_generators(self.dim, basis)?;
        let group = ClosedSubgroup::from_annihilator(lattice);
        let circles = coset_circles(&group, self.cosets.len().max(1))
            .map_err(|e| fail(self.n, format!("closure does not split into the listed cosets: {e}")))?;
        if circles != self.cosets {
            return Err(fail(self.n, "listed cosets differ from the cosets of the closure".into()));
        }
        for p in &self.f {
            if !group.contains(p)? {
                return Err(fail(self.n, format!("{p} is in F but not in the closure")));
            }
        }
        self.check_arcs(&circles)
    }

    fn check_arcs(&self, circles: &[CosetCircle]) -> Result<()> {
        for (i, piece) in self.arcs.iter().enumerate() {
            let name = || format!("arc {i} {} (phi = {})", piece.span, piece.phi);
            let circle = circles.get(piece.coset).ok_or_else(|| fail(self.n, format!("{} names a missing coset", name())))?;
            if !self.b.contains(&piece.phi) {
                return Err(fail(self.n, format!("{} uses a character outside B", name())));
            }
            let (s, c) = circle.restrict(&piece.phi)?;
            if !span_is_good(&s, &c, &piece.span) {
                return Err(fail(self.n, format!("{} is not inside {{||phi(x)|| > 1/4}}", name())));
            }
        }
        for (j, circle) in circles.iter().enumerate() {
            let target = circle.target(&self.f, &self.eps)?;
            let covered =
                ArcSet::from_spans(self.arcs.iter().filter(|p| p.coset == j).map(|p| p.span.clone()).collect());
            let missing = target.difference(&covered);
            if let Some(gap) = missing.spans().first() {
                let place = if circles.len() > 1 { format!(" on coset {j}") } else { String::new() };
                return Err(fail(self.n, format!("{gap}{place} lies outside N(F; eps) but is not covered by any arc")));
            }
        }
        Ok(())
    }

    fn check_cells(&self) -> Result<()> {
        if !self.arcs.is_empty() {
            return Err(fail(self.n, "arcs given for the plane".into()));
        }
        let cells: Vec<_> = self.cells.iter().map(|l| l.cell).collect();
        check_tiling(&cells).map_err(|e| fail(self.n, e.to_string()))?;
        let bad = par::try_map(&self.cells, |leaf| -> Result<Option<String>> {
            let c = leaf.cell;
            let name = format!("cell ({}, {}) at depth {}", c.i, c.j, c.depth);
            Ok(match leaf.proof {
                CellProof::Ball(k) => match self.f.get(k) {
                    Some(f) if cell_in_ball(f, &self.eps, &c) => None,
                    Some(f) => Some(format!("{name} is not inside the ball around {f}")),
                    None => Some(format!("{name} names a missing point of F")),
                },
                CellProof::Phi(k) => match self.b.get(k) {
                    Some(phi) if cell_is_good_exact(phi, &c)? => None,
                    Some(phi) => Some(format!("{name} is not inside {{||{phi}(x)|| > 1/4}}")),
                    None => Some(format!("{name} names a missing character")),
                },
            })
        })?;
        match bad.into_iter().flatten().next() {
            Some(msg) => Err(fail(self.n, msg)),
            None => Ok(()),
        }
    }

    /// Measure of the region being covered, for reports (arcs only).
    pub fn covered_measure(&self) -> BigRational {
        let spans: Vec<Span> = self.arcs.iter().filter(|p| p.coset == 0).map(|p| p.span.clone()).collect();
        ArcSet::from_spans(spans).measure()
    }
}

/// Checks every certificate, returning the first failure.
pub fn verify_certificates(certs: &[CoveringCertificate]) -> Result<Vec<CertificateCheck>> {
    par::try_map_heavy(certs, CoveringCertificate::verify)
}
