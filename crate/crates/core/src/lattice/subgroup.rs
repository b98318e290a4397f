use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::hnf::{kernel_mod, Lattice};
use super::matrix::IntMatrix;
use super::snf::snf;
use crate::error::{check_dim, Error, Result};
use crate::torus::num::lcm;
use crate::torus::{eval_char, Character, CircleValue, TorusPoint};

/// `H^⊥` for a finite set of rational points: the lattice of characters
/// vanishing on every generator.
pub fn annihilator(dim: usize, gens: &[TorusPoint]) -> Result<Lattice> {
    let mut q = BigInt::one();
    let mut rats = Vec::with_capacity(gens.len());
    for g in gens {
        check_dim(dim, g.dim())?;
        let r = g
            .rational_coords()
            .ok_or_else(|| Error::invalid(format!("annihilator needs rational generators, got {g}")))?;
        q = lcm(&q, &g.denominator().expect("rational"));
        rats.push(r);
    }
    let rows: Vec<Vec<BigInt>> = rats
        .iter()
        .map(|r| r.iter().map(|c| (c * BigRational::from_integer(q.clone())).to_integer()).collect())
        .filter(|r: &Vec<BigInt>| r.iter().any(|x| !x.is_zero()))
        .collect();
    if rows.is_empty() {
        return Ok(Lattice::full(dim));
    }
    // only the row span mod q matters, so reduce to at most `dim` rows first
    let mut span: Vec<Character> = rows.into_iter().map(Character::new).collect::<Result<_>>()?;
    span.extend(Lattice::scaled(dim, &q).basis().iter().cloned());
    let reduced: Vec<Vec<BigInt>> =
        Lattice::from_generators(dim, &span)?.basis().iter().map(|b| b.coeffs().to_vec()).collect();
    let lattice = kernel_mod(&IntMatrix::from_rows(&reduced, dim)?, &q)?;
    for b in lattice.basis() {
        for g in gens {
            if eval_char(b, g)?.is_zero() != Some(true) {
                return Err(Error::invalid(format!("annihilator basis vector {b} does not vanish on {g}")));
            }
        }
    }
    Ok(lattice)
}

/// A closed subgroup `N` of `T^d`, described through its annihilator
/// `Λ = N^⊥`.
///
/// With `U Λ V = D` (basis rows of `Λ`) and `y = V^-1 x`, a point lies in
/// `N` iff `d_i y_i = 0` for every `i < rank Λ`, so `N ≅ ⊕ Z/d_i × T^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedSubgroup {
    dim: usize,
    annihilator: Lattice,
    /// All diagonal entries `d_i` for `i < rank Λ`, ones included.
    diag: Vec<BigInt>,
    v: IntMatrix,
    v_inv: IntMatrix,
}

impl ClosedSubgroup {
    pub fn from_annihilator(lattice: Lattice) -> ClosedSubgroup {
        let dim = lattice.dim();
        match lattice.basis_matrix() {
            None => ClosedSubgroup {
                dim,
                annihilator: lattice,
                diag: Vec::new(),
                v: IntMatrix::identity(dim),
                v_inv: IntMatrix::identity(dim),
            },
            Some(m) => {
                let s = snf(&m);
                let diag = s.diagonal().into_iter().take(lattice.rank()).collect();
                ClosedSubgroup { dim, annihilator: lattice, diag, v: s.v, v_inv: s.v_inv }
            }
        }
    }

    /// The subgroup generated by finitely many rational points.
    pub fn generated_by(dim: usize, gens: &[TorusPoint]) -> Result<ClosedSubgroup> {
        Ok(ClosedSubgroup::from_annihilator(annihilator(dim, gens)?))
    }

    pub fn whole(dim: usize) -> ClosedSubgroup {
        ClosedSubgroup::from_annihilator(Lattice::zero(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn annihilator(&self) -> &Lattice {
        &self.annihilator
    }

    /// Invariant factors `m_1 | m_2 | ...`, all greater than one.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diag.iter().filter(|d| !d.is_one()).cloned().collect()
    }

    pub fn torus_rank(&self) -> usize {
        self.dim - self.annihilator.rank()
    }

    pub fn is_finite(&self) -> bool {
        self.torus_rank() == 0
    }

    pub fn is_whole(&self) -> bool {
        self.annihilator.is_zero()
    }

    /// Order of a finite subgroup.
    pub fn order(&self) -> Option<BigInt> {
        self.is_finite().then(|| self.diag.iter().product())
    }

    /// Change of coordinates `x = V y`.
    pub fn basis_change(&self) -> &IntMatrix {
        &self.v
    }

    pub fn coordinate_map(&self) -> &IntMatrix {
        &self.v_inv
    }

    /// Cyclic generators `V e_i / d_i` for the nontrivial invariant factors.
    pub fn finite_generators(&self) -> Vec<TorusPoint> {
        self.diag
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_one())
            .map(|(i, d)| self.column_point(i, d))
            .collect()
    }

    /// Directions `V e_i` of the torus part, as integer vectors.
    pub fn torus_directions(&self) -> Vec<Vec<BigInt>> {
        (self.annihilator.rank()..self.dim).map(|i| self.v.col(i)).collect()
    }

    /// Rational generators; the torus directions contribute nothing here,
    /// so this regenerates `N` only when `N` is finite.
    pub fn generators(&self) -> Vec<TorusPoint> {
        self.finite_generators()
    }

    fn column_point(&self, i: usize, d: &BigInt) -> TorusPoint {
        let coords: Vec<BigRational> = self.v.col(i).into_iter().map(|c| BigRational::new(c, d.clone())).collect();
        TorusPoint::from_rationals(&coords).expect("dim > 0")
    }

    /// All elements of a finite subgroup, sorted.
    pub fn elements(&self, budget: usize) -> Result<Vec<TorusPoint>> {
        if !self.is_finite() {
            return Err(Error::invalid("cannot enumerate an infinite subgroup"));
        }
        self.finite_part(budget)
    }

    /// The elements `sum nu_i V e_i / d_i` of the finite factor, sorted.
    pub fn finite_part(&self, budget: usize) -> Result<Vec<TorusPoint>> {
        let order: BigInt = self.invariant_factors().iter().product();
        if order > BigInt::from(budget) {
            return Err(Error::BudgetExhausted(format!("finite part of order {order} exceeds element budget {budget}")));
        }
        let mut out = vec![TorusPoint::zero(self.dim)];
        for (g, d) in self.finite_generators().iter().zip(self.invariant_factors()) {
            let d: usize = d.try_into().expect("bounded by budget");
            let mut next = Vec::with_capacity(out.len() * d);
            for x in &out {
                let mut y = x.clone();
                for _ in 0..d {
                    next.push(y.clone());
                    y = y.add(g)?;
                }
            }
            out = next;
        }
        out.sort();
        Ok(out)
    }

    /// Exact membership test; intervals that cannot decide raise an error.
    pub fn contains(&self, x: &TorusPoint) -> Result<bool> {
        check_dim(self.dim, x.dim())?;
        for phi in self.annihilator.basis() {
            match eval_char(phi, x)?.is_zero() {
                Some(true) => {}
                Some(false) => return Ok(false),
                None => {
                    return Err(Error::PrecisionExhausted {
                        bits: 0,
                        context: format!("cannot decide whether {phi} vanishes on {x}"),
                    })
                }
            }
        }
        Ok(true)
    }

    /// Moduli of the coordinates of `N`: `Some(d)` for a cyclic factor,
    /// `None` for a circle factor.
    pub fn coordinate_moduli(&self) -> Vec<Option<BigInt>> {
        let mut out: Vec<Option<BigInt>> = self.invariant_factors().into_iter().map(Some).collect();
        out.extend(std::iter::repeat_n(None, self.torus_rank()));
        out
    }

    /// `phi↾N` in the coordinates of [`Self::coordinate_moduli`].
    pub fn restrict(&self, phi: &Character) -> Result<Vec<BigInt>> {
        check_dim(self.dim, phi.dim())?;
        let psi = self.v.left_mul_vec(phi.coeffs())?;
        let mut out = Vec::new();
        for (i, d) in self.diag.iter().enumerate() {
            if !d.is_one() {
                out.push(psi[i].mod_floor(d));
            }
        }
        out.extend(psi[self.annihilator.rank()..].iter().cloned());
        Ok(out)
    }

    /// A character of `T^d` whose restriction to `N` is `psi`.
    pub fn extend(&self, psi: &[BigInt]) -> Result<Character> {
        let moduli = self.coordinate_moduli();
        check_dim(moduli.len(), psi.len())?;
        let mut full = vec![BigInt::zero(); self.dim];
        let mut it = psi.iter();
        for (i, d) in self.diag.iter().enumerate() {
            if !d.is_one() {
                full[i] = it.next().expect("length checked").mod_floor(d);
            }
        }
        for slot in full.iter_mut().skip(self.annihilator.rank()) {
            *slot = it.next().expect("length checked").clone();
        }
        Character::new(self.v_inv.left_mul_vec(&full)?)
    }

    /// Whether two characters agree on `N`.
    pub fn same_restriction(&self, a: &Character, b: &Character) -> Result<bool> {
        self.annihilator.contains(&a.add(&b.neg())?)
    }
}

impl fmt::Display for ClosedSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.invariant_factors().iter().map(|m| format!("Z/{m}")).collect();
        match self.torus_rank() {
            0 => {}
            1 => parts.push("T".into()),
            k => parts.push(format!("T^{k}")),
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        write!(f, "{}", parts.join(" x "))
    }
}

/// The smallest closed subgroup containing the rational generators and the
/// closures of the irrational ones.
///
/// Irrational generators require `dependencies`: the lattice of characters
/// vanishing on all of them, as declared by the caller. Each basis vector is
/// checked against every irrational generator.
pub fn closure(dim: usize, gens: &[TorusPoint], dependencies: Option<&Lattice>) -> Result<ClosedSubgroup> {
    let (rational, irrational): (Vec<TorusPoint>, Vec<TorusPoint>) =
        gens.iter().cloned().partition(TorusPoint::is_rational);
    let mut lattice = annihilator(dim, &rational)?;
    if !irrational.is_empty() {
        let deps = dependencies.ok_or_else(|| {
            Error::Unsupported("irrational generators need a declared integer dependency lattice".into())
        })?;
        check_dim(dim, deps.dim())?;
        for phi in deps.basis() {
            for g in &irrational {
                match eval_char(phi, g)? {
                    CircleValue::Interval(_) => {
                        return Err(Error::Unsupported(format!("cannot verify that {phi} vanishes on {g}")))
                    }
                    v if v.is_zero() == Some(true) => {}
                    _ => return Err(Error::invalid(format!("declared dependency {phi} does not vanish on {g}"))),
                }
            }
        }
        lattice = lattice.intersect(deps)?;
    }
    Ok(ClosedSubgroup::from_annihilator(lattice))
}
