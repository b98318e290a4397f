use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::IntMatrix;
use super::snf::snf;
use crate::error::{check_dim, Error, Result};
use crate::torus::Character;

/// A sublattice of `Z^d`, stored as a row-style Hermite normal form basis:
/// echelon rows with positive pivots and entries above each pivot reduced
/// into `[0, pivot)`. Two lattices are equal iff their bases are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    basis: Vec<Character>,
}

impl Lattice {
    pub fn from_generators(dim: usize, gens: &[Character]) -> Result<Lattice> {
        for g in gens {
            check_dim(dim, g.dim())?;
        }
        let rows: Vec<Vec<BigInt>> = gens.iter().map(|g| g.coeffs().to_vec()).collect();
        Ok(Lattice { dim, basis: hermite_rows(rows, dim).into_iter().map(|r| Character::new(r).expect("dim > 0")).collect() })
    }

    pub fn zero(dim: usize) -> Lattice {
        Lattice { dim, basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Lattice {
        Lattice::scaled(dim, &BigInt::one())
    }

    /// `q Z^d`.
    pub fn scaled(dim: usize, q: &BigInt) -> Lattice {
        let basis = (0..dim)
            .map(|i| {
                let mut v = vec![BigInt::zero(); dim];
                v[i] = q.abs();
                Character::new(v).expect("dim > 0")
            })
            .collect();
        Lattice { dim, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Character] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim
    }

    /// Index `[Z^d : L]` for full-rank lattices, i.e. `|det|`.
    pub fn determinant(&self) -> Option<BigInt> {
        self.is_full_rank().then(|| self.basis.iter().enumerate().map(|(i, b)| b.coeffs()[i].clone()).product())
    }

    pub fn basis_matrix(&self) -> Option<IntMatrix> {
        let rows: Vec<Vec<BigInt>> = self.basis.iter().map(|b| b.coeffs().to_vec()).collect();
        (!rows.is_empty()).then(|| IntMatrix::from_rows(&rows, self.dim).expect("consistent rows"))
    }

    /// Coordinates of `v` in the basis, if `v` lies in the lattice.
    pub fn coordinates(&self, v: &Character) -> Result<Option<Vec<BigInt>>> {
        check_dim(self.dim, v.dim())?;
        let mut rest = v.coeffs().to_vec();
        let mut coords = Vec::with_capacity(self.rank());
        for b in &self.basis {
            let (p, pivot) = pivot_of(b.coeffs());
            let (q, r) = rest[p].div_rem(pivot);
            if !r.is_zero() {
                return Ok(None);
            }
            for (x, y) in rest.iter_mut().zip(b.coeffs()) {
                *x -= &q * y;
            }
            coords.push(q);
        }
        Ok(rest.iter().all(Zero::is_zero).then_some(coords))
    }

    pub fn contains(&self, v: &Character) -> Result<bool> {
        Ok(self.coordinates(v)?.is_some())
    }

    pub fn is_sublattice_of(&self, other: &Lattice) -> Result<bool> {
        check_dim(self.dim, other.dim)?;
        for b in &self.basis {
            if !other.contains(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        check_dim(self.dim, other.dim)?;
        let gens: Vec<Character> = self.basis.iter().chain(&other.basis).cloned().collect();
        Lattice::from_generators(self.dim, &gens)
    }

    /// `L1 ∩ L2`, from the left kernel of the stacked basis matrix.
    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        check_dim(self.dim, other.dim)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Lattice::zero(self.dim));
        }
        let mut rows: Vec<Vec<BigInt>> = self.basis.iter().map(|b| b.coeffs().to_vec()).collect();
        rows.extend(other.basis.iter().map(|b| b.coeffs().iter().map(|x| -x).collect::<Vec<_>>()));
        let m = IntMatrix::from_rows(&rows, self.dim)?;
        let s = snf(&m);
        let r = s.rank();
        let k = self.rank();
        let gens: Vec<Character> = (r..m.rows())
            .map(|i| {
                let c = &s.u.row(i)[..k];
                let v: Vec<BigInt> = (0..self.dim)
                    .map(|j| c.iter().zip(&self.basis).fold(BigInt::zero(), |acc, (a, b)| acc + a * &b.coeffs()[j]))
                    .collect();
                Character::new(v).expect("dim > 0")
            })
            .collect();
        Lattice::from_generators(self.dim, &gens)
    }

    /// `[super : self]`, or `None` when the index is infinite.
    pub fn index_in(&self, sup: &Lattice) -> Result<Option<BigInt>> {
        if !self.is_sublattice_of(sup)? {
            return Err(Error::invalid("index requested for a lattice that is not contained in the other"));
        }
        if self.rank() != sup.rank() {
            return Ok(None);
        }
        if self.rank() == 0 {
            return Ok(Some(BigInt::one()));
        }
        let rows = self
            .basis
            .iter()
            .map(|b| Ok(sup.coordinates(b)?.expect("checked containment")))
            .collect::<Result<Vec<_>>>()?;
        let det = IntMatrix::from_rows(&rows, self.rank())?.determinant()?;
        Ok(Some(det.abs()))
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.basis.iter().map(ToString::to_string).collect();
        write!(f, "<{}>", parts.join(", "))
    }
}

fn pivot_of(row: &[BigInt]) -> (usize, &BigInt) {
    row.iter().enumerate().find(|(_, x)| !x.is_zero()).expect("basis rows are nonzero")
}

/// Row-style Hermite normal form of the lattice spanned by `rows`.
pub(crate) fn hermite_rows(mut rows: Vec<Vec<BigInt>>, dim: usize) -> Vec<Vec<BigInt>> {
    rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    let mut r = 0;
    for c in 0..dim {
        loop {
            let best = (r..rows.len())
                .filter(|&i| !rows[i][c].is_zero())
                .min_by(|&i, &j| rows[i][c].abs().cmp(&rows[j][c].abs()).then(i.cmp(&j)));
            let Some(b) = best else { break };
            rows.swap(r, b);
            let mut done = true;
            for i in r + 1..rows.len() {
                if rows[i][c].is_zero() {
                    continue;
                }
                let q = rows[i][c].div_floor(&rows[r][c]);
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &q * y;
                }
                done &= rows[i][c].is_zero();
            }
            if done {
                break;
            }
        }
        if r < rows.len() && !rows[r][c].is_zero() {
            if rows[r][c].is_negative() {
                for x in rows[r].iter_mut() {
                    *x = -&*x;
                }
            }
            let pivot = rows[r].clone();
            for row in rows.iter_mut().take(r) {
                let q = row[c].div_floor(&pivot[c]);
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x -= &q * y;
                }
            }
            r += 1;
        }
    }
    rows.truncate(r);
    rows
}

/// `{c in Z^s : A c = 0 mod q}` for an integer matrix `A` with `s` columns.
pub fn kernel_mod(a: &IntMatrix, q: &BigInt) -> Result<Lattice> {
    if !q.is_positive() {
        return Err(Error::invalid("modulus must be positive"));
    }
    let s = snf(a);
    let n = a.cols();
    let diag = s.diagonal();
    let gens: Vec<Character> = (0..n)
        .map(|i| {
            let di = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
            let mult = q / di.gcd(q);
            Character::new(s.v.col(i).into_iter().map(|x| x * &mult).collect()).expect("n > 0")
        })
        .collect();
    Lattice::from_generators(n, &gens)
}
