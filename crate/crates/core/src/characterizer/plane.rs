//! Coverings of `T^2 ∖ N(F; eps)` by dyadic cells.
//!
//! Characters are chosen greedily on a finite sample of the target, then
//! the torus is subdivided: a cell is a leaf once it lies in an open
//! `eps`-ball around some `f` or `phi` maps it strictly into `(1/4, 3/4)`
//! mod 1. Cells that reach the depth limit become new samples.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::covering::{Candidates, CoveringBudget, INNER_BITS};
use crate::error::{check_dim, Error, Result};
use crate::par;
use crate::torus::num::{frac, norm_rat};
use crate::torus::{Character, CircleValue, TorusPoint};

/// Samples live on the grid `2^-SCALE Z^2`.
const SCALE: u32 = 16;
const GRID: u64 = 64;

/// The square `[i, i+1] x [j, j+1] / 2^depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub i: u64,
    pub j: u64,
    pub depth: u32,
}

impl Cell {
    pub fn root() -> Cell {
        Cell { i: 0, j: 0, depth: 0 }
    }

    pub fn children(&self) -> [Cell; 4] {
        let (i, j, d) = (2 * self.i, 2 * self.j, self.depth + 1);
        [
            Cell { i, j, depth: d },
            Cell { i: i + 1, j, depth: d },
            Cell { i, j: j + 1, depth: d },
            Cell { i: i + 1, j: j + 1, depth: d },
        ]
    }

    pub fn parent(&self) -> Option<Cell> {
        (self.depth > 0).then(|| Cell { i: self.i / 2, j: self.j / 2, depth: self.depth - 1 })
    }

    /// Center and half-width.
    pub fn center(&self) -> ([BigRational; 2], BigRational) {
        let den = BigInt::from(2u64) << self.depth;
        let c = |k: u64| BigRational::new(BigInt::from(2 * k + 1), den.clone());
        ([c(self.i), c(self.j)], BigRational::new(1.into(), den.clone()))
    }

    pub fn is_valid(&self) -> bool {
        self.depth < 63 && self.i >> self.depth == 0 && self.j >> self.depth == 0
    }
}

/// How a leaf is resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellProof {
    /// Inside the open ball around `F[k]`.
    Ball(usize),
    /// Mapped into `(1/4, 3/4)` by `B[k]`.
    Phi(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLeaf {
    pub cell: Cell,
    #[serde(flatten)]
    pub proof: CellProof,
}

/// `||phi(cell)|| > 1/4` everywhere on the closed cell, exactly.
pub fn cell_is_good(phi: &Character, cell: &Cell) -> bool {
    let s = BigInt::from(2u64) << cell.depth;
    let c = phi.coeffs();
    let u = (&c[0] * (2 * cell.i + 1) + &c[1] * (2 * cell.j + 1)).mod_floor(&s);
    let r = c[0].abs() + c[1].abs();
    BigInt::from(4) * (&u - &r) > s && BigInt::from(4) * (&u + &r) < BigInt::from(3) * &s
}

/// The closed cell lies in the open sup-ball of radius `eps` around `f`.
pub fn cell_in_ball(f: &TorusPoint, eps: &BigRational, cell: &Cell) -> bool {
    let (c, h) = cell.center();
    c.iter().zip(f.coords()).all(|(ci, fi)| {
        let gap = match CircleValue::rational(ci.clone()).sub(fi) {
            CircleValue::Rational(r) => norm_rat(&r),
            other => match other.norm_at(INNER_BITS) {
                Ok(n) => n.upper(),
                Err(_) => return false,
            },
        };
        gap + &h < *eps
    })
}

/// Ball centers bucketed on a coarse grid for neighbor lookups.
struct Balls<'a> {
    points: &'a [TorusPoint],
    approx: Vec<[f64; 2]>,
    eps: &'a BigRational,
    buckets: HashMap<(u64, u64), Vec<usize>>,
    side: u64,
}

impl<'a> Balls<'a> {
    fn new(points: &'a [TorusPoint], eps: &'a BigRational) -> Balls<'a> {
        let e = eps.to_f64().unwrap_or(0.5).max(1e-12);
        let side = ((1.0 / e).floor() as u64).clamp(1, 1024);
        let approx: Vec<[f64; 2]> = points
            .iter()
            .map(|p| {
                let v: Vec<f64> = p.coords().iter().map(|c| c.enclose(64).lo().to_f64().unwrap_or(0.0)).collect();
                [v[0], v[1]]
            })
            .collect();
        let mut buckets: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
        for (k, a) in approx.iter().enumerate() {
            buckets.entry(bucket(a, side)).or_default().push(k);
        }
        Balls { points, approx, eps, buckets, side }
    }

    fn near(&self, x: [f64; 2]) -> Vec<usize> {
        let (bi, bj) = bucket(&x, self.side);
        let mut out = Vec::new();
        let s = self.side;
        let span: Vec<u64> = if s <= 3 { (0..s).collect() } else { vec![s - 1, 0, 1] };
        for di in &span {
            for dj in &span {
                let key = if s <= 3 { (*di, *dj) } else { ((bi + di) % s, (bj + dj) % s) };
                if let Some(v) = self.buckets.get(&key) {
                    out.extend(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn containing_cell(&self, cell: &Cell) -> Option<usize> {
        let w = 1.0 / (1u64 << cell.depth) as f64;
        let x = [(cell.i as f64 + 0.5) * w, (cell.j as f64 + 0.5) * w];
        let e = self.eps.to_f64().unwrap_or(0.5);
        self.near(x).into_iter().find(|&k| {
            let a = self.approx[k];
            let d = circle_gap(x[0], a[0]).max(circle_gap(x[1], a[1]));
            d + w / 2.0 < e + 1e-9 && cell_in_ball(&self.points[k], self.eps, cell)
        })
    }

    /// Whether a grid point is in some open ball.
    fn covers_point(&self, p: [u64; 2]) -> bool {
        let unit = (1u64 << SCALE) as f64;
        let x = [p[0] as f64 / unit, p[1] as f64 / unit];
        let den = BigInt::from(1u64) << SCALE;
        let exact = [BigRational::new(p[0].into(), den.clone()), BigRational::new(p[1].into(), den)];
        self.near(x).into_iter().any(|k| {
            self.points[k].coords().iter().zip(&exact).all(|(fi, xi)| {
                match CircleValue::rational(xi.clone()).sub(fi) {
                    CircleValue::Rational(r) => norm_rat(&r) < *self.eps,
                    other => other.norm_at(INNER_BITS).is_ok_and(|n| n.upper() < *self.eps),
                }
            })
        })
    }
}

fn bucket(x: &[f64; 2], side: u64) -> (u64, u64) {
    let b = |v: f64| ((v.rem_euclid(1.0) * side as f64).floor() as u64).min(side - 1);
    (b(x[0]), b(x[1]))
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// `||phi(p)|| > 1/4` for a grid point `p`.
fn good_at(phi_mod: &[u64; 2], p: &[u64; 2]) -> bool {
    let m = 1u64 << SCALE;
    let r = ((phi_mod[0] as u128 * p[0] as u128 + phi_mod[1] as u128 * p[1] as u128) % m as u128) as u64;
    4 * r > m && 4 * r < 3 * m
}

fn reduce(phi: &Character) -> [u64; 2] {
    let m = BigInt::from(1u64 << SCALE);
    let c = phi.coeffs();
    [c[0].mod_floor(&m).to_u64().expect("reduced"), c[1].mod_floor(&m).to_u64().expect("reduced")]
}

/// A plane covering: the chosen characters and the leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneCover {
    pub chars: Vec<Character>,
    pub leaves: Vec<CellLeaf>,
}

pub(crate) fn cover_plane(
    f: &[TorusPoint],
    eps: &BigRational,
    candidates: &mut Candidates<'_>,
    budget: &CoveringBudget,
) -> Result<PlaneCover> {
    for p in f {
        check_dim(2, p.dim())?;
    }
    let balls = Balls::new(f, eps);
    let step = (1u64 << SCALE) / GRID;
    let mut samples: Vec<[u64; 2]> = (0..GRID * GRID)
        .map(|k| [(k / GRID) * step + step / 2, (k % GRID) * step + step / 2])
        .collect();
    samples.retain(|p| !balls.covers_point(*p));
    let mut chosen: Vec<Character> = Vec::new();
    for _ in 0..budget.max_rounds {
        greedy_samples(&samples, &mut chosen, candidates, budget)?;
        let (leaves, unresolved) = subdivide(&balls, &chosen, budget)?;
        if unresolved.is_empty() {
            return Ok(PlaneCover { chars: chosen, leaves });
        }
        let fresh: Vec<[u64; 2]> = unresolved
            .iter()
            .flat_map(cell_points)
            .filter(|p| !balls.covers_point(*p))
            .filter(|p| !chosen.iter().any(|phi| good_at(&reduce(phi), p)))
            .collect();
        if fresh.is_empty() {
            let c = unresolved[0];
            return Err(Error::BudgetExhausted(format!(
                "cell ({}, {}) at depth {} cannot be resolved by {} characters",
                c.i,
                c.j,
                c.depth,
                chosen.len()
            )));
        }
        samples.extend(fresh);
    }
    Err(Error::BudgetExhausted(format!("plane covering did not settle in {} rounds", budget.max_rounds)))
}

/// Center and corners of a cell, on the sample grid.
fn cell_points(cell: &Cell) -> Vec<[u64; 2]> {
    let m = 1u64 << SCALE;
    let w = m >> cell.depth;
    let (x, y) = (cell.i * w, cell.j * w);
    let mut out = vec![[x + w / 2, y + w / 2]];
    for (a, b) in [(x, y), (x + w, y), (x, y + w), (x + w, y + w)] {
        out.push([a % m, b % m]);
    }
    out
}

fn greedy_samples(
    samples: &[[u64; 2]],
    chosen: &mut Vec<Character>,
    candidates: &mut Candidates<'_>,
    budget: &CoveringBudget,
) -> Result<()> {
    let reduced: Vec<[u64; 2]> = chosen.iter().map(reduce).collect();
    let mut open: Vec<[u64; 2]> =
        samples.iter().filter(|p| !reduced.iter().any(|r| good_at(r, p))).copied().collect();
    let mut pool_size = 32usize.min(budget.max_pool);
    while !open.is_empty() {
        if chosen.len() >= budget.max_chars {
            return Err(Error::BudgetExhausted(format!("character budget exhausted with {} samples open", open.len())));
        }
        let pool: Vec<Character> =
            candidates.prefix(pool_size)?.iter().filter(|c| !chosen.contains(c)).cloned().collect();
        let gains = par::map(&pool, |phi| {
            let r = reduce(phi);
            open.iter().filter(|p| good_at(&r, p)).count()
        });
        let mut best: Option<usize> = None;
        for (i, &g) in gains.iter().enumerate() {
            if g > 0 && best.is_none_or(|b| g > gains[b]) {
                best = Some(i);
            }
        }
        match best {
            Some(i) => {
                let r = reduce(&pool[i]);
                open.retain(|p| !good_at(&r, p));
                chosen.push(pool[i].clone());
            }
            None if pool_size < budget.max_pool && !candidates.exhausted() => pool_size *= 2,
            None => {
                let p = open[0];
                let unit = 1u64 << SCALE;
                return Err(Error::BudgetExhausted(format!(
                    "no window character detects ({}/{unit}, {}/{unit})",
                    p[0], p[1]
                )));
            }
        }
    }
    Ok(())
}

/// Subdivides `T^2` until every leaf is resolved or at maximal depth.
fn subdivide(balls: &Balls<'_>, chosen: &[Character], budget: &CoveringBudget) -> Result<(Vec<CellLeaf>, Vec<Cell>)> {
    let mut leaves = Vec::new();
    let mut unresolved = Vec::new();
    let mut layer = vec![Cell::root()];
    while !layer.is_empty() {
        let resolved = par::map(&layer, |cell| {
            balls
                .containing_cell(cell)
                .map(CellProof::Ball)
                .or_else(|| chosen.iter().position(|phi| cell_is_good(phi, cell)).map(CellProof::Phi))
        });
        let mut next = Vec::new();
        for (cell, proof) in layer.iter().zip(resolved) {
            match proof {
                Some(proof) => leaves.push(CellLeaf { cell: *cell, proof }),
                None if cell.depth < budget.max_depth => next.extend(cell.children()),
                None => unresolved.push(*cell),
            }
        }
        if leaves.len() + next.len() > budget.max_pieces {
            return Err(Error::BudgetExhausted(format!("more than {} plane cells", budget.max_pieces)));
        }
        layer = next;
    }
    leaves.sort_by_key(|l| l.cell);
    Ok((leaves, unresolved))
}

/// Checks that the leaves tile `T^2`: no cell is repeated or contains
/// another, and the areas add up to one.
pub fn check_tiling(cells: &[Cell]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for c in cells {
        if !c.is_valid() {
            return Err(Error::Certificate(format!("cell ({}, {}) at depth {} is out of range", c.i, c.j, c.depth)));
        }
        if !seen.insert(*c) {
            return Err(Error::Certificate(format!("cell ({}, {}) at depth {} is repeated", c.i, c.j, c.depth)));
        }
    }
    for c in cells {
        let mut up = c.parent();
        while let Some(p) = up {
            if seen.contains(&p) {
                return Err(Error::Certificate(format!(
                    "cell ({}, {}) at depth {} lies inside another leaf",
                    c.i, c.j, c.depth
                )));
            }
            up = p.parent();
        }
    }
    let area: BigRational = cells.iter().map(|c| BigRational::new(1.into(), BigInt::from(1u64) << (2 * c.depth))).sum();
    if area != BigRational::from_integer(1.into()) {
        return Err(Error::Certificate(format!("cells cover area {area}, not 1")));
    }
    Ok(())
}

/// `||phi(x)|| > 1/4` on the closed cell, recomputed from rationals.
pub fn cell_is_good_exact(phi: &Character, cell: &Cell) -> Result<bool> {
    check_dim(2, phi.dim())?;
    let (c, h) = cell.center();
    let u = frac(&phi.dot_rational(&c)?);
    let r = h * BigRational::from_integer(phi.coeffs().iter().map(|k| k.abs()).sum());
    let quarter = BigRational::new(1.into(), 4.into());
    let three = BigRational::new(3.into(), 4.into());
    Ok(&u - &r > quarter && &u + &r < three)
}
