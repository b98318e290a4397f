//! From a tower of finite stages to a characterizing set with per-level
//! covering certificates.
//!
//! For each level `n` the pipeline computes the hull `F_n = q_n(E_n)`, the
//! window `A_n` of characters that are `2^-n-2`-small on `E_n`, a radius
//! `eps_n` below half the separation of `F_{n+1}`, and a finite `B_n ⊆ A_n`
//! such that every point of the closure `N` at distance `>= eps_n` from
//! `F_n` has `||phi(x)|| > 1/4` for some `phi ∈ B_n`. Non-dense unions are
//! handled inside their closure and lifted back.

pub mod certificate;
pub mod covering;
pub mod epsilon;
pub mod plane;
pub mod tower;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

pub use certificate::{span_is_good, verify_certificates, CertificateCheck, CoveringCertificate};
pub use covering::{coset_circles, window_members, ArcPiece, CosetCircle, CoveringBudget};
pub use epsilon::{epsilons, min_gap, EpsilonSchedule};
pub use plane::{Cell, CellLeaf, CellProof};
pub use tower::{build_tower, StageSource, Tower};

use crate::charset::CharSet;
use crate::error::{Error, Result};
use crate::lattice::{ClosedSubgroup, Lattice};
use crate::par;
use crate::quasiconvex::{char_window_with, character_shell, quasi_hull_bounded, quasi_hull_with, HullLimits};
use crate::torus::num::{frac, inv_pow2};
use crate::torus::{Character, Metric, Precision, TorusPoint};
use covering::{assign_pieces, cover_circles, invariant_under, pull_back, window_period, Candidates};

/// How the closure `N` of the union relates to the ambient torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureKind {
    /// The union is a finite group.
    Finite,
    /// `N = T^d`.
    Dense,
    /// `N` is a proper infinite closed subgroup.
    Proper,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterizeOptions {
    pub levels: usize,
    /// Metric for the separation radii; coverings in `T^2` use the sup metric.
    pub metric: Metric,
    pub covering: CoveringBudget,
    pub limits: HullLimits,
    pub precision: Precision,
    /// Character box for hulls of irrational stages.
    pub hull_char_bound: u64,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        CharacterizeOptions {
            levels: 8,
            metric: Metric::Sup,
            covering: CoveringBudget::default(),
            limits: HullLimits::default(),
            precision: Precision::default(),
            hull_char_bound: 64,
        }
    }
}

/// Output of [`characterize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Characterization {
    pub charset: CharSet,
    pub certificates: Vec<CoveringCertificate>,
    pub kind: ClosureKind,
    pub closure: ClosedSubgroup,
    /// `F_0, ..., F_L`.
    pub hulls: Vec<Vec<TorusPoint>>,
    pub eps: Vec<BigRational>,
    /// False when some hull came from a bounded search.
    pub complete: bool,
}

/// Runs the pipeline for `opts.levels` levels.
pub fn characterize(tower: &Tower, opts: &CharacterizeOptions) -> Result<Characterization> {
    let dim = tower.dim();
    let levels = opts.levels;
    if levels == 0 {
        return Err(Error::invalid("at least one level is needed"));
    }
    let (kind, closure) = closure_of(tower, levels)?;
    if kind == ClosureKind::Finite {
        return characterize_finite(&closure, levels);
    }
    if dim > 1 && opts.metric != Metric::Sup {
        return Err(Error::Unsupported("coverings in T^d for d > 1 use the sup metric".into()));
    }
    match (kind, dim, closure.torus_rank()) {
        (ClosureKind::Dense, 1 | 2, _) | (ClosureKind::Proper, _, 1) => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "coverings are implemented for T, T^2 and closures of torus rank 1, not {closure} in T^{dim}"
            )))
        }
    }
    let stages = tower.stages(levels + 1)?;
    for (n, stage) in stages.iter().enumerate() {
        if kind == ClosureKind::Proper {
            if let Some(p) = stage.iter().find(|p| !closure.contains(p).unwrap_or(false)) {
                return Err(Error::invalid(format!("stage {n} contains {p}, which is outside the declared closure")));
            }
        }
    }
    let (hulls, complete) = hull_tower(&stages, opts)?;
    let schedule = epsilons(&hulls, opts.metric)?;
    let circles = match kind {
        ClosureKind::Proper => coset_circles(&closure, opts.covering.max_pieces)?,
        _ => Vec::new(),
    };
    let jobs: Vec<usize> = (0..levels).collect();
    let certificates = par::try_map_heavy(&jobs, |&n| {
        let job = LevelJob {
            n,
            stage: &stages[n],
            hull: &hulls[n],
            eps: &schedule.eps[n],
            closure: &closure,
            kind,
            circles: &circles,
            opts,
        };
        job.run()
    })?;
    let on_n: Vec<Vec<Character>> = certificates.iter().map(|c| c.b.clone()).collect();
    let tolerance: Vec<BigRational> = (0..levels).map(|n| inv_pow2(n as u32 + 2)).collect();
    let base = CharSet::new(dim, on_n)?.with_tolerance(tolerance)?;
    let charset = if kind == ClosureKind::Proper { lift_charset(&base, &closure)? } else { base };
    Ok(Characterization { charset, certificates, kind, closure, hulls, eps: schedule.eps, complete })
}

/// Declared closure, declared or detected finiteness, otherwise dense.
fn closure_of(tower: &Tower, levels: usize) -> Result<(ClosureKind, ClosedSubgroup)> {
    let dim = tower.dim();
    if let Some(lattice) = tower.declared_closure() {
        let group = ClosedSubgroup::from_annihilator(lattice.clone());
        let kind = if group.is_whole() {
            ClosureKind::Dense
        } else if group.is_finite() {
            ClosureKind::Finite
        } else {
            ClosureKind::Proper
        };
        return Ok((kind, group));
    }
    if tower.is_rational() {
        let last = match tower.explicit_len() {
            Some(len) => len - 1,
            None => levels,
        };
        let stage = tower.stage(last)?;
        let group = ClosedSubgroup::generated_by(dim, &stage)?;
        let is_group = group.order().is_some_and(|o| o == BigInt::from(stage.len()));
        let stable = tower.declared_finite() || (tower.stage(last + 1)? == stage && is_group);
        if tower.declared_finite() && !is_group {
            return Err(Error::invalid(format!("stage {last} is declared finite but is not a group")));
        }
        if stable {
            return Ok((ClosureKind::Finite, group));
        }
    }
    Ok((ClosureKind::Dense, ClosedSubgroup::whole(dim)))
}

/// `H` finite: `B = H^⊥`, level `n` holding the lattice vectors with
/// coordinates of sup norm `n + 1`.
fn characterize_finite(group: &ClosedSubgroup, levels: usize) -> Result<Characterization> {
    let dim = group.dim();
    let basis = group.annihilator().basis().to_vec();
    let level_sets = (0..levels)
        .map(|n| {
            character_shell(basis.len(), n as u64 + 1)
                .into_iter()
                .map(|c| combine(dim, &basis, c.coeffs()).canonical_sign())
                .collect()
        })
        .collect();
    let charset = CharSet::new(dim, level_sets)?.with_tolerance(vec![BigRational::zero(); levels])?;
    let hull = group.elements(1 << 20)?;
    Ok(Characterization {
        charset,
        certificates: Vec::new(),
        kind: ClosureKind::Finite,
        closure: group.clone(),
        hulls: vec![hull],
        eps: Vec::new(),
        complete: true,
    })
}

fn combine(dim: usize, basis: &[Character], coeffs: &[BigInt]) -> Character {
    let mut acc = Character::zero(dim);
    for (b, c) in basis.iter().zip(coeffs) {
        acc = acc.add(&b.scale(c)).expect("same dimension");
    }
    acc
}

/// `F_n = q_n(E_n)` for rational stages. Irrational stages use the bounded
/// search over `E_{2n+1}` and keep the tower nested.
fn hull_tower(stages: &[Vec<TorusPoint>], opts: &CharacterizeOptions) -> Result<(Vec<Vec<TorusPoint>>, bool)> {
    if stages.iter().flatten().all(TorusPoint::is_rational) {
        let jobs: Vec<usize> = (0..stages.len()).collect();
        let hulls = par::try_map_heavy(&jobs, |&n| Ok::<_, Error>(quasi_hull_with(&stages[n], n as u32, &opts.limits)?.hull))?;
        return Ok((hulls, true));
    }
    let mut hulls: Vec<Vec<TorusPoint>> = Vec::with_capacity(stages.len());
    for (n, stage) in stages.iter().enumerate() {
        let wide = match stages.last() {
            Some(last) if 2 * n + 1 >= stages.len() => last.clone(),
            _ => stages[2 * n + 1].clone(),
        };
        let hull = quasi_hull_bounded(stage, n as u32, &wide, opts.hull_char_bound, &opts.precision)?;
        let mut f = hull.hull;
        if let Some(prev) = hulls.last() {
            f.extend(prev.iter().cloned());
        }
        f.sort();
        f.dedup();
        hulls.push(f);
    }
    Ok((hulls, false))
}

struct LevelJob<'a> {
    n: usize,
    stage: &'a [TorusPoint],
    hull: &'a [TorusPoint],
    eps: &'a BigRational,
    closure: &'a ClosedSubgroup,
    kind: ClosureKind,
    circles: &'a [CosetCircle],
    opts: &'a CharacterizeOptions,
}

impl LevelJob<'_> {
    fn run(&self) -> Result<CoveringCertificate> {
        let dim = self.closure.dim();
        let window = char_window_with(self.stage, self.n as u32, &self.opts.limits, &self.opts.precision)?;
        let budget = &self.opts.covering;
        let mut cert = CoveringCertificate {
            n: self.n,
            dim,
            e: self.stage.to_vec(),
            f: self.hull.to_vec(),
            eps: self.eps.clone(),
            b: Vec::new(),
            closure: None,
            cosets: Vec::new(),
            arcs: Vec::new(),
            cells: Vec::new(),
        };
        let wrap = |e: Error| match e {
            Error::BudgetExhausted(msg) => Error::BudgetExhausted(format!("level {}: {msg}", self.n)),
            other => other,
        };
        match (self.kind, dim) {
            (ClosureKind::Proper, _) => {
                let targets = self
                    .circles
                    .iter()
                    .map(|c| c.target(self.hull, self.eps))
                    .collect::<Result<Vec<_>>>()?;
                let mut cands = Candidates::new(&window, BigInt::one(), budget.scan_limit);
                let cover = cover_circles(self.circles, &targets, &mut cands, budget).map_err(wrap)?;
                let reps = cover
                    .chars
                    .iter()
                    .map(|phi| self.closure.extend(&self.closure.restrict(phi)?))
                    .collect::<Result<Vec<_>>>()?;
                cert.arcs = assign_pieces(self.circles, &targets, &reps)?;
                cert.b = reps;
                cert.closure = Some(self.closure.annihilator().basis().to_vec());
                cert.cosets = self.circles.to_vec();
            }
            (_, 1) => {
                let (chars, arcs) = self.cover_circle(&window).map_err(wrap)?;
                cert.b = chars;
                cert.arcs = arcs;
            }
            _ => {
                let mut cands = Candidates::new(&window, BigInt::one(), budget.scan_limit);
                let cover = plane::cover_plane(self.hull, self.eps, &mut cands, budget).map_err(wrap)?;
                cert.b = cover.chars;
                cert.cells = cover.leaves;
            }
        }
        Ok(cert)
    }

    /// The circle case, passing to `T / <1/g>` when every window member is
    /// a multiple of `g` and `F` is invariant under `x -> x + 1/g`.
    fn cover_circle(&self, window: &crate::quasiconvex::CharWindow) -> Result<(Vec<Character>, Vec<ArcPiece>)> {
        let budget = &self.opts.covering;
        let circle = CosetCircle::standard();
        let rational: Option<Vec<BigRational>> =
            self.hull.iter().map(|p| p.rational_coords().map(|mut v| v.remove(0))).collect();
        if let (Some(g), Some(f)) = (window_period(window), rational) {
            if !g.is_one() && invariant_under(&f, &g) {
                let gr = BigRational::from_integer(g.clone());
                let mut reduced: Vec<BigRational> = f.iter().map(|x| frac(&(x * &gr))).collect();
                reduced.sort();
                reduced.dedup();
                let points = reduced.iter().map(|x| TorusPoint::from_rationals(std::slice::from_ref(x))).collect::<Result<Vec<_>>>()?;
                let target = circle.target(&points, &(self.eps * &gr))?;
                let mut cands = Candidates::new(window, g.clone(), budget.scan_limit);
                let cover = cover_circles(std::slice::from_ref(&circle), &[target], &mut cands, budget)?;
                let chars = cover.chars.iter().map(|c| c.scale(&g)).collect();
                return Ok((chars, pull_back(&cover.pieces, &g)));
            }
        }
        let target = circle.target(self.hull, self.eps)?;
        let mut cands = Candidates::new(window, BigInt::one(), budget.scan_limit);
        let cover = cover_circles(std::slice::from_ref(&circle), &[target], &mut cands, budget)?;
        Ok((cover.chars, cover.pieces))
    }
}

/// Lifts a characterizing set of `N` (characters given by any extension to
/// `T^d`) to `T^d`: level `n` holds the canonical extensions of level `n`
/// and the vectors of `N^⊥` with lattice coordinates of sup norm `n + 1`.
pub fn lift_charset(b: &CharSet, n: &ClosedSubgroup) -> Result<CharSet> {
    if n.is_finite() {
        return Err(Error::invalid(format!("{n} is finite, so its dual has no countably infinite subsets")));
    }
    if n.is_whole() {
        return Ok(b.clone());
    }
    let dim = n.dim();
    let basis = n.annihilator().basis().to_vec();
    let levels = b
        .levels()
        .iter()
        .enumerate()
        .map(|(i, level)| {
            let mut out = level
                .iter()
                .map(|phi| n.extend(&n.restrict(phi)?))
                .collect::<Result<Vec<_>>>()?;
            out.extend(
                character_shell(basis.len(), i as u64 + 1)
                    .into_iter()
                    .map(|c| combine(dim, &basis, c.coeffs()).canonical_sign()),
            );
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let lifted = CharSet::new(dim, levels)?;
    match b.tolerance() {
        Some(t) => lifted.with_tolerance(t.to_vec()),
        None => Ok(lifted),
    }
}

/// A sequence read as a set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SequenceSet {
    /// Distinct values in order of first appearance.
    Set(CharSet),
    /// The second half of the prefix brings no new value: the sequence
    /// looks eventually periodic over `values`, and `s_u` is the closed
    /// subgroup `ker(values)`.
    Closed { values: Vec<Character>, kernel: Lattice },
}

/// A 1-1 enumeration of `B` in level order.
pub fn set_to_sequence(b: &CharSet) -> Vec<Character> {
    b.to_sequence()
}

pub fn sequence_to_set(dim: usize, u: &[Character]) -> Result<SequenceSet> {
    let half = u.len() / 2;
    let head = &u[..half];
    let tail = &u[half..];
    if !tail.is_empty() && tail.iter().all(|phi| head.contains(phi)) {
        let mut values: Vec<Character> = Vec::new();
        for phi in tail {
            if !values.contains(phi) {
                values.push(phi.clone());
            }
        }
        let kernel = Lattice::from_generators(dim, &values)?;
        return Ok(SequenceSet::Closed { values, kernel });
    }
    Ok(SequenceSet::Set(CharSet::from_sequence(dim, u.to_vec())?))
}
