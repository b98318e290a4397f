//! Increasing chains of closed subgroups: the finite-index test, the split
//! of a character set along the chain, and points that no prefix of a
//! character set can exclude when some index is infinite.
//!
//! A stage is `F = T^S x <G>` with `S` a set of free coordinates and `G` a
//! finite set of rational generators. The ambient group is `T^d`, a
//! truncation `T^L` of `T^omega` (weighted metric), or a product of cyclic
//! groups `Z/d_i` seen inside `T^k`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::charset::CharSet;
use crate::error::{check_dim, Error, Result};
use crate::lattice::{annihilator, ClosedSubgroup, Lattice};
use crate::par;
use crate::torus::num::{inv_pow2, norm_rat};
use crate::torus::{eval_char, Character, Metric, TorusPoint};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Torus(usize),
    /// The first `L` coordinates of `T^omega`.
    Omega(usize),
    /// `Z/d_1 x ... x Z/d_k`.
    Cyclic(Vec<u64>),
}

impl Ambient {
    pub fn dim(&self) -> usize {
        match self {
            Ambient::Torus(d) | Ambient::Omega(d) => *d,
            Ambient::Cyclic(ds) => ds.len(),
        }
    }

    pub fn metric(&self) -> Metric {
        Metric::default_for(matches!(self, Ambient::Omega(_)))
    }

    fn modulus(&self, i: usize) -> Option<u64> {
        match self {
            Ambient::Cyclic(ds) => Some(ds[i]),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    #[serde(default)]
    pub generators: Vec<TorusPoint>,
    #[serde(default)]
    pub free: Vec<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub ambient: Ambient,
    pub stages: Vec<StageSpec>,
    /// Each inclusion is claimed to be proper.
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "yes")]
    pub metrizable: bool,
}

impl ChainSpec {
    /// `F_n = <g_n>` for single generators in `T^d`.
    pub fn cyclic(dim: usize, gens: Vec<TorusPoint>) -> ChainSpec {
        let stages = gens.into_iter().map(|g| StageSpec { generators: vec![g], free: Vec::new() }).collect();
        ChainSpec { ambient: Ambient::Torus(dim), stages, strict: false, metrizable: true }
    }

    /// `F_n = T^n x {0}` in `T^L`, for `n = 0..=len`.
    pub fn coordinate(len: usize) -> ChainSpec {
        let stages = (0..=len).map(|n| StageSpec { generators: Vec::new(), free: (0..n).collect() }).collect();
        ChainSpec { ambient: Ambient::Omega(len), stages, strict: true, metrizable: true }
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Validates the descriptors and returns the stages as closed subgroups.
    pub fn groups(&self) -> Result<Vec<ClosedSubgroup>> {
        let dim = self.dim();
        if self.stages.is_empty() {
            return Err(Error::invalid("a chain needs at least one stage"));
        }
        let mut out: Vec<ClosedSubgroup> = Vec::with_capacity(self.stages.len());
        for (n, stage) in self.stages.iter().enumerate() {
            for &i in &stage.free {
                if i >= dim {
                    return Err(Error::invalid(format!("stages[{n}].free: coordinate {i} is outside T^{dim}")));
                }
                if self.ambient.modulus(i).is_some() {
                    return Err(Error::invalid(format!("stages[{n}].free: coordinate {i} is cyclic")));
                }
            }
            for g in &stage.generators {
                check_dim(dim, g.dim())?;
                if !g.is_rational() {
                    return Err(Error::Unsupported(format!("stages[{n}].generators: {g} is irrational")));
                }
                for (i, c) in g.rational_coords().expect("rational").iter().enumerate() {
                    if let Some(d) = self.ambient.modulus(i) {
                        if !(c * BigRational::from_integer(d.into())).is_integer() {
                            return Err(Error::invalid(format!("stages[{n}].generators: {g} is outside the ambient group")));
                        }
                    }
                }
            }
            let group = stage_group(dim, stage)?;
            if let Some(prev) = out.last() {
                if !group.annihilator().is_sublattice_of(prev.annihilator())? {
                    return Err(Error::invalid(format!("stages[{n}] does not contain stages[{}]", n - 1)));
                }
                if self.strict && group == *prev {
                    return Err(Error::invalid(format!("stages[{n}] equals stages[{}] in a strict chain", n - 1)));
                }
            }
            out.push(group);
        }
        Ok(out)
    }
}

fn stage_group(dim: usize, stage: &StageSpec) -> Result<ClosedSubgroup> {
    let mut lattice = annihilator(dim, &stage.generators)?;
    if !stage.free.is_empty() {
        let fixed: Vec<Character> = (0..dim)
            .filter(|i| !stage.free.contains(i))
            .map(|i| unit(dim, i, BigInt::one()))
            .collect();
        lattice = lattice.intersect(&Lattice::from_generators(dim, &fixed)?)?;
    }
    Ok(ClosedSubgroup::from_annihilator(lattice))
}

fn unit(dim: usize, i: usize, k: BigInt) -> Character {
    let mut v = vec![BigInt::zero(); dim];
    v[i] = k;
    Character::new(v).expect("nonempty")
}

/// Outcome of the finite-index test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionC {
    /// Every index from stage `m` on is finite.
    Holds { m: usize, indices: Vec<Option<BigInt>> },
    Refused { at: usize, reason: String, indices: Vec<Option<BigInt>> },
}

/// `|F_{n+1} : F_n|`, computed as `|F_n^⊥ : F_{n+1}^⊥|`; `None` is infinite.
pub fn chain_indices(chain: &ChainSpec) -> Result<Vec<Option<BigInt>>> {
    let groups = chain.groups()?;
    groups.windows(2).map(|w| w[1].annihilator().index_in(w[0].annihilator())).collect()
}

/// The last listed inclusion stands for the rest of the chain, so the test
/// refuses when it has infinite index.
pub fn check_condition_c(chain: &ChainSpec) -> Result<ConditionC> {
    let indices = chain_indices(chain)?;
    if !chain.metrizable {
        return Ok(ConditionC::Refused { at: 0, reason: "the quotient is not metrizable".into(), indices });
    }
    match indices.iter().rposition(Option::is_none) {
        None => Ok(ConditionC::Holds { m: 0, indices }),
        Some(last) if last + 1 < indices.len() => Ok(ConditionC::Holds { m: last + 1, indices }),
        Some(_) => {
            let at = indices.iter().position(Option::is_none).expect("some index is infinite");
            let reason = format!("|F_{} : F_{at}| is infinite", at + 1);
            Ok(ConditionC::Refused { at, reason, indices })
        }
    }
}

/// `B` split along the chain: `levels[n] = B ∩ F_n^⊥ ∖ F_{n+1}^⊥`, the last
/// level being `B ∩ F_last^⊥`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub levels: Vec<Vec<Character>>,
    /// Characters not in `F_0^⊥`.
    pub outside: Vec<Character>,
    /// `counters[n][p]`: characters in the first `p + 1` levels of `B` that
    /// do not annihilate `F_n`.
    pub counters: Vec<Vec<usize>>,
    /// The counter grew over the second half of the prefix.
    pub growing: Vec<bool>,
}

impl Partition {
    /// Levels as a character set, `outside` joined to level 0.
    pub fn leveled(&self, dim: usize) -> Result<CharSet> {
        let mut levels = self.levels.clone();
        if let Some(first) = levels.first_mut() {
            first.splice(0..0, self.outside.iter().cloned());
        }
        CharSet::new(dim, levels)
    }
}

pub fn partition_b(b: &CharSet, chain: &ChainSpec) -> Result<Partition> {
    check_dim(chain.dim(), b.dim())?;
    let groups = chain.groups()?;
    let all: Vec<(usize, Character)> = b.iter().map(|(n, phi)| (n, phi.clone())).collect();
    // deepest stage each character annihilates, None when not even F_0
    let depth = par::try_map(&all, |(_, phi)| -> Result<Option<usize>> {
        let mut d = None;
        for (n, g) in groups.iter().enumerate() {
            if g.annihilator().contains(phi)? {
                d = Some(n);
            } else {
                break;
            }
        }
        Ok(d)
    })?;
    let mut levels = vec![Vec::new(); groups.len()];
    let mut outside = Vec::new();
    for ((_, phi), d) in all.iter().zip(&depth) {
        match d {
            Some(n) => levels[*n].push(phi.clone()),
            None => outside.push(phi.clone()),
        }
    }
    let prefix = b.num_levels();
    let counters: Vec<Vec<usize>> = (0..groups.len())
        .map(|n| {
            let mut counts = vec![0usize; prefix];
            for ((level, _), d) in all.iter().zip(&depth) {
                if d.is_none_or(|k| k < n) {
                    counts[*level] += 1;
                }
            }
            let mut acc = 0;
            counts.iter().map(|c| {
                acc += c;
                acc
            })
            .collect()
        })
        .collect();
    let growing = counters
        .iter()
        .map(|c| match (c.last(), prefix / 2) {
            (Some(&last), half) if half > 0 => last > c[half - 1],
            _ => false,
        })
        .collect();
    Ok(Partition { levels, outside, counters, growing })
}

/// `d(y_n, F_n)`, `d(x_n, F_n)` with `x_n = y_n + y_{n+1} + ...`, and
/// `d(y_{n+1}, 0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceCert {
    pub n: usize,
    pub y_dist: BigRational,
    pub x_dist: BigRational,
    pub next_norm: Option<BigRational>,
}

/// `||phi(x)||` against `2^(1-n)` for `phi ∈ B_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayCert {
    pub n: usize,
    pub phi: Character,
    pub value: BigRational,
    pub bound: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    pub ys: Vec<TorusPoint>,
    /// `y_0 + ... + y_{L-1}`.
    pub x: TorusPoint,
    pub distance: Vec<DistanceCert>,
    pub decay: Vec<DecayCert>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefuteBudget {
    pub max_denominator: u64,
    pub element_budget: usize,
}

impl Default for RefuteBudget {
    fn default() -> Self {
        RefuteBudget { max_denominator: 1 << 24, element_budget: 1 << 16 }
    }
}

/// `y_n = (1/q) e_i` on the first coordinate freed at step `n`, with the
/// smallest `q` meeting `||phi(y_n)|| <= 2^-n` on `B_0 ∪ ... ∪ B_n` (and
/// the characters outside `F_0^⊥`) and `d(y_n, 0) <= d(y_{n-1}, F_{n-1}) / 3`.
pub fn refutation_witness(chain: &ChainSpec, b: &CharSet, levels: usize, budget: &RefuteBudget) -> Result<Refutation> {
    let groups = chain.groups()?;
    let steps = levels.min(groups.len() - 1);
    if steps == 0 {
        return Err(Error::invalid("the chain needs at least two stages"));
    }
    let indices = chain_indices(chain)?;
    if let Some(n) = indices[..steps].iter().position(Option::is_some) {
        return Err(match check_condition_c(chain)? {
            ConditionC::Holds { m, .. } => Error::invalid(format!(
                "condition (c) holds from stage {m} (see check-chain), so no refutation exists"
            )),
            ConditionC::Refused { .. } => Error::invalid(format!(
                "|F_{} : F_{n}| is finite; pass to a subchain with infinite indices",
                n + 1
            )),
        });
    }
    let part = partition_b(b, chain)?;
    let metric = chain.ambient.metric();
    let dim = chain.dim();
    let mut constraints: Vec<Character> = part.outside.clone();
    let mut ys: Vec<TorusPoint> = Vec::with_capacity(steps);
    let mut prev_dist: Option<BigRational> = None;
    for n in 0..steps {
        constraints.extend(part.levels[n].iter().cloned());
        let i = (0..dim)
            .find(|i| chain.stages[n + 1].free.contains(i) && !chain.stages[n].free.contains(i))
            .ok_or_else(|| Error::Unsupported(format!("step {n} frees no coordinate")))?;
        let bound = inv_pow2(n as u32);
        let mut found = None;
        for q in 2..=budget.max_denominator {
            let t = BigRational::new(BigInt::one(), q.into());
            let mut coords = vec![BigRational::zero(); dim];
            coords[i] = t.clone();
            let y = TorusPoint::from_rationals(&coords)?;
            if let Some(d) = &prev_dist {
                if metric.norm(&y)?.upper() * BigRational::from_integer(3.into()) > *d {
                    continue;
                }
            }
            let small = constraints
                .iter()
                .all(|phi| norm_rat(&(BigRational::from_integer(phi.coeffs()[i].clone()) * &t)) <= bound);
            if small && !groups[n].contains(&y)? {
                found = Some(y);
                break;
            }
        }
        let y = found.ok_or_else(|| Error::BudgetExhausted(format!("no admissible y_{n} with denominator <= {}", budget.max_denominator)))?;
        prev_dist = Some(distance_to(&y, &chain.stages[n], &groups[n], metric, budget.element_budget)?);
        ys.push(y);
    }
    check_refutation(chain, b, &ys, budget)
}

/// `d(z, T^S x <G>)`: coordinates in `S` contribute nothing, the rest is
/// minimized over the finite projection of `<G>`.
fn distance_to(z: &TorusPoint, stage: &StageSpec, group: &ClosedSubgroup, metric: Metric, budget: usize) -> Result<BigRational> {
    let dim = z.dim();
    let zc = z.rational_coords().ok_or_else(|| Error::invalid(format!("{z} is not rational")))?;
    let fixed: Vec<usize> = (0..dim).filter(|i| !stage.free.contains(i)).collect();
    let elements = if fixed.is_empty() { vec![TorusPoint::zero(dim)] } else { group.finite_part(budget)? };
    let mut best: Option<BigRational> = None;
    for g in &elements {
        let gc = g.rational_coords().expect("finite part is rational");
        let per: Vec<BigRational> = (0..dim)
            .map(|i| if fixed.contains(&i) { norm_rat(&(&zc[i] - &gc[i])) } else { BigRational::zero() })
            .collect();
        let d = match metric {
            Metric::Sup => per.into_iter().max().unwrap_or_default(),
            Metric::Weighted => per.iter().enumerate().map(|(i, v)| v * inv_pow2(i as u32)).sum(),
        };
        if best.as_ref().is_none_or(|b| d < *b) {
            best = Some(d);
        }
    }
    Ok(best.unwrap_or_default())
}

/// Re-derives and checks every inequality of a refutation exactly.
pub fn check_refutation(chain: &ChainSpec, b: &CharSet, ys: &[TorusPoint], budget: &RefuteBudget) -> Result<Refutation> {
    let groups = chain.groups()?;
    let steps = ys.len();
    if steps == 0 || steps >= groups.len() {
        return Err(Error::invalid(format!("{steps} points for a chain of {} stages", groups.len())));
    }
    let part = partition_b(b, chain)?;
    let metric = chain.ambient.metric();
    let dim = chain.dim();
    let fail = |msg: String| Error::Certificate(msg);
    let mut constraints: Vec<Character> = part.outside.clone();
    for (n, y) in ys.iter().enumerate() {
        check_dim(dim, y.dim())?;
        if !groups[n + 1].contains(y)? || groups[n].contains(y)? {
            return Err(fail(format!("y_{n} = {y} is not in F_{} minus F_{n}", n + 1)));
        }
        constraints.extend(part.levels[n].iter().cloned());
        let bound = inv_pow2(n as u32);
        for phi in &constraints {
            let v = norm_rat(eval_char(phi, y)?.as_rational().expect("rational"));
            if v > bound {
                return Err(fail(format!("||{phi}(y_{n})|| = {v} exceeds 2^-{n}")));
            }
        }
    }
    let norms = ys.iter().map(|y| Ok(metric.norm(y)?.upper())).collect::<Result<Vec<_>>>()?;
    let mut distance = Vec::with_capacity(steps);
    let mut tail = TorusPoint::zero(dim);
    let mut tails = vec![TorusPoint::zero(dim); steps];
    for n in (0..steps).rev() {
        tail = tail.add(&ys[n])?;
        tails[n] = tail.clone();
    }
    for n in 0..steps {
        let y_dist = distance_to(&ys[n], &chain.stages[n], &groups[n], metric, budget.element_budget)?;
        let x_dist = distance_to(&tails[n], &chain.stages[n], &groups[n], metric, budget.element_budget)?;
        if !(y_dist > BigRational::zero() && &x_dist * BigRational::from_integer(2.into()) >= y_dist) {
            return Err(fail(format!("d(x_{n}, F_{n}) < d(y_{n}, F_{n}) / 2")));
        }
        let mut factor = BigRational::one();
        for k in n + 1..steps {
            factor /= BigRational::from_integer(3.into());
            if norms[k] > &y_dist * &factor {
                return Err(fail(format!("d(y_{k}, 0) exceeds d(y_{n}, F_{n}) / 3^{}", k - n)));
            }
        }
        distance.push(DistanceCert { n, y_dist, x_dist, next_norm: norms.get(n + 1).cloned() });
    }
    let x = tails[0].clone();
    let mut decay = Vec::new();
    for n in 0..steps {
        let bound = BigRational::from_integer(2.into()) * inv_pow2(n as u32);
        for phi in &part.levels[n] {
            let value = norm_rat(eval_char(phi, &x)?.as_rational().expect("rational"));
            if value > bound {
                return Err(fail(format!("||{phi}(x)|| = {value} exceeds 2^(1-{n})")));
            }
            decay.push(DecayCert { n, phi: phi.clone(), value, bound: bound.clone() });
        }
    }
    Ok(Refutation { ys: ys.to_vec(), x, distance, decay })
}
