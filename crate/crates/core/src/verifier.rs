//! Finite-stage evidence about `C_B`: tail profiles, exact sublevel
//! measures, and separating characters for points outside a subgroup.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::arcs::ArcSet;
use crate::characterizer::Tower;
use crate::charset::CharSet;
use crate::error::{check_dim, Error, Result};
use crate::lattice::ClosedSubgroup;
use crate::par;
use crate::quasiconvex::character_shell;
use crate::torus::num::{decimal, fmt_rational, quarter};
use crate::torus::{eval_char, Character, NormValue, Precision, TorusPoint};

/// One character of the profiled prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub index: usize,
    pub level: usize,
    pub phi: Character,
    /// `None` when the precision cap was hit.
    pub value: Option<NormValue>,
    /// Max of the values from this entry to the end of the prefix.
    pub tail_max: Option<NormValue>,
    pub zero: bool,
    /// `||phi(x)|| >= 1/4`, verified.
    pub witness: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MemberSoFar,
    WitnessFound(Vec<usize>),
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailProfile {
    pub x: TorusPoint,
    pub levels: usize,
    pub entries: Vec<ProfileEntry>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProfileOptions {
    /// Witnesses needed for [`Verdict::WitnessFound`].
    pub witnesses: usize,
    pub precision: Precision,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { witnesses: 3, precision: Precision::default() }
    }
}

pub fn tail_profile(x: &TorusPoint, b: &CharSet, levels: usize) -> Result<TailProfile> {
    tail_profile_with(x, b, levels, &ProfileOptions::default())
}

/// Profiles `x` against the first `levels` levels of `B`.
///
/// Witnesses are counted after the last level that vanishes exactly.
/// Without enough of them the verdict is member-so-far when every value of
/// the last level is exactly zero or within that level's window bound.
pub fn tail_profile_with(x: &TorusPoint, b: &CharSet, levels: usize, opts: &ProfileOptions) -> Result<TailProfile> {
    check_dim(b.dim(), x.dim())?;
    let levels = levels.min(b.num_levels());
    let prefix: Vec<(usize, Character)> =
        b.iter().filter(|(n, _)| *n < levels).map(|(n, phi)| (n, phi.clone())).collect();
    let q = quarter();
    let mut entries = par::try_map(&prefix, |(level, phi)| -> Result<ProfileEntry> {
        let v = eval_char(phi, x)?;
        let zero = v.is_zero() == Some(true);
        let value = match v.norm() {
            Ok(n) => Some(n),
            Err(e) if e.is_exhaustion() => None,
            Err(e) => return Err(e),
        };
        let witness = match &value {
            Some(NormValue::Exact(r)) => *r >= q,
            _ => match v.cmp_norm(&q, &opts.precision) {
                Ok(o) => o != Ordering::Less,
                Err(e) if e.is_exhaustion() => false,
                Err(e) => return Err(e),
            },
        };
        Ok(ProfileEntry { index: 0, level: *level, phi: phi.clone(), value, tail_max: None, zero, witness })
    })?;
    let mut running: Option<NormValue> = None;
    let mut lost = false;
    for (i, e) in entries.iter_mut().enumerate().rev() {
        e.index = i;
        match (&e.value, &running) {
            (None, _) => lost = true,
            (Some(v), None) => running = Some(v.clone()),
            (Some(v), Some(r)) => running = Some(r.max(v)),
        }
        e.tail_max = if lost { None } else { running.clone() };
    }
    let verdict = decide(&entries, b, opts);
    Ok(TailProfile { x: x.clone(), levels, entries, verdict })
}

fn decide(entries: &[ProfileEntry], b: &CharSet, opts: &ProfileOptions) -> Verdict {
    let mut nonzero = vec![false; entries.last().map_or(0, |e| e.level + 1)];
    for e in entries.iter().filter(|e| !e.zero) {
        nonzero[e.level] = true;
    }
    let start = entries.iter().rposition(|e| !nonzero[e.level]).map_or(0, |i| i + 1);
    let witnesses: Vec<usize> = entries[start..].iter().filter(|e| e.witness).map(|e| e.index).collect();
    if witnesses.len() >= opts.witnesses.max(1) {
        return Verdict::WitnessFound(witnesses);
    }
    let small = |e: &ProfileEntry| {
        e.zero
            || match (b.tolerance(), &e.value) {
                (Some(t), Some(v)) => v.decide(&t[e.level]) != Some(Ordering::Greater) && v.upper() <= t[e.level],
                _ => false,
            }
    };
    let last = match entries.last() {
        Some(e) => e.level,
        None => return Verdict::Undetermined,
    };
    if entries.iter().filter(|e| e.level == last).all(small) {
        Verdict::MemberSoFar
    } else {
        Verdict::Undetermined
    }
}

impl TailProfile {
    /// Index of the first entry of the final run of small values.
    pub fn small_tail_start(&self) -> Option<usize> {
        let end = self.entries.iter().rposition(|e| !e.zero)?;
        (end + 1 < self.entries.len()).then_some(end + 1)
    }

    /// `level,phi,value,err`, one row per character.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,phi,value,err\n");
        for e in &self.entries {
            let phi = e.phi.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
            let (value, err) = match &e.value {
                Some(NormValue::Exact(r)) => (fmt_rational(r), "0".to_string()),
                Some(v) => (decimal(&v.lower(), 20), decimal(&v.error(), 20)),
                None => ("nan".to_string(), "inf".to_string()),
            };
            let _ = writeln!(out, "{},{},{},{}", e.level, phi, value, err);
        }
        out
    }

    /// Re-checks every witness with twice the precision budget.
    pub fn recheck_witnesses(&self, prec: &Precision) -> Result<bool> {
        let doubled = Precision { start_bits: prec.start_bits * 2, cap_bits: prec.cap_bits * 2 };
        let indices = match &self.verdict {
            Verdict::WitnessFound(ix) => ix.clone(),
            _ => return Ok(true),
        };
        for i in indices {
            let e = &self.entries[i];
            if eval_char(&e.phi, &self.x)?.cmp_norm(&quarter(), &doubled)? == Ordering::Less {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Exact Haar measure of `{x : ||phi x|| <= delta for every phi in the prefix}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureReport {
    pub levels: usize,
    pub delta: BigRational,
    pub measure: BigRational,
    pub arcs: ArcSet,
}

pub fn sublevel_measure(b: &CharSet, levels: usize, delta: &BigRational) -> Result<MeasureReport> {
    if b.dim() != 1 {
        return Err(Error::Unsupported("exact measures are computed on T only; use the Monte Carlo estimate".into()));
    }
    if !(delta > &BigRational::zero() && delta < &(BigRational::one() / BigInt::from(2))) {
        return Err(Error::invalid(format!("delta = {} is not in (0, 1/2)", fmt_rational(delta))));
    }
    let levels = levels.min(b.num_levels());
    let ball = ArcSet::norm_ball(delta, true);
    let zero = BigRational::zero();
    let mut set = ArcSet::full();
    for (_, phi) in b.iter().filter(|(n, _)| *n < levels) {
        let k = &phi.coeffs()[0];
        if k.is_zero() || set.is_empty() {
            continue;
        }
        set = ArcSet::preimage(&ball, k, &zero, &set);
    }
    Ok(MeasureReport { levels, delta: delta.clone(), measure: set.measure(), arcs: set })
}

/// Measures for the prefixes `1..=levels`.
pub fn sublevel_measures(b: &CharSet, levels: usize, delta: &BigRational) -> Result<Vec<MeasureReport>> {
    let ns: Vec<usize> = (1..=levels.min(b.num_levels())).collect();
    par::try_map_heavy(&ns, |&n| sublevel_measure(b, n, delta))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

const CHUNK: u64 = 4096;

/// Uniform sampling of the same sublevel set, any dimension. Each chunk of
/// samples has its own seeded generator, so the result does not depend on
/// the number of threads.
pub fn monte_carlo_measure(b: &CharSet, levels: usize, delta: f64, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::invalid("at least one sample is needed"));
    }
    let chars: Vec<Vec<f64>> = b
        .iter()
        .filter(|(n, _)| *n < levels)
        .map(|(_, phi)| phi.coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY)).collect())
        .collect();
    let dim = b.dim();
    let chunks = samples.div_ceil(CHUNK) as usize;
    let hits: Vec<u64> = par::map_range(chunks, |i| {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_add(i as u64));
        let count = CHUNK.min(samples - i as u64 * CHUNK);
        let mut x = vec![0.0; dim];
        let mut hit = 0;
        for _ in 0..count {
            x.iter_mut().for_each(|v| *v = rng.gen::<f64>());
            let inside = chars.iter().all(|phi| {
                let t: f64 = phi.iter().zip(&x).map(|(k, v)| (k * v).rem_euclid(1.0)).sum();
                let f = t.rem_euclid(1.0);
                f.min(1.0 - f) <= delta
            });
            hit += inside as u64;
        }
        hit
    });
    let p = hits.iter().sum::<u64>() as f64 / samples as f64;
    Ok(MonteCarloEstimate { estimate: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples, seed })
}

/// A character separating `x` from a finite stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationStep {
    pub n: usize,
    pub u: Character,
    /// `||u(x)||`, verified `> 1/4`.
    pub value: NormValue,
    /// Max of `||u(e)||` over the stage, verified `< 1/n`.
    pub stage_max: NormValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_candidates: usize,
    pub precision: Precision,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_candidates: 1 << 20, precision: Precision::default() }
    }
}

/// For `n = 1..=count`, the first character `u` in ascending sup norm with
/// `||u(x)|| > 1/4` and `||u(e)|| < 1/n` for every `e` in stage `n` of the
/// tower.
pub fn separation_witness(tower: &Tower, x: &TorusPoint, count: usize, budget: &SearchBudget) -> Result<Vec<SeparationStep>> {
    check_dim(tower.dim(), x.dim())?;
    let mut steps = Vec::with_capacity(count);
    for n in 1..=count {
        let stage = tower.stage(n)?;
        for e in &stage {
            if x.sub(e)?.is_zero() == Some(true) {
                return Err(Error::invalid(format!("{x} lies in stage {n}, so it is in H")));
            }
        }
        let bound = BigRational::new(BigInt::one(), BigInt::from(n));
        let step = search(x.dim(), budget, |u| separates(u, x, &stage, &bound, &budget.precision))?
            .ok_or_else(|| Error::BudgetExhausted(format!("no separating character for {x} at n = {n}")))?;
        let (u, value, stage_max) = step;
        steps.push(SeparationStep { n, u, value, stage_max });
    }
    Ok(steps)
}

type Found = (Character, NormValue, NormValue);

fn separates(u: &Character, x: &TorusPoint, stage: &[TorusPoint], bound: &BigRational, prec: &Precision) -> Result<Option<Found>> {
    let ux = eval_char(u, x)?;
    if ux.cmp_norm(&quarter(), prec)? != Ordering::Greater {
        return Ok(None);
    }
    let mut max = NormValue::Exact(BigRational::zero());
    for e in stage {
        let ue = eval_char(u, e)?;
        if ue.cmp_norm(bound, prec)? != Ordering::Less {
            return Ok(None);
        }
        max = max.max(&ue.norm()?);
    }
    Ok(Some((u.clone(), ux.norm()?, max)))
}

/// Scans characters shell by shell, returning the first hit in order.
fn search<T: Send>(dim: usize, budget: &SearchBudget, test: impl Fn(&Character) -> Result<Option<T>> + Sync + Send) -> Result<Option<T>> {
    let mut seen = 0usize;
    let mut h = 1u64;
    while seen < budget.max_candidates {
        let shell = character_shell(dim, h);
        seen += shell.len();
        let hits = par::try_map(&shell, |u| test(u))?;
        if let Some(hit) = hits.into_iter().flatten().next() {
            return Ok(Some(hit));
        }
        h += 1;
    }
    Ok(None)
}

impl SeparationStep {
    /// Recomputes both inequalities at doubled precision.
    pub fn recheck(&self, x: &TorusPoint, stage: &[TorusPoint], prec: &Precision) -> Result<bool> {
        let doubled = Precision { start_bits: prec.start_bits * 2, cap_bits: prec.cap_bits * 2 };
        let bound = BigRational::new(BigInt::one(), BigInt::from(self.n.max(1)));
        Ok(separates(&self.u, x, stage, &bound, &doubled)?.is_some())
    }
}

/// `u_n ∈ F_n^⊥` with `||u_n(x)|| >= 1/4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainStep {
    pub n: usize,
    pub u: Character,
    pub value: NormValue,
}

/// For closed subgroups `F_0 <= F_1 <= ...` given by generators, the first
/// vector of each annihilator lattice (ascending coefficient sup norm) that
/// moves `x` by at least `1/4`.
pub fn chain_witness_sequence(chain: &[Vec<TorusPoint>], x: &TorusPoint, budget: &SearchBudget) -> Result<Vec<ChainStep>> {
    let dim = x.dim();
    let groups = chain.iter().map(|g| ClosedSubgroup::generated_by(dim, g)).collect::<Result<Vec<_>>>()?;
    for (n, w) in groups.windows(2).enumerate() {
        for g in &chain[n] {
            if !w[1].contains(g)? {
                return Err(Error::invalid(format!("F_{n} is not contained in F_{}: {g}", n + 1)));
            }
        }
    }
    let mut steps = Vec::with_capacity(groups.len());
    for (n, group) in groups.iter().enumerate() {
        if group.contains(x)? {
            return Err(Error::invalid(format!("{x} lies in F_{n}")));
        }
        let basis = group.annihilator().basis().to_vec();
        if basis.is_empty() {
            return Err(Error::invalid(format!("F_{n} is the whole torus")));
        }
        let q = quarter();
        let found = search(basis.len(), budget, |c| {
            let mut u = Character::zero(dim);
            for (b, k) in basis.iter().zip(c.coeffs()) {
                u = u.add(&b.scale(k))?;
            }
            let v = eval_char(&u, x)?;
            Ok(match v.cmp_norm(&q, &budget.precision)? {
                Ordering::Less => None,
                _ => Some((u, v.norm()?)),
            })
        })?
        .ok_or_else(|| Error::BudgetExhausted(format!("no character of F_{n}^perp moves {x} by 1/4")))?;
        steps.push(ChainStep { n, u: found.0, value: found.1 });
    }
    Ok(steps)
}
