use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lattice::Lattice;
use crate::torus::{Character, TorusPoint};

/// Where the stages of a tower come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageSource {
    /// Explicit stages; the last one repeats forever.
    Explicit(Vec<Vec<TorusPoint>>),
    /// Stage `n` is every word of length `<= n` in the generators.
    Words(Vec<TorusPoint>),
    /// Stage `n` is `<1/p^(n+1)>` in `T`.
    Prufer(u64),
}

/// An increasing chain `E_0 ⊆ E_1 ⊆ ...` of finite subsets of `T^d`,
/// each normalized to contain `0` and to be closed under negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    dim: usize,
    source: StageSource,
    /// Annihilator of the closure of the union, when declared.
    closure: Option<Lattice>,
    /// Declares that the union is the finite group given by the last stage.
    finite: bool,
}

fn normalize(dim: usize, stage: &[TorusPoint]) -> Result<Vec<TorusPoint>> {
    let mut out = Vec::with_capacity(2 * stage.len() + 1);
    out.push(TorusPoint::zero(dim));
    for p in stage {
        check_dim(dim, p.dim())?;
        out.push(p.clone());
        out.push(p.neg());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

impl Tower {
    pub fn explicit(dim: usize, stages: Vec<Vec<TorusPoint>>) -> Result<Tower> {
        if stages.is_empty() {
            return Err(Error::invalid("a tower needs at least one stage"));
        }
        let stages = stages.iter().map(|s| normalize(dim, s)).collect::<Result<Vec<_>>>()?;
        for (n, w) in stages.windows(2).enumerate() {
            if let Some(p) = w[0].iter().find(|p| w[1].binary_search(p).is_err()) {
                return Err(Error::invalid(format!("stages are not nested: {p} is in stage {n} but not in stage {}", n + 1)));
            }
        }
        Ok(Tower { dim, source: StageSource::Explicit(stages), closure: None, finite: false })
    }

    /// The word-length tower of a generating set.
    pub fn words(dim: usize, generators: Vec<TorusPoint>) -> Result<Tower> {
        for g in &generators {
            check_dim(dim, g.dim())?;
        }
        Ok(Tower { dim, source: StageSource::Words(generators), closure: None, finite: false })
    }

    /// The tower `<1/p>, <1/p^2>, ...` of the Prüfer `p`-group.
    pub fn prufer(p: u64) -> Result<Tower> {
        if !crate::classic::is_prime(p) {
            return Err(Error::invalid(format!("{p} is not prime")));
        }
        Ok(Tower { dim: 1, source: StageSource::Prufer(p), closure: None, finite: false })
    }

    /// Declares the closure of the union through its annihilator.
    pub fn with_closure(mut self, annihilator: Lattice) -> Result<Tower> {
        check_dim(self.dim, annihilator.dim())?;
        self.closure = Some(annihilator);
        Ok(self)
    }

    /// Declares that the union is finite (the tower is eventually constant).
    pub fn with_finite(mut self, finite: bool) -> Tower {
        self.finite = finite;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &StageSource {
        &self.source
    }

    pub fn declared_closure(&self) -> Option<&Lattice> {
        self.closure.as_ref()
    }

    pub fn declared_finite(&self) -> bool {
        self.finite
    }

    pub fn is_rational(&self) -> bool {
        match &self.source {
            StageSource::Explicit(stages) => stages.iter().flatten().all(TorusPoint::is_rational),
            StageSource::Words(g) => g.iter().all(TorusPoint::is_rational),
            StageSource::Prufer(_) => true,
        }
    }

    /// Stage `E_n`, sorted.
    pub fn stage(&self, n: usize) -> Result<Vec<TorusPoint>> {
        match &self.source {
            StageSource::Explicit(stages) => Ok(stages[n.min(stages.len() - 1)].clone()),
            StageSource::Prufer(p) => {
                let q = num_traits::pow(BigInt::from(*p), n + 1);
                let q_usize: usize = (&q)
                    .try_into()
                    .map_err(|_| Error::BudgetExhausted(format!("Prüfer stage {n} is too large")))?;
                (0..q_usize)
                    .map(|k| TorusPoint::from_rationals(&[BigRational::new(k.into(), q.clone())]))
                    .collect()
            }
            StageSource::Words(gens) => {
                let mut cur = vec![TorusPoint::zero(self.dim)];
                let steps: Vec<TorusPoint> = gens.iter().flat_map(|g| [g.clone(), g.neg()]).collect();
                for _ in 0..n {
                    let mut next = cur.clone();
                    for x in &cur {
                        for s in &steps {
                            next.push(x.add(s)?);
                        }
                    }
                    next.sort();
                    next.dedup();
                    if next.len() == cur.len() {
                        break;
                    }
                    cur = next;
                }
                normalize(self.dim, &cur)
            }
        }
    }

    /// Stages `E_0, ..., E_{count-1}`.
    pub fn stages(&self, count: usize) -> Result<Vec<Vec<TorusPoint>>> {
        (0..count).map(|n| self.stage(n)).collect()
    }

    /// Number of explicitly given stages, if the tower is explicit.
    pub fn explicit_len(&self) -> Option<usize> {
        match &self.source {
            StageSource::Explicit(s) => Some(s.len()),
            _ => None,
        }
    }
}

/// `build_tower` for a generator list: the word-length schedule.
pub fn build_tower(dim: usize, generators: Vec<TorusPoint>) -> Result<Tower> {
    Tower::words(dim, generators)
}

#[derive(Serialize, Deserialize)]
struct TowerJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stages: Option<Vec<Vec<TorusPoint>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<TorusPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prufer: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    closure: Option<Vec<Character>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    finite: bool,
}

impl Serialize for Tower {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut j = TowerJson {
            dim: Some(self.dim),
            stages: None,
            generators: None,
            prufer: None,
            closure: self.closure.as_ref().map(|l| l.basis().to_vec()),
            finite: self.finite,
        };
        match &self.source {
            StageSource::Explicit(st) => j.stages = Some(st.clone()),
            StageSource::Words(g) => j.generators = Some(g.clone()),
            StageSource::Prufer(p) => j.prufer = Some(*p),
        }
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tower {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = TowerJson::deserialize(d)?;
        let infer = |pts: &[TorusPoint]| pts.first().map(TorusPoint::dim);
        let tower = match (j.stages, j.generators, j.prufer) {
            (Some(st), None, None) => {
                let dim = j.dim.or_else(|| st.iter().find_map(|s| infer(s))).unwrap_or(1);
                Tower::explicit(dim, st)
            }
            (None, Some(g), None) => {
                let dim = j.dim.or_else(|| infer(&g)).unwrap_or(1);
                Tower::words(dim, g)
            }
            (None, None, Some(p)) => match j.dim {
                Some(d) if d != 1 => Err(Error::invalid("Prüfer towers live in dimension 1")),
                _ => Tower::prufer(p),
            },
            _ => Err(Error::invalid("a tower needs exactly one of \"stages\", \"generators\" or \"prufer\"")),
        }
        .map_err(D::Error::custom)?;
        let tower = match j.closure {
            Some(basis) => {
                let lattice = Lattice::from_generators(tower.dim, &basis).map_err(D::Error::custom)?;
                tower.with_closure(lattice).map_err(D::Error::custom)?
            }
            None => tower,
        };
        Ok(tower.with_finite(j.finite))
    }
}
