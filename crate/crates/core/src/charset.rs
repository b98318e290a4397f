use std::collections::HashSet;

use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::torus::num::{fmt_rational, parse_rational};
use crate::torus::Character;

/// A leveled set of characters `B = B_0 ∪ B_1 ∪ ...`.
///
/// Order inside a level is preserved and a character is kept only at its
/// first occurrence, so the flattened sequence is a 1-1 enumeration of `B`.
/// Sets produced from windows also carry the per-level bound `2^-n-2` that
/// the window guarantees on the subgroup being characterized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharSet {
    dim: usize,
    levels: Vec<Vec<Character>>,
    tolerance: Option<Vec<BigRational>>,
}

impl CharSet {
    pub fn new(dim: usize, levels: Vec<Vec<Character>>) -> Result<CharSet> {
        if dim == 0 {
            return Err(Error::invalid("character sets need dimension >= 1"));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(levels.len());
        for level in levels {
            let mut kept = Vec::with_capacity(level.len());
            for phi in level {
                check_dim(dim, phi.dim())?;
                if seen.insert(phi.clone()) {
                    kept.push(phi);
                }
            }
            out.push(kept);
        }
        Ok(CharSet { dim, levels: out, tolerance: None })
    }

    /// One character per level.
    pub fn from_sequence(dim: usize, seq: Vec<Character>) -> Result<CharSet> {
        CharSet::new(dim, seq.into_iter().map(|c| vec![c]).collect())
    }

    pub fn empty(dim: usize) -> CharSet {
        CharSet { dim: dim.max(1), levels: Vec::new(), tolerance: None }
    }

    pub fn with_tolerance(mut self, tolerance: Vec<BigRational>) -> Result<CharSet> {
        if tolerance.len() != self.levels.len() {
            return Err(Error::DimensionMismatch { expected: self.levels.len(), found: tolerance.len() });
        }
        self.tolerance = Some(tolerance);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[Vec<Character>] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &[Character] {
        self.levels.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn tolerance(&self) -> Option<&[BigRational]> {
        self.tolerance.as_deref()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(level, character)` in enumeration order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Character)> {
        self.levels.iter().enumerate().flat_map(|(n, l)| l.iter().map(move |c| (n, c)))
    }

    /// The 1-1 enumeration of `B` in level order.
    pub fn to_sequence(&self) -> Vec<Character> {
        self.iter().map(|(_, c)| c.clone()).collect()
    }

    /// The first `n` levels.
    pub fn prefix_levels(&self, n: usize) -> CharSet {
        CharSet {
            dim: self.dim,
            levels: self.levels.iter().take(n).cloned().collect(),
            tolerance: self.tolerance.as_ref().map(|t| t.iter().take(n).cloned().collect()),
        }
    }

    /// Level at which `phi` occurs.
    pub fn level_of(&self, phi: &Character) -> Option<usize> {
        self.iter().find(|(_, c)| *c == phi).map(|(n, _)| n)
    }

    /// Appends a level, dropping characters already present.
    pub fn push_level(&mut self, level: Vec<Character>, tolerance: Option<BigRational>) -> Result<()> {
        let seen: HashSet<&Character> = self.iter().map(|(_, c)| c).collect();
        let mut kept = Vec::new();
        for phi in level {
            check_dim(self.dim, phi.dim())?;
            if !seen.contains(&phi) && !kept.contains(&phi) {
                kept.push(phi);
            }
        }
        match (&mut self.tolerance, tolerance) {
            (Some(t), Some(v)) => t.push(v),
            (None, None) => {}
            (None, Some(v)) if self.levels.is_empty() => self.tolerance = Some(vec![v]),
            _ => return Err(Error::invalid("tolerance must be given for every level or for none")),
        }
        self.levels.push(kept);
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CharSetJson {
    levels: Vec<Vec<Character>>,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<Vec<String>>,
}

impl Serialize for CharSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CharSetJson {
            levels: self.levels.clone(),
            dim: self.dim,
            tolerance: self.tolerance.as_ref().map(|t| t.iter().map(fmt_rational).collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CharSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CharSetJson::deserialize(d)?;
        let set = CharSet::new(raw.dim, raw.levels).map_err(D::Error::custom)?;
        match raw.tolerance {
            None => Ok(set),
            Some(t) => {
                let t = t.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>().map_err(D::Error::custom)?;
                set.with_tolerance(t).map_err(D::Error::custom)
            }
        }
    }
}
