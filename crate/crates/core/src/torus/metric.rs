use serde::{Deserialize, Serialize};

use super::point::TorusPoint;
use super::value::NormValue;
use crate::error::{check_dim, Error, Result};

/// Invariant metrics on `T^d` and truncated `T^omega`.
///
/// `Sup` is `max_i ||x_i - y_i||`; `Weighted` is `sum_i 2^-i ||x_i - y_i||`
/// with 0-based `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Sup,
    Weighted,
}

impl Metric {
    /// Sup on `T^d`, weighted sum on `T^omega` truncations.
    pub fn default_for(omega: bool) -> Metric {
        if omega {
            Metric::Weighted
        } else {
            Metric::Sup
        }
    }

    /// Folds per-coordinate distances into the metric value.
    pub fn combine(&self, per_coord: &[NormValue]) -> NormValue {
        let mut it = per_coord.iter().enumerate();
        let Some((_, first)) = it.next() else {
            return NormValue::Exact(Default::default());
        };
        it.fold(first.clone(), |acc, (i, v)| match self {
            Metric::Sup => acc.max(v),
            Metric::Weighted => acc.add(&v.scale_pow2(i as u32)),
        })
    }

    pub fn distance(&self, x: &TorusPoint, y: &TorusPoint) -> Result<NormValue> {
        check_dim(x.dim(), y.dim())?;
        let diff = x.sub(y)?;
        let per = diff.coords().iter().map(|c| c.norm()).collect::<Result<Vec<_>>>()?;
        Ok(self.combine(&per))
    }

    pub fn norm(&self, x: &TorusPoint) -> Result<NormValue> {
        self.distance(x, &TorusPoint::zero(x.dim()))
    }

    /// Distance from `x` to a finite set.
    pub fn set_distance(&self, x: &TorusPoint, set: &[TorusPoint]) -> Result<NormValue> {
        let mut best: Option<NormValue> = None;
        for f in set {
            let d = self.distance(x, f)?;
            best = Some(match best {
                None => d,
                Some(b) => b.min(&d),
            });
        }
        best.ok_or_else(|| Error::invalid("distance to an empty set"))
    }
}
