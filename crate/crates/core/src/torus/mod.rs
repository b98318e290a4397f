//! Points of finite tori, characters, norms and invariant metrics.
//!
//! Circle values come in three tiers: exact rationals, exact quadratic
//! irrationals, and verified dyadic intervals. Operations stay exact as long
//! as the inputs allow it and fall back to intervals otherwise.

pub mod cf;
pub mod interval;
pub mod metric;
pub mod num;
pub mod point;
pub mod surd;
pub mod value;

pub use cf::{cf_convergents, ContinuedFraction, Convergent};
pub use interval::Interval;
pub use metric::Metric;
pub use point::{char_norm, eval_char, Character, TorusPoint};
pub use surd::QuadSurd;
pub use value::{CircleValue, NormValue, Precision};

/// `||z||` for a circle value.
pub fn norm(z: &CircleValue) -> crate::Result<NormValue> {
    z.norm()
}

/// Distance between two points under `metric`.
pub fn metric_d(x: &TorusPoint, y: &TorusPoint, metric: Metric) -> crate::Result<NormValue> {
    metric.distance(x, y)
}
