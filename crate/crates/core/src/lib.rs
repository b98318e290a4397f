//! Characterizing sets of characters for countable subgroups of finite tori.
//!
//! A set `B` of characters of a compact abelian group `X` characterizes a
//! subgroup `H` when `H` is exactly the set of `x` with `phi(x) -> 0` along
//! `B`. This crate builds such sets for countable subgroups of `T` and `T^2`
//! from a tower of finite stages, emits per-level covering certificates that
//! can be re-checked without the producing run, and provides the supporting
//! machinery: exact circle arithmetic, integer lattices and Smith normal
//! form, quasi-convex hulls, membership profiling, and refutation witnesses
//! for increasing chains of closed subgroups.

pub mod arcs;
pub mod characterizer;
pub mod charset;
pub mod classic;
pub mod error;
pub mod fsigma;
pub mod lattice;
pub mod par;
pub mod quasiconvex;
pub mod torus;
pub mod verifier;

pub use charset::CharSet;
pub use error::{Error, Result};
pub use torus::{Character, CircleValue, Metric, NormValue, Precision, TorusPoint};
