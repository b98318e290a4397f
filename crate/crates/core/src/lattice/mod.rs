//! Integer matrices, Smith and Hermite normal forms, annihilators and
//! closed subgroups of `T^d`.

pub mod hnf;
pub mod matrix;
pub mod snf;
pub mod subgroup;

pub use hnf::{kernel_mod, Lattice};
pub use matrix::IntMatrix;
pub use snf::{snf, Snf};
pub use subgroup::{annihilator, closure, ClosedSubgroup};
