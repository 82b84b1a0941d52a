//! Stable sets, the ν-weighted projection onto them, and the p-energy
//! resolvent: the two backward-Euler building blocks.

mod constraint;
mod dykstra;
mod oracle;
mod resolvent;

pub use constraint::{ConstraintKind, ConstraintSet};
pub use dykstra::{project, Projector, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
pub use oracle::{project_oracle, MAX_ORACLE_EDGES};
pub use resolvent::{resolvent_p, NewtonOptions, Resolvent};
