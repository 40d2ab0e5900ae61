//! Finite unitary groups U3(q), q = 2^n, over GF(q^2): construction, Bruhat
//! coordinates, generic subgroup machinery and structural checks.

pub mod error;
pub mod field;
pub mod group;
pub mod lemmas;
pub mod recon;
pub mod report;
pub mod tower;
pub mod unitary;

pub use error::{EngineError, Error, FieldError, GroupError, ReconError, TowerError};
pub use field::{FieldCtx, FieldElement};
pub use group::{closure, Group, SubgroupHandle};
pub use unitary::{BruhatCoord, GroupElement, UPair, UnitaryCtx};

#[cfg(test)]
mod tests;
