//! Optimal pairs for the composite plate eigenvalue problem.
//!
//! A plate occupying a domain Ω is built from two materials with densities
//! `h < H` and a prescribed total mass. The goal is the arrangement that
//! minimizes the fundamental frequency of the biharmonic operator under
//! hinged (Navier) or clamped (Dirichlet) boundary conditions.
//!
//! The crate discretizes Ω by finite differences ([`grid`], [`operator`]),
//! computes smallest eigenpairs of symmetric pencils by inverse iteration
//! ([`eigen`]), and alternates eigen solves with a bathtub rearrangement of
//! the light material ([`optimize`]). The [`analysis`] module checks the
//! structural properties the optimal pairs are known to have: sub-level-set
//! optimal regions, monotone and Lipschitz dependence on the parameters,
//! positivity and radial symmetry on the disk. [`cli`] wires all of it to a
//! batch front-end.

pub mod analysis;
pub mod bathtub;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod grid;
pub mod operator;
pub mod optimize;
pub mod sparse;

pub use error::{Error, Result};
pub use grid::{Domain, DomainKind, Grid};
pub use operator::{BoundaryCondition, DiagonalWeight, PlateOperator, SparseOperator};
