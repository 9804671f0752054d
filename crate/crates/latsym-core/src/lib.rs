//! Lie point symmetries of partial difference schemes on transforming
//! two-dimensional lattices.
//!
//! A difference scheme here is five equations relating `(x, t, u)` at the
//! points of a stencil: four fix the lattice, one approximates the equation.
//! Point transformations act on the whole system, lattice included. This
//! crate finds the point-symmetry algebra of such a scheme numerically over a
//! finite ansatz: it samples on-shell stencil configurations, imposes the
//! prolonged invariance conditions as linear constraints on the ansatz
//! coefficients, and extracts the nullspace by singular value decomposition.
//!
//! The main pieces:
//!
//! - [`dsl`]: the expression language schemes and fields are written in, with
//!   exact forward-mode derivatives.
//! - [`lattice`]: schemes, stencil configurations, on-shell Newton solves and
//!   grid propagation.
//! - [`symmetry`]: ansatz bases, vector fields, the prolonged action and Lie
//!   brackets.
//! - [`finder`]: the sampling + nullspace symmetry finder with sector
//!   splitting and structure constants.
//! - [`flow`]: one-parameter group flows and solution-to-solution checks.
//! - [`continuum`]: continuous-limit probes and the change-of-variables
//!   check.
//! - [`catalog`]: ready-made schemes (heat on five lattices, Lorentz-invariant
//!   interactions, two discrete Burgers equations) with closed-form symmetry
//!   oracles.

pub mod catalog;
pub mod continuum;
pub mod dsl;
pub mod finder;
pub mod flow;
pub mod lattice;
pub mod report;
pub mod sampling;
pub mod symmetry;

pub use catalog::{instantiate, CatalogEntry, CatalogError};
pub use dsl::{parse_expression, Expression};
pub use finder::{find_symmetries, FinderOptions, SymmetryBasis};
pub use lattice::{propagate_grid, GridSolution, Scheme, StencilConfiguration, Window};
pub use symmetry::{lie_bracket, prolonged_action, AnsatzBasis, DslField, VectorField};
