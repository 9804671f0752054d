//! Difference schemes on two-dimensional lattices: residual evaluation,
//! nondegeneracy, on-shell solving and grid propagation.

mod config;
mod grid;
mod newton;
mod schemefile;

pub use config::{ConfigurationBuilder, PointState, StencilConfiguration};
pub use grid::{propagate_grid, GridSeed, GridSolution, Window};
pub use newton::{cell_jacobian, jacobian_nondegeneracy, residuals, solve_on_shell};
pub use schemefile::{load_scheme_file, parse_scheme_file, SchemeFileResult};

use std::collections::BTreeMap;

use crate::dsl::{DslError, Expression, GridRef};
use thiserror::Error;

/// Stencil extent around the reference point: offsets `-i1..=i2` in the first
/// index and `-j1..=j2` in the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilBounds {
    pub i1: u32,
    pub i2: u32,
    pub j1: u32,
    pub j2: u32,
}

impl StencilBounds {
    pub fn contains(&self, di: i32, dj: i32) -> bool {
        di >= -(self.i1 as i32) && di <= self.i2 as i32 && dj >= -(self.j1 as i32) && dj <= self.j2 as i32
    }
}

/// Typical step sizes used to seed Newton iterations when solving a stencil
/// placement; rough values are fine, damping does the rest.
#[derive(Debug, Clone, Copy)]
pub struct GuessSteps {
    pub x_m: f64,
    pub t_m: f64,
    pub x_n: f64,
    pub t_n: f64,
}

impl Default for GuessSteps {
    fn default() -> Self {
        GuessSteps {
            x_m: 1.0,
            t_m: 1.0,
            x_n: 1.0,
            t_n: 1.0,
        }
    }
}

/// A difference scheme: five residuals on a stencil, four fixing the lattice
/// and one approximating the equation, plus the designated quantities the
/// placement is solved for.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub name: String,
    pub bounds: StencilBounds,
    pub residuals: [Expression; 5],
    pub params: BTreeMap<String, f64>,
    pub solve_for: [GridRef; 5],
    /// Display label for the second coordinate: 't', or 'y' for light-cone
    /// schemes. Internally the coordinate slot is always T.
    pub second_coord: char,
    pub guess_steps: GuessSteps,
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("scheme `{name}`: {detail}")]
    InvalidScheme { name: String, detail: String },
    #[error("expression error: {0}")]
    Dsl(#[from] DslError),
    #[error("configuration does not cover {gref}")]
    MissingQuantity { gref: GridRef },
    #[error("Newton iteration failed to converge after {iters} iterations (residual {residual:.3e})")]
    NewtonNoConvergence { iters: usize, residual: f64 },
    #[error("Newton step rejected: residual norm would not decrease (residual {residual:.3e})")]
    NewtonStall { residual: f64 },
    #[error("Jacobian singular or below threshold: |det| = {det:.3e}")]
    SingularJacobian { det: f64 },
    #[error("insufficient seed data: cannot determine point ({m},{n})")]
    InsufficientSeed { m: i64, n: i64 },
    #[error("propagation produced inconsistent value at ({m},{n}) for {var}: {a} vs {b}")]
    InconsistentPropagation { m: i64, n: i64, var: char, a: f64, b: f64 },
    #[error("Newton failure at grid site ({m},{n}): {source}")]
    PropagationSite {
        m: i64,
        n: i64,
        #[source]
        source: Box<LatticeError>,
    },
    #[error("grid window is empty or inverted")]
    EmptyWindow,
    #[error("scheme file error: {0}")]
    SchemeFile(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Scheme {
    pub fn new(
        name: impl Into<String>,
        bounds: StencilBounds,
        residuals: [Expression; 5],
        params: BTreeMap<String, f64>,
        solve_for: [GridRef; 5],
    ) -> Result<Self, LatticeError> {
        let name = name.into();
        let scheme = Scheme {
            name,
            bounds,
            residuals,
            params,
            solve_for,
            second_coord: 't',
            guess_steps: GuessSteps::default(),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn with_second_coord(mut self, c: char) -> Self {
        self.second_coord = c;
        self
    }

    pub fn with_guess_steps(mut self, g: GuessSteps) -> Self {
        self.guess_steps = g;
        self
    }

    fn validate(&self) -> Result<(), LatticeError> {
        let fail = |detail: String| LatticeError::InvalidScheme {
            name: self.name.clone(),
            detail,
        };
        let mut all_refs = Vec::new();
        for (i, r) in self.residuals.iter().enumerate() {
            if r.uses_point_vars() {
                return Err(fail(format!(
                    "residual E{} uses a bare point variable; residuals must use grid references",
                    i + 1
                )));
            }
            for gref in r.grid_refs() {
                if !self.bounds.contains(gref.di, gref.dj) {
                    return Err(fail(format!(
                        "residual E{} references {gref} outside stencil bounds",
                        i + 1
                    )));
                }
                all_refs.push(*gref);
            }
            for p in r.param_names() {
                if !self.params.contains_key(p) {
                    return Err(fail(format!("residual E{} uses undeclared parameter `{p}`", i + 1)));
                }
            }
        }
        for (k, s) in self.solve_for.iter().enumerate() {
            if !all_refs.contains(s) {
                return Err(fail(format!(
                    "solve-for quantity {s} (slot {k}) does not appear in any residual"
                )));
            }
            if self.solve_for.iter().filter(|o| *o == s).count() != 1 {
                return Err(fail(format!("solve-for quantity {s} is repeated")));
            }
        }
        Ok(())
    }

    /// All stencil points referenced by at least one residual quantity.
    pub fn referenced_points(&self) -> Vec<(i32, i32)> {
        let mut pts: Vec<(i32, i32)> = self
            .residuals
            .iter()
            .flat_map(|r| r.grid_refs().iter().map(|g| g.offset()))
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// All distinct grid references across the five residuals.
    pub fn referenced_quantities(&self) -> Vec<GridRef> {
        let mut refs: Vec<GridRef> = self
            .residuals
            .iter()
            .flat_map(|r| r.grid_refs().iter().copied())
            .collect();
        refs.sort();
        refs.dedup();
        refs
    }

    pub fn is_solve_for(&self, r: &GridRef) -> bool {
        self.solve_for.contains(r)
    }
}
