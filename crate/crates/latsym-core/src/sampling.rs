//! Random on-shell configuration sampling.
//!
//! A sampling recipe lists the free quantities with their ranges, the
//! auxiliary coordinate fills that complete a configuration after the five
//! unknowns are solved (shifted lattice relations), and any extra
//! admissibility predicates. Draws that land on degenerate lattices or fail
//! to solve are rejected and redrawn by the caller.

use std::collections::BTreeMap;

use rand::Rng;

use crate::dsl::{eval, Expression, GridRef, GridVar};
use crate::lattice::{cell_jacobian, solve_on_shell, ConfigurationBuilder, Scheme, StencilConfiguration};

pub struct FreeQuantity {
    pub target: GridRef,
    pub lo: f64,
    pub hi: f64,
}

type Predicate = Box<dyn Fn(&StencilConfiguration) -> bool + Send + Sync>;
type GuessFn = Box<dyn Fn(&ConfigurationBuilder, &Scheme) -> [f64; 5] + Send + Sync>;

pub struct SamplingRecipe {
    pub free: Vec<FreeQuantity>,
    /// Auxiliary coordinate closure: evaluated in declaration order after the
    /// solve, each expression over already-bound grid quantities and params.
    pub fills: Vec<(GridRef, Expression)>,
    pub guess: Option<GuessFn>,
    pub admissible: Vec<Predicate>,
}

impl SamplingRecipe {
    pub fn new(free: Vec<FreeQuantity>, fills: Vec<(GridRef, Expression)>) -> Self {
        SamplingRecipe {
            free,
            fills,
            guess: None,
            admissible: Vec::new(),
        }
    }

    pub fn with_guess(mut self, g: GuessFn) -> Self {
        self.guess = Some(g);
        self
    }

    pub fn with_predicate(mut self, p: Predicate) -> Self {
        self.admissible.push(p);
        self
    }

    /// Attempt a single draw. `Ok(None)` means the draw was rejected
    /// (degenerate lattice, failed solve, or admissibility predicate).
    pub fn draw_once(
        &self,
        scheme: &Scheme,
        rng: &mut impl Rng,
    ) -> Option<StencilConfiguration> {
        let mut builder = ConfigurationBuilder::new();
        for f in &self.free {
            let v = rng.random_range(f.lo..f.hi);
            builder.set(f.target, v);
        }
        let guess = match &self.guess {
            Some(g) => g(&builder, scheme),
            None => default_guess(scheme, &builder),
        };
        let solved = solve_on_shell(scheme, &builder, guess).ok()?;

        // auxiliary coordinate fills from shifted lattice relations
        let mut cfg = solved;
        for (target, expr) in &self.fills {
            let env = cfg.environment(scheme);
            let v = eval(expr, &env).ok()?;
            cfg.set(*target, v);
        }

        if !admissible_default(&cfg) {
            return None;
        }
        for p in &self.admissible {
            if !p(&cfg) {
                return None;
            }
        }
        if !cfg.is_complete(scheme) {
            return None;
        }
        Some(cfg)
    }

    /// Draw `count` accepted configurations, giving up once the rejection
    /// rate passes 50%. Returns the configurations and the attempt count.
    pub fn draw_many(
        &self,
        scheme: &Scheme,
        rng: &mut impl Rng,
        count: usize,
    ) -> Result<(Vec<StencilConfiguration>, usize), SamplingFailure> {
        let budget = 2 * count + 20;
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            if attempts >= budget {
                return Err(SamplingFailure {
                    accepted: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            if let Some(cfg) = self.draw_once(scheme, rng) {
                out.push(cfg);
            }
        }
        Ok((out, attempts))
    }
}

#[derive(Debug, thiserror::Error)]
#[error("sampling failure: only {accepted} admissible configurations in {attempts} attempts (ranges too tight or scheme degenerate)")]
pub struct SamplingFailure {
    pub accepted: usize,
    pub attempts: usize,
}

/// Built-in degeneracy rejection: first-coordinate spacing at least 0.1 and
/// lattice cell area at least 1e-6, wherever those points exist.
fn admissible_default(cfg: &StencilConfiguration) -> bool {
    let x00 = cfg.get(&GridRef::new(GridVar::X, 0, 0));
    let x10 = cfg.get(&GridRef::new(GridVar::X, 1, 0));
    if let (Some(a), Some(b)) = (x00, x10) {
        if (b - a).abs() < 0.1 {
            return false;
        }
    }
    if let Some(j) = cell_jacobian(cfg) {
        if j.abs() < 1e-6 {
            return false;
        }
    }
    true
}

/// Guess solve-for values by stepping from the reference point with the
/// scheme's typical step sizes.
pub fn default_guess(scheme: &Scheme, builder: &ConfigurationBuilder) -> [f64; 5] {
    let g = scheme.guess_steps;
    let mut out = [0.0; 5];
    for (k, q) in scheme.solve_for.iter().enumerate() {
        let base = builder
            .get(&GridRef::new(q.var, 0, 0))
            .unwrap_or(0.0);
        let (sm, sn) = match q.var {
            GridVar::X => (g.x_m, g.x_n),
            GridVar::T => (g.t_m, g.t_n),
            GridVar::U => (0.0, 0.0),
        };
        out[k] = base + q.di as f64 * sm + q.dj as f64 * sn;
    }
    out
}

/// Make a plain uniform free-quantity list over default ranges: coordinates
/// in `[-5, 5]`, values in `[-2, 2]`.
pub fn default_ranges(targets: &[GridRef], overrides: &BTreeMap<GridRef, (f64, f64)>) -> Vec<FreeQuantity> {
    targets
        .iter()
        .map(|t| {
            let (lo, hi) = overrides.get(t).copied().unwrap_or(match t.var {
                GridVar::U => (-2.0, 2.0),
                _ => (-5.0, 5.0),
            });
            FreeQuantity {
                target: *t,
                lo,
                hi,
            }
        })
        .collect()
}
