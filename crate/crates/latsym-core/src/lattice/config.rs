use std::collections::BTreeMap;

use crate::dsl::{Environment, GridRef, GridVar};

use super::{LatticeError, Scheme};

/// Coordinates and value at one stencil point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub x: f64,
    pub t: f64,
    pub u: f64,
}

fn slot(var: GridVar) -> usize {
    match var {
        GridVar::X => 0,
        GridVar::T => 1,
        GridVar::U => 2,
    }
}

/// Concrete values at the stencil points of a scheme placement. Points may be
/// partially bound (e.g. a coordinate that no residual references and that
/// the caller did not fill); operations that need complete points, such as
/// the prolonged action, report the missing quantity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StencilConfiguration {
    points: BTreeMap<(i32, i32), [Option<f64>; 3]>,
}

impl StencilConfiguration {
    /// Iterate complete points only.
    pub fn complete_points(&self) -> impl Iterator<Item = ((i32, i32), PointState)> + '_ {
        self.points.iter().filter_map(|(k, v)| {
            Some((
                *k,
                PointState {
                    x: v[0]?,
                    t: v[1]?,
                    u: v[2]?,
                },
            ))
        })
    }

    pub fn offsets(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.points.keys().copied()
    }

    pub fn point(&self, di: i32, dj: i32) -> Option<PointState> {
        let v = self.points.get(&(di, dj))?;
        Some(PointState {
            x: v[0]?,
            t: v[1]?,
            u: v[2]?,
        })
    }

    pub fn get(&self, r: &GridRef) -> Option<f64> {
        self.points.get(&(r.di, r.dj)).and_then(|v| v[slot(r.var)])
    }

    pub fn set(&mut self, r: GridRef, v: f64) {
        self.points.entry(r.offset()).or_insert([None; 3])[slot(r.var)] = Some(v);
    }

    /// Environment binding every bound quantity, plus the scheme parameters.
    pub fn environment(&self, scheme: &Scheme) -> Environment {
        let mut env = Environment::new();
        for ((di, dj), vals) in &self.points {
            for var in [GridVar::X, GridVar::T, GridVar::U] {
                if let Some(v) = vals[slot(var)] {
                    env.bind_grid(GridRef::new(var, *di, *dj), v);
                }
            }
        }
        env.bind_params(&scheme.params);
        env
    }

    /// True when every quantity referenced by the scheme's residuals is bound.
    pub fn covers(&self, scheme: &Scheme) -> bool {
        scheme.referenced_quantities().iter().all(|r| self.get(r).is_some())
    }

    /// True when every referenced stencil point carries full `(x,t,u)` data,
    /// as the prolonged action requires.
    pub fn is_complete(&self, scheme: &Scheme) -> bool {
        scheme
            .referenced_points()
            .iter()
            .all(|(di, dj)| self.point(*di, *dj).is_some())
    }

    /// Largest absolute coordinate/value, used as the residual scale.
    pub fn magnitude(&self) -> f64 {
        self.points
            .values()
            .flat_map(|p| p.iter().flatten().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Alias kept for call sites that build configurations incrementally.
#[derive(Debug, Clone, Default)]
pub struct ConfigurationBuilder {
    values: BTreeMap<GridRef, f64>,
}

impl ConfigurationBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, r: GridRef, v: f64) -> &mut Self {
        self.values.insert(r, v);
        self
    }

    pub fn get(&self, r: &GridRef) -> Option<f64> {
        self.values.get(r).copied()
    }

    pub fn is_set(&self, r: &GridRef) -> bool {
        self.values.contains_key(r)
    }

    pub fn values(&self) -> impl Iterator<Item = (&GridRef, &f64)> {
        self.values.iter()
    }

    pub fn magnitude(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Environment with whatever is bound so far, plus parameters.
    pub fn environment(&self, scheme: &Scheme) -> Environment {
        let mut env = Environment::new();
        for (r, v) in &self.values {
            env.bind_grid(*r, *v);
        }
        env.bind_params(&scheme.params);
        env
    }

    pub fn build(&self) -> StencilConfiguration {
        let mut cfg = StencilConfiguration::default();
        for (r, v) in &self.values {
            cfg.set(*r, *v);
        }
        cfg
    }

    /// Build, requiring completeness of every referenced point of `scheme`.
    pub fn build_complete(&self, scheme: &Scheme) -> Result<StencilConfiguration, LatticeError> {
        let cfg = self.build();
        for (di, dj) in scheme.referenced_points() {
            for var in [GridVar::X, GridVar::T, GridVar::U] {
                let r = GridRef::new(var, di, dj);
                if cfg.get(&r).is_none() {
                    return Err(LatticeError::MissingQuantity { gref: r });
                }
            }
        }
        Ok(cfg)
    }
}
