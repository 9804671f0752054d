//! One-parameter group flows of vector fields: integrate the field from the
//! identity and verify that symmetries map discrete solutions into discrete
//! solutions.

use thiserror::Error;

use crate::lattice::{GridSolution, LatticeError, Scheme};
use crate::symmetry::{PointField, SymmetryError};

pub const BLOWUP_BOUND: f64 = 1e12;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("substep count must be at least 4 (got {0})")]
    TooFewSubsteps(usize),
    #[error("trajectory blow-up: |{coord}| exceeded 1e12 at lambda = {lambda:.6}")]
    BlowUp { coord: char, lambda: f64 },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Group parameter.
    pub lambda: f64,
    /// Fixed substep count for the fourth-order integrator.
    pub substeps: usize,
    /// Residual tolerance used by verification reports.
    pub tolerance: f64,
}

impl FlowOptions {
    pub fn new(lambda: f64) -> Self {
        // a power of two keeps constant-field flows exact: lambda/substeps
        // stays representable and translation increments sum without rounding
        FlowOptions {
            lambda,
            substeps: 1024,
            tolerance: 1e-7,
        }
    }

    pub fn with_substeps(mut self, n: usize) -> Result<Self, FlowError> {
        if n < 4 {
            return Err(FlowError::TooFewSubsteps(n));
        }
        self.substeps = n;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowPoint {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    /// Richardson half-step error estimate (max over coordinates).
    pub error_estimate: f64,
}

fn check_bounds(p: [f64; 3], lambda: f64) -> Result<(), FlowError> {
    for (v, c) in p.iter().zip(['x', 't', 'u']) {
        if !v.is_finite() || v.abs() > BLOWUP_BOUND {
            return Err(FlowError::BlowUp { coord: c, lambda });
        }
    }
    Ok(())
}

fn rk4_run(
    field: &dyn PointField,
    start: [f64; 3],
    lambda: f64,
    substeps: usize,
) -> Result<[f64; 3], FlowError> {
    let h = lambda / substeps as f64;
    let mut p = start;
    let f = |q: [f64; 3]| -> Result<[f64; 3], FlowError> {
        let (xi, tau, phi) = field.components(q[0], q[1], q[2])?;
        Ok([xi, tau, phi])
    };
    for step in 0..substeps {
        let k1 = f(p)?;
        let k2 = f([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1], p[2] + 0.5 * h * k1[2]])?;
        let k3 = f([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1], p[2] + 0.5 * h * k2[2]])?;
        let k4 = f([p[0] + h * k3[0], p[1] + h * k3[1], p[2] + h * k3[2]])?;
        for i in 0..3 {
            p[i] += h * ((k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
        }
        check_bounds(p, h * (step + 1) as f64)?;
    }
    Ok(p)
}

/// Integrate `dx/dl = xi, dt/dl = tau, du/dl = phi` from `(x, t, u)` over the
/// group parameter, with a half-resolution Richardson error estimate.
pub fn integrate_flow(
    field: &dyn PointField,
    point: (f64, f64, f64),
    opts: &FlowOptions,
) -> Result<FlowPoint, FlowError> {
    if opts.substeps < 4 {
        return Err(FlowError::TooFewSubsteps(opts.substeps));
    }
    let start = [point.0, point.1, point.2];
    if opts.lambda == 0.0 {
        return Ok(FlowPoint {
            x: point.0,
            t: point.1,
            u: point.2,
            error_estimate: 0.0,
        });
    }
    let fine = rk4_run(field, start, opts.lambda, opts.substeps)?;
    let coarse = rk4_run(field, start, opts.lambda, (opts.substeps / 2).max(2))?;
    let err = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / 15.0;
    Ok(FlowPoint {
        x: fine[0],
        t: fine[1],
        u: fine[2],
        error_estimate: err,
    })
}

/// Transform every grid point by the flow (the same field everywhere) and
/// re-check the scheme residuals on the transformed grid.
pub fn transform_and_verify(
    field: &dyn PointField,
    grid: &GridSolution,
    scheme: &Scheme,
    opts: &FlowOptions,
) -> Result<(GridSolution, f64), FlowError> {
    let w = grid.window;
    let mut worst_est = 0.0f64;
    let mut failure: Option<FlowError> = None;
    let mut transformed = GridSolution::from_fn(w, |m, n| {
        if failure.is_some() {
            return (f64::NAN, f64::NAN, f64::NAN);
        }
        let (x, t, u) = grid.get(m, n).unwrap();
        match integrate_flow(field, (x, t, u), opts) {
            Ok(p) => {
                worst_est = worst_est.max(p.error_estimate);
                (p.x, p.t, p.u)
            }
            Err(e) => {
                failure = Some(e);
                (f64::NAN, f64::NAN, f64::NAN)
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let max_residual = transformed.max_residual(scheme)?;
    transformed.onshell_residual = max_residual;
    Ok((transformed, max_residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::DslField;
    use std::collections::BTreeMap;

    fn field(xi: &str, tau: &str, phi: &str) -> DslField {
        DslField::parse(xi, tau, phi, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn translation_flow_is_exact() {
        let f = field("1", "0", "0");
        let p = integrate_flow(&f, (0.0, 2.0, 3.0), &FlowOptions::new(1.0)).unwrap();
        assert_eq!(p.x, 1.0);
        assert_eq!(p.t, 2.0);
        assert_eq!(p.u, 3.0);
    }

    #[test]
    fn dilation_flow_matches_exponential() {
        let f = field("x", "2*t", "0");
        let p = integrate_flow(&f, (1.0, 1.0, 1.0), &FlowOptions::new(0.3)).unwrap();
        assert!((p.x - 0.3f64.exp()).abs() < 1e-10);
        assert!((p.t - 0.6f64.exp()).abs() < 1e-10);
        assert_eq!(p.u, 1.0);
        assert!(p.error_estimate < 1e-12);
    }

    #[test]
    fn galilei_boost_moves_x_by_lambda_t() {
        let f = field("t", "0", "0");
        let p = integrate_flow(&f, (1.0, 3.0, 5.0), &FlowOptions::new(2.0)).unwrap();
        assert!((p.x - 7.0).abs() < 1e-12);
        assert_eq!(p.t, 3.0);
        assert_eq!(p.u, 5.0);
    }

    #[test]
    fn identity_flow_returns_input_bits() {
        let f = field("x^2", "sin(t)", "u");
        let p = integrate_flow(&f, (1.37, -0.25, 0.83), &FlowOptions::new(0.0)).unwrap();
        assert_eq!(p.x.to_bits(), 1.37f64.to_bits());
        assert_eq!(p.t.to_bits(), (-0.25f64).to_bits());
        assert_eq!(p.u.to_bits(), 0.83f64.to_bits());
    }

    #[test]
    fn blow_up_detected() {
        // du/dl = u^2 blows up at lambda = 1/u0
        let f = field("0", "0", "u^2");
        let err = integrate_flow(&f, (0.0, 0.0, 5.0), &FlowOptions::new(1.0));
        assert!(matches!(err, Err(FlowError::BlowUp { .. })));
    }

    #[test]
    fn group_and_inverse_property() {
        let f = field("x", "2*t", "0");
        let opts = FlowOptions::new(0.4);
        let a = integrate_flow(&f, (1.0, 1.0, 1.0), &opts).unwrap();
        let b = integrate_flow(&f, (a.x, a.t, a.u), &FlowOptions::new(0.6)).unwrap();
        let c = integrate_flow(&f, (1.0, 1.0, 1.0), &FlowOptions::new(1.0)).unwrap();
        assert!((b.x - c.x).abs() < 1e-9);
        assert!((b.t - c.t).abs() < 1e-9);
        let back = integrate_flow(&f, (c.x, c.t, c.u), &FlowOptions::new(-1.0)).unwrap();
        assert!((back.x - 1.0).abs() < 1e-9);
        assert!((back.t - 1.0).abs() < 1e-9);
    }
}
