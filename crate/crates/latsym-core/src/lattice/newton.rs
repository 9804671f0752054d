use nalgebra::{DMatrix, DVector};

use crate::dsl::{eval, eval_with_gradient, Environment};

use super::{ConfigurationBuilder, LatticeError, Scheme, StencilConfiguration};

/// Relative on-shell tolerance for Newton solves.
pub const ONSHELL_TOL: f64 = 1e-12;
/// Reject solutions whose placement Jacobian falls below this.
pub const JACOBIAN_MIN: f64 = 1e-8;
const MAX_ITERS: usize = 50;
const MAX_HALVINGS: usize = 20;

/// Evaluate the five residuals at a configuration.
pub fn residuals(
    scheme: &Scheme,
    config: &StencilConfiguration,
) -> Result<[f64; 5], LatticeError> {
    let env = config.environment(scheme);
    residuals_env(scheme, &env)
}

fn residuals_env(scheme: &Scheme, env: &Environment) -> Result<[f64; 5], LatticeError> {
    let mut out = [0.0; 5];
    for (i, r) in scheme.residuals.iter().enumerate() {
        out[i] = eval(r, env)?;
    }
    Ok(out)
}

/// Determinant of the 5x5 matrix of residual derivatives with respect to the
/// scheme's solve-for quantities.
pub fn jacobian_nondegeneracy(
    scheme: &Scheme,
    config: &StencilConfiguration,
) -> Result<f64, LatticeError> {
    let env = config.environment(scheme);
    jacobian_env(scheme, &env).map(|j| j.determinant())
}

fn jacobian_env(scheme: &Scheme, env: &Environment) -> Result<DMatrix<f64>, LatticeError> {
    let mut jac = DMatrix::zeros(5, 5);
    for (a, r) in scheme.residuals.iter().enumerate() {
        let (_, grad) = eval_with_gradient(r, env)?;
        for (b, unknown) in scheme.solve_for.iter().enumerate() {
            jac[(a, b)] = grad.get(unknown).copied().unwrap_or(0.0);
        }
    }
    Ok(jac)
}

/// Signed area of the lattice cell spanned by the +m and +n displacements at
/// the reference point. Vanishes on degenerate (coincident-point) lattices.
pub fn cell_jacobian(config: &StencilConfiguration) -> Option<f64> {
    let p00 = config.point(0, 0)?;
    let p10 = config.point(1, 0)?;
    let p01 = config.point(0, 1)?;
    Some((p10.x - p00.x) * (p01.t - p00.t) - (p01.x - p00.x) * (p10.t - p00.t))
}

/// Solve the five scheme equations for the solve-for quantities by damped
/// Newton iteration from `guess`, holding everything in `free` fixed.
///
/// `free` must bind every referenced quantity except the solve-for five. The
/// returned configuration has `|E_a| <= 1e-12 * (1 + scale)` where `scale` is
/// the magnitude of the bound data, and a placement Jacobian of at least
/// `1e-8` in absolute value (checked after convergence).
pub fn solve_on_shell(
    scheme: &Scheme,
    free: &ConfigurationBuilder,
    guess: [f64; 5],
) -> Result<StencilConfiguration, LatticeError> {
    for r in scheme.referenced_quantities() {
        if !scheme.is_solve_for(&r) && !free.is_set(&r) {
            return Err(LatticeError::MissingQuantity { gref: r });
        }
    }

    let scale = free
        .magnitude()
        .max(guess.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let tol = ONSHELL_TOL * (1.0 + scale);

    let mut work = free.clone();
    let mut vals = guess;
    let set_vals = |w: &mut ConfigurationBuilder, v: &[f64; 5]| {
        for (r, x) in scheme.solve_for.iter().zip(v.iter()) {
            w.set(*r, *x);
        }
    };
    set_vals(&mut work, &vals);

    let norm = |r: &[f64; 5]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut res = residuals_env(scheme, &work.environment(scheme))?;
    let mut iters = 0;
    while norm(&res) > tol {
        if iters >= MAX_ITERS {
            return Err(LatticeError::NewtonNoConvergence {
                iters,
                residual: norm(&res),
            });
        }
        iters += 1;

        let jac = jacobian_env(scheme, &work.environment(scheme))?;
        let rhs = DVector::from_iterator(5, res.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(LatticeError::SingularJacobian { det: 0.0 })?;

        // Halve the step until the residual norm decreases.
        let mut accepted = false;
        let mut damping = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = vals;
            for k in 0..5 {
                trial[k] += damping * step[k];
            }
            let mut tw = work.clone();
            set_vals(&mut tw, &trial);
            match residuals_env(scheme, &tw.environment(scheme)) {
                Ok(tr) if norm(&tr) < norm(&res) => {
                    vals = trial;
                    work = tw;
                    res = tr;
                    accepted = true;
                    break;
                }
                _ => damping *= 0.5,
            }
        }
        if !accepted {
            return Err(LatticeError::NewtonStall {
                residual: norm(&res),
            });
        }
    }

    let det = jacobian_env(scheme, &work.environment(scheme))?.determinant();
    if det.abs() < JACOBIAN_MIN {
        return Err(LatticeError::SingularJacobian { det });
    }

    Ok(work.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_grid_ref;

    #[test]
    fn cell_jacobian_vanishes_on_coincident_points() {
        let mut b = ConfigurationBuilder::new();
        for (s, v) in [
            ("x[0,0]", 1.0),
            ("t[0,0]", 0.0),
            ("u[0,0]", 0.0),
            ("x[1,0]", 1.0), // coincident with x[0,0]
            ("t[1,0]", 0.0),
            ("u[1,0]", 0.0),
            ("x[0,1]", 1.0),
            ("t[0,1]", 2.0),
            ("u[0,1]", 0.0),
        ] {
            b.set(parse_grid_ref(s).unwrap(), v);
        }
        let cfg = b.build();
        assert_eq!(cell_jacobian(&cfg), Some(0.0));
    }
}
