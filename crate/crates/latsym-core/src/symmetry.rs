//! Vector fields over a finite ansatz, their prolonged action on scheme
//! residuals, and Lie brackets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::{
    eval, eval_with_gradient, eval_with_point_gradient, parse_expression, DslError, Environment,
    Expression, GridVar,
};
use crate::lattice::{LatticeError, Scheme, StencilConfiguration};

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("expression error: {0}")]
    Dsl(#[from] DslError),
    #[error("lattice error: {0}")]
    Lattice(#[from] LatticeError),
    #[error("ansatz basis functions are not independent on the probe set (sv ratio {ratio:.3e})")]
    BasisDependent { ratio: f64 },
    #[error("registered function `{name}` failed on the probe set: {source}")]
    RegisteredFunction {
        name: String,
        #[source]
        source: DslError,
    },
    #[error("coefficient vector length {got} does not match basis size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("bracket leaves the ansatz span (re-expansion residual {residual:.3e})")]
    SpanEscape { residual: f64 },
    #[error("expression is not representable in the basis (projection residual {residual:.3e})")]
    NotRepresentable { residual: f64 },
    #[error("configuration point ({di},{dj}) is missing coordinates needed for prolongation")]
    IncompletePoint { di: i32, dj: i32 },
}

/// One scalar basis function of `(x, t, u)`.
#[derive(Debug, Clone)]
pub enum BasisFunction {
    /// `x^a t^b u^c`
    Monomial { a: u32, b: u32, c: u32 },
    /// A named registered function given as a DSL expression with bound
    /// parameters, e.g. `(1+c)^(t/h)`.
    Registered {
        name: String,
        expr: Expression,
        params: BTreeMap<String, f64>,
    },
}

impl BasisFunction {
    pub fn uses_u(&self) -> bool {
        match self {
            BasisFunction::Monomial { c, .. } => *c > 0,
            BasisFunction::Registered { expr, .. } => expr.uses_var(GridVar::U),
        }
    }

    pub fn display(&self, second_coord: char) -> String {
        match self {
            BasisFunction::Monomial { a, b, c } => {
                if *a == 0 && *b == 0 && *c == 0 {
                    return "1".to_string();
                }
                let mut parts = Vec::new();
                for (e, ch) in [(*a, 'x'), (*b, second_coord), (*c, 'u')] {
                    match e {
                        0 => {}
                        1 => parts.push(ch.to_string()),
                        _ => parts.push(format!("{ch}^{e}")),
                    }
                }
                parts.join("*")
            }
            BasisFunction::Registered { name, .. } => name.clone(),
        }
    }

    fn eval(&self, x: f64, t: f64, u: f64) -> Result<f64, DslError> {
        match self {
            BasisFunction::Monomial { a, b, c } => {
                Ok(x.powi(*a as i32) * t.powi(*b as i32) * u.powi(*c as i32))
            }
            BasisFunction::Registered { expr, params, .. } => {
                let mut env = Environment::new();
                env.bind_point(x, t, u);
                env.bind_params(params);
                eval(expr, &env)
            }
        }
    }

    /// Value and gradient with respect to `(x, t, u)`.
    fn eval_grad(&self, x: f64, t: f64, u: f64) -> Result<(f64, [f64; 3]), DslError> {
        match self {
            BasisFunction::Monomial { a, b, c } => {
                let (a, b, c) = (*a as i32, *b as i32, *c as i32);
                let v = x.powi(a) * t.powi(b) * u.powi(c);
                let dx = if a == 0 { 0.0 } else { a as f64 * x.powi(a - 1) * t.powi(b) * u.powi(c) };
                let dt = if b == 0 { 0.0 } else { b as f64 * x.powi(a) * t.powi(b - 1) * u.powi(c) };
                let du = if c == 0 { 0.0 } else { c as f64 * x.powi(a) * t.powi(b) * u.powi(c - 1) };
                Ok((v, [dx, dt, du]))
            }
            BasisFunction::Registered { expr, params, .. } => {
                let mut env = Environment::new();
                env.bind_point(x, t, u);
                env.bind_params(params);
                eval_with_point_gradient(expr, &env)
            }
        }
    }
}

/// Ordered list of scalar basis functions: monomials `x^a t^b u^c` in graded
/// lexicographic order, then registered functions.
#[derive(Debug, Clone)]
pub struct AnsatzBasis {
    pub deg_x: u32,
    pub deg_t: u32,
    pub deg_u: u32,
    functions: Vec<BasisFunction>,
}

impl AnsatzBasis {
    pub fn new(deg_x: u32, deg_t: u32, deg_u: u32) -> Result<Self, SymmetryError> {
        let mut functions = Vec::new();
        let top = deg_x + deg_t + deg_u;
        for g in 0..=top {
            for a in (0..=deg_x.min(g)).rev() {
                let rest = g - a;
                for b in (0..=deg_t.min(rest)).rev() {
                    let c = rest - b;
                    if c <= deg_u {
                        functions.push(BasisFunction::Monomial { a, b, c });
                    }
                }
            }
        }
        let basis = AnsatzBasis {
            deg_x,
            deg_t,
            deg_u,
            functions,
        };
        basis.independence_check()?;
        Ok(basis)
    }

    /// Register a named function (a DSL expression in `x`, `t`, `u` with the
    /// given parameter bindings), appended after the monomials.
    pub fn with_registered(
        mut self,
        name: impl Into<String>,
        text: &str,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self, SymmetryError> {
        let name = name.into();
        let expr = parse_expression(text)?;
        for p in expr.param_names() {
            if !params.contains_key(p) {
                return Err(SymmetryError::RegisteredFunction {
                    name: name.clone(),
                    source: DslError::UnboundParam {
                        span: crate::dsl::Span::default(),
                        name: p.clone(),
                    },
                });
            }
        }
        self.functions.push(BasisFunction::Registered {
            name,
            expr,
            params: params.clone(),
        });
        self.independence_check()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn eval_all(&self, x: f64, t: f64, u: f64, out: &mut [f64]) -> Result<(), SymmetryError> {
        for (k, f) in self.functions.iter().enumerate() {
            out[k] = f.eval(x, t, u).map_err(|e| self.wrap_fn_err(f, e))?;
        }
        Ok(())
    }

    fn wrap_fn_err(&self, f: &BasisFunction, e: DslError) -> SymmetryError {
        match f {
            BasisFunction::Registered { name, .. } => SymmetryError::RegisteredFunction {
                name: name.clone(),
                source: e,
            },
            _ => SymmetryError::Dsl(e),
        }
    }

    /// Deterministic probe points used for independence checks, projections
    /// and numeric bracket re-expansion.
    fn probe_points(&self, count: usize) -> Vec<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x414e_5341);
        (0..count)
            .map(|_| {
                (
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-2.0..2.0),
                )
            })
            .collect()
    }

    fn probe_matrix(&self, count: usize) -> Result<DMatrix<f64>, SymmetryError> {
        let pts = self.probe_points(count);
        let mut mat = DMatrix::zeros(pts.len(), self.len());
        let mut row = vec![0.0; self.len()];
        for (i, (x, t, u)) in pts.iter().enumerate() {
            self.eval_all(*x, *t, *u, &mut row)?;
            for (j, v) in row.iter().enumerate() {
                mat[(i, j)] = *v;
            }
        }
        Ok(mat)
    }

    /// Linear independence on a 5x-oversampled probe set, measured after
    /// column equilibration.
    fn independence_check(&self) -> Result<(), SymmetryError> {
        if self.functions.is_empty() {
            return Ok(());
        }
        let mut mat = self.probe_matrix(5 * self.len())?;
        for j in 0..mat.ncols() {
            let norm = mat.column(j).norm();
            if norm > 0.0 {
                for i in 0..mat.nrows() {
                    mat[(i, j)] /= norm;
                }
            }
        }
        let sv = mat.singular_values();
        let max = sv.iter().cloned().fold(0.0f64, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min / max > 1e-8) {
            return Err(SymmetryError::BasisDependent { ratio: min / max });
        }
        Ok(())
    }

    /// Least-squares expansion of a point expression over this basis, with a
    /// probe-set residual check.
    pub fn project(
        &self,
        expr: &Expression,
        params: &BTreeMap<String, f64>,
    ) -> Result<Vec<f64>, SymmetryError> {
        let pts = self.probe_points(4 * self.len().max(8));
        let mut mat = DMatrix::zeros(pts.len(), self.len());
        let mut rhs = DVector::zeros(pts.len());
        let mut row = vec![0.0; self.len()];
        for (i, (x, t, u)) in pts.iter().enumerate() {
            self.eval_all(*x, *t, *u, &mut row)?;
            for (j, v) in row.iter().enumerate() {
                mat[(i, j)] = *v;
            }
            let mut env = Environment::new();
            env.bind_point(*x, *t, *u);
            env.bind_params(params);
            rhs[i] = eval(expr, &env)?;
        }
        let svd = mat.clone().svd(true, true);
        let coeffs = svd
            .solve(&rhs, 1e-12)
            .map_err(|_| SymmetryError::NotRepresentable { residual: f64::INFINITY })?;
        let resid = (&mat * &coeffs - &rhs).norm();
        let scale = rhs.norm().max(1.0);
        if resid / scale > 1e-9 {
            return Err(SymmetryError::NotRepresentable {
                residual: resid / scale,
            });
        }
        Ok(coeffs.iter().copied().collect())
    }
}

/// Anything that evaluates to `(xi, tau, phi)` at a point.
pub trait PointField {
    fn components(&self, x: f64, t: f64, u: f64) -> Result<(f64, f64, f64), SymmetryError>;
}

/// A vector field with coefficient vectors over an [`AnsatzBasis`].
#[derive(Debug, Clone)]
pub struct VectorField {
    pub basis: Arc<AnsatzBasis>,
    pub xi: Vec<f64>,
    pub tau: Vec<f64>,
    pub phi: Vec<f64>,
}

impl VectorField {
    pub fn zero(basis: Arc<AnsatzBasis>) -> Self {
        let n = basis.len();
        VectorField {
            basis,
            xi: vec![0.0; n],
            tau: vec![0.0; n],
            phi: vec![0.0; n],
        }
    }

    pub fn from_components(
        basis: Arc<AnsatzBasis>,
        xi: Vec<f64>,
        tau: Vec<f64>,
        phi: Vec<f64>,
    ) -> Result<Self, SymmetryError> {
        let n = basis.len();
        for v in [&xi, &tau, &phi] {
            if v.len() != n {
                return Err(SymmetryError::LengthMismatch { got: v.len(), want: n });
            }
        }
        Ok(VectorField { basis, xi, tau, phi })
    }

    /// Expand DSL component expressions over the basis.
    pub fn from_dsl(
        basis: Arc<AnsatzBasis>,
        field: &DslField,
    ) -> Result<Self, SymmetryError> {
        let xi = basis.project(&field.xi, &field.params)?;
        let tau = basis.project(&field.tau, &field.params)?;
        let phi = basis.project(&field.phi, &field.params)?;
        Ok(VectorField { basis, xi, tau, phi })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.xi.iter_mut().chain(out.tau.iter_mut()).chain(out.phi.iter_mut()) {
            *v *= s;
        }
        out
    }

    pub fn add_scaled(&mut self, other: &VectorField, s: f64) {
        for (a, b) in self.xi.iter_mut().zip(&other.xi) {
            *a += s * b;
        }
        for (a, b) in self.tau.iter_mut().zip(&other.tau) {
            *a += s * b;
        }
        for (a, b) in self.phi.iter_mut().zip(&other.phi) {
            *a += s * b;
        }
    }

    /// Flat coefficient vector `(xi | tau | phi)`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.xi.clone();
        v.extend_from_slice(&self.tau);
        v.extend_from_slice(&self.phi);
        v
    }

    pub fn from_flat(basis: Arc<AnsatzBasis>, flat: &[f64]) -> Result<Self, SymmetryError> {
        let n = basis.len();
        if flat.len() != 3 * n {
            return Err(SymmetryError::LengthMismatch {
                got: flat.len(),
                want: 3 * n,
            });
        }
        Ok(VectorField {
            basis,
            xi: flat[0..n].to_vec(),
            tau: flat[n..2 * n].to_vec(),
            phi: flat[2 * n..].to_vec(),
        })
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// True when every coefficient on a registered (non-monomial) basis
    /// function vanishes.
    pub fn is_polynomial(&self) -> bool {
        self.basis
            .functions()
            .iter()
            .enumerate()
            .all(|(k, f)| match f {
                BasisFunction::Monomial { .. } => true,
                BasisFunction::Registered { .. } => {
                    self.xi[k] == 0.0 && self.tau[k] == 0.0 && self.phi[k] == 0.0
                }
            })
    }

    /// Serialize as `xi = ...; tau = ...; phi = ...` (with `eta` and `y` for
    /// light-cone schemes).
    pub fn to_dsl(&self, second_coord: char) -> String {
        let tau_name = if second_coord == 'y' { "eta" } else { "tau" };
        let fmt = |coeffs: &[f64]| format_linear_combination(coeffs, &self.basis, second_coord);
        format!(
            "xi = {}; {} = {}; phi = {}",
            fmt(&self.xi),
            tau_name,
            fmt(&self.tau),
            fmt(&self.phi)
        )
    }
}

fn format_linear_combination(coeffs: &[f64], basis: &AnsatzBasis, second_coord: char) -> String {
    let mut out = String::new();
    for (k, c) in coeffs.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let name = basis.functions()[k].display(second_coord);
        let mag = c.abs();
        let lead_minus = *c < 0.0;
        if out.is_empty() {
            if lead_minus {
                out.push('-');
            }
        } else if lead_minus {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if name == "1" {
            let _ = write!(out, "{mag}");
        } else if mag == 1.0 {
            out.push_str(&name);
        } else {
            let _ = write!(out, "{mag}*{name}");
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl PointField for VectorField {
    fn components(&self, x: f64, t: f64, u: f64) -> Result<(f64, f64, f64), SymmetryError> {
        let mut vals = vec![0.0; self.basis.len()];
        self.basis.eval_all(x, t, u, &mut vals)?;
        let dot = |c: &[f64]| c.iter().zip(&vals).map(|(a, b)| a * b).sum();
        Ok((dot(&self.xi), dot(&self.tau), dot(&self.phi)))
    }
}

/// A field given directly as three DSL point expressions.
#[derive(Debug, Clone)]
pub struct DslField {
    pub xi: Expression,
    pub tau: Expression,
    pub phi: Expression,
    pub params: BTreeMap<String, f64>,
}

impl DslField {
    pub fn parse(
        xi: &str,
        tau: &str,
        phi: &str,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self, SymmetryError> {
        Ok(DslField {
            xi: parse_expression(xi)?,
            tau: parse_expression(tau)?,
            phi: parse_expression(phi)?,
            params: params.clone(),
        })
    }

    /// Parse a triple of the form `xi = x; tau = 2*t; phi = 0` (`eta` is
    /// accepted for the second component). Missing components default to 0.
    pub fn parse_triple(text: &str, params: &BTreeMap<String, f64>) -> Result<Self, SymmetryError> {
        let mut xi = "0".to_string();
        let mut tau = "0".to_string();
        let mut phi = "0".to_string();
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (name, value) = part.split_once('=').ok_or_else(|| {
                SymmetryError::Dsl(DslError::Syntax {
                    span: crate::dsl::Span::default(),
                    found: format!("`{part}`"),
                    expected: vec!["`name = expression`".into()],
                })
            })?;
            match name.trim() {
                "xi" => xi = value.trim().to_string(),
                "tau" | "eta" => tau = value.trim().to_string(),
                "phi" => phi = value.trim().to_string(),
                other => {
                    return Err(SymmetryError::Dsl(DslError::Syntax {
                        span: crate::dsl::Span::default(),
                        found: format!("`{other}`"),
                        expected: vec!["`xi`".into(), "`tau`/`eta`".into(), "`phi`".into()],
                    }))
                }
            }
        }
        Self::parse(&xi, &tau, &phi, params)
    }
}

impl PointField for DslField {
    fn components(&self, x: f64, t: f64, u: f64) -> Result<(f64, f64, f64), SymmetryError> {
        let mut env = Environment::new();
        env.bind_point(x, t, u);
        env.bind_params(&self.params);
        Ok((eval(&self.xi, &env)?, eval(&self.tau, &env)?, eval(&self.phi, &env)?))
    }
}

/// Prolonged action of a point field on the five scheme residuals at a
/// configuration: for each residual, the sum over stencil points of the field
/// components (evaluated at that point's own coordinates) times the residual
/// derivatives with respect to that point's quantities.
pub fn prolonged_action(
    field: &dyn PointField,
    scheme: &Scheme,
    config: &StencilConfiguration,
) -> Result<[f64; 5], SymmetryError> {
    // field components at every referenced point
    let mut comps: BTreeMap<(i32, i32), (f64, f64, f64)> = BTreeMap::new();
    for (di, dj) in scheme.referenced_points() {
        let p = config
            .point(di, dj)
            .ok_or(SymmetryError::IncompletePoint { di, dj })?;
        comps.insert((di, dj), field.components(p.x, p.t, p.u)?);
    }

    let env = config.environment(scheme);
    let mut out = [0.0; 5];
    for (a, residual) in scheme.residuals.iter().enumerate() {
        let (_, grad) = eval_with_gradient(residual, &env)?;
        let mut acc = 0.0;
        for (gref, d) in &grad {
            let (xi, tau, phi) = comps[&gref.offset()];
            let coeff = match gref.var {
                GridVar::X => xi,
                GridVar::T => tau,
                GridVar::U => phi,
            };
            acc += coeff * d;
        }
        out[a] = acc;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lie brackets
// ---------------------------------------------------------------------------

/// Exact polynomial in `(x, t, u)` used for symbolic brackets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<(u32, u32, u32), f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    fn add_term(&mut self, key: (u32, u32, u32), c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(key).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &Poly, s: f64) {
        for (k, c) in &other.terms {
            self.add_term(*k, s * c);
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for ((a1, b1, c1), v1) in &self.terms {
            for ((a2, b2, c2), v2) in &other.terms {
                out.add_term((a1 + a2, b1 + b2, c1 + c2), v1 * v2);
            }
        }
        out
    }

    pub fn diff(&self, var: GridVar) -> Poly {
        let mut out = Poly::zero();
        for ((a, b, c), v) in &self.terms {
            match var {
                GridVar::X if *a > 0 => out.add_term((a - 1, *b, *c), *a as f64 * v),
                GridVar::T if *b > 0 => out.add_term((*a, b - 1, *c), *b as f64 * v),
                GridVar::U if *c > 0 => out.add_term((*a, *b, c - 1), *c as f64 * v),
                _ => {}
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn from_coeffs(basis: &AnsatzBasis, coeffs: &[f64]) -> Poly {
        let mut p = Poly::zero();
        for (k, f) in basis.functions().iter().enumerate() {
            if let BasisFunction::Monomial { a, b, c } = f {
                p.add_term((*a, *b, *c), coeffs[k]);
            }
        }
        p
    }

    /// Express in a basis; monomials outside the basis with weight above the
    /// threshold mean the polynomial escapes the span.
    fn to_coeffs(&self, basis: &AnsatzBasis) -> Result<Vec<f64>, SymmetryError> {
        let mut out = vec![0.0; basis.len()];
        let mut index: BTreeMap<(u32, u32, u32), usize> = BTreeMap::new();
        for (k, f) in basis.functions().iter().enumerate() {
            if let BasisFunction::Monomial { a, b, c } = f {
                index.insert((*a, *b, *c), k);
            }
        }
        let scale = self.max_abs().max(1.0);
        for (key, v) in &self.terms {
            match index.get(key) {
                Some(k) => out[*k] = *v,
                None => {
                    if v.abs() > 1e-12 * scale {
                        return Err(SymmetryError::SpanEscape {
                            residual: v.abs() / scale,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `[a, b]`, expressed in `out_basis`.
///
/// Purely polynomial fields are bracketed symbolically (exact, residual 0).
/// Fields with registered components are re-expanded by least squares on a
/// probe set; a relative re-expansion residual above 1e-6 is a span escape.
/// Returns the bracket and the recorded re-expansion residual.
pub fn lie_bracket(
    a: &VectorField,
    b: &VectorField,
    out_basis: &Arc<AnsatzBasis>,
) -> Result<(VectorField, f64), SymmetryError> {
    if a.is_polynomial() && b.is_polynomial() {
        let pa = [
            Poly::from_coeffs(&a.basis, &a.xi),
            Poly::from_coeffs(&a.basis, &a.tau),
            Poly::from_coeffs(&a.basis, &a.phi),
        ];
        let pb = [
            Poly::from_coeffs(&b.basis, &b.xi),
            Poly::from_coeffs(&b.basis, &b.tau),
            Poly::from_coeffs(&b.basis, &b.phi),
        ];
        let bracket = poly_bracket(&pa, &pb);
        let xi = bracket[0].to_coeffs(out_basis)?;
        let tau = bracket[1].to_coeffs(out_basis)?;
        let phi = bracket[2].to_coeffs(out_basis)?;
        return Ok((
            VectorField {
                basis: out_basis.clone(),
                xi,
                tau,
                phi,
            },
            0.0,
        ));
    }

    // probe-set least squares
    let pts = out_basis.probe_points(4 * out_basis.len().max(8));
    let mut mat = DMatrix::zeros(pts.len(), out_basis.len());
    let mut rhs = [
        DVector::zeros(pts.len()),
        DVector::zeros(pts.len()),
        DVector::zeros(pts.len()),
    ];
    let mut row = vec![0.0; out_basis.len()];
    for (i, (x, t, u)) in pts.iter().enumerate() {
        out_basis.eval_all(*x, *t, *u, &mut row)?;
        for (j, v) in row.iter().enumerate() {
            mat[(i, j)] = *v;
        }
        let val = bracket_value(a, b, *x, *t, *u)?;
        rhs[0][i] = val.0;
        rhs[1][i] = val.1;
        rhs[2][i] = val.2;
    }
    let svd = mat.clone().svd(true, true);
    let mut comps = Vec::new();
    let mut worst = 0.0f64;
    for r in &rhs {
        let c = svd
            .solve(r, 1e-12)
            .map_err(|_| SymmetryError::SpanEscape { residual: f64::INFINITY })?;
        let resid = (&mat * &c - r).norm() / r.norm().max(1.0);
        worst = worst.max(resid);
        comps.push(c.iter().copied().collect::<Vec<f64>>());
    }
    if worst > 1e-6 {
        return Err(SymmetryError::SpanEscape { residual: worst });
    }
    let mut it = comps.into_iter();
    Ok((
        VectorField {
            basis: out_basis.clone(),
            xi: it.next().unwrap(),
            tau: it.next().unwrap(),
            phi: it.next().unwrap(),
        },
        worst,
    ))
}

/// Symbolic bracket on polynomial component triples.
pub fn poly_bracket(a: &[Poly; 3], b: &[Poly; 3]) -> [Poly; 3] {
    let apply = |f: &[Poly; 3], g: &Poly| -> Poly {
        // f acting as a derivation: f_x g_x + f_t g_t + f_u g_u
        let mut out = Poly::zero();
        out.add_scaled(&f[0].mul(&g.diff(GridVar::X)), 1.0);
        out.add_scaled(&f[1].mul(&g.diff(GridVar::T)), 1.0);
        out.add_scaled(&f[2].mul(&g.diff(GridVar::U)), 1.0);
        out
    };
    let mut out = [Poly::zero(), Poly::zero(), Poly::zero()];
    for k in 0..3 {
        let mut term = apply(a, &b[k]);
        let back = apply(b, &a[k]);
        term.add_scaled(&back, -1.0);
        out[k] = term;
    }
    out
}

/// Numeric `[a,b]` components at a point, via exact derivatives of the basis
/// functions.
fn bracket_value(
    a: &VectorField,
    b: &VectorField,
    x: f64,
    t: f64,
    u: f64,
) -> Result<(f64, f64, f64), SymmetryError> {
    let n = a.basis.len();
    let mut va = vec![(0.0, [0.0; 3]); n];
    for (k, f) in a.basis.functions().iter().enumerate() {
        va[k] = f.eval_grad(x, t, u).map_err(|e| a.basis.wrap_fn_err(f, e))?;
    }
    let m = b.basis.len();
    let mut vb = vec![(0.0, [0.0; 3]); m];
    for (k, f) in b.basis.functions().iter().enumerate() {
        vb[k] = f.eval_grad(x, t, u).map_err(|e| b.basis.wrap_fn_err(f, e))?;
    }

    let comp = |coeff: &[f64], vals: &[(f64, [f64; 3])]| -> (f64, [f64; 3]) {
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (c, (val, grad)) in coeff.iter().zip(vals) {
            v += c * val;
            for d in 0..3 {
                g[d] += c * grad[d];
            }
        }
        (v, g)
    };

    let fa = [comp(&a.xi, &va), comp(&a.tau, &va), comp(&a.phi, &va)];
    let fb = [comp(&b.xi, &vb), comp(&b.tau, &vb), comp(&b.phi, &vb)];

    let direct = |f: &[(f64, [f64; 3]); 3], g: &(f64, [f64; 3])| -> f64 {
        f[0].0 * g.1[0] + f[1].0 * g.1[1] + f[2].0 * g.1[2]
    };
    Ok((
        direct(&fa, &fb[0]) - direct(&fb, &fa[0]),
        direct(&fa, &fb[1]) - direct(&fb, &fa[1]),
        direct(&fa, &fb[2]) - direct(&fb, &fa[2]),
    ))
}
