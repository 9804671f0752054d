//! Numerical symmetry finding: sample on-shell configurations, impose the
//! invariance conditions as linear constraints on ansatz coefficients, and
//! extract the nullspace by singular value decomposition.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::{eval_with_gradient, DslError, GridVar};
use crate::lattice::{LatticeError, Scheme};
use crate::sampling::{SamplingFailure, SamplingRecipe};
use crate::symmetry::{
    lie_bracket, prolonged_action, AnsatzBasis, DslField, PointField, SymmetryError, VectorField,
};

#[derive(Debug, Error)]
pub enum FinderError {
    #[error(transparent)]
    Sampling(#[from] SamplingFailure),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("expression error: {0}")]
    Dsl(#[from] DslError),
    #[error("finder needs at least one active coefficient")]
    EmptyAnsatz,
}

#[derive(Debug, Clone)]
pub struct FinderOptions {
    /// Number of on-shell sample configurations; defaults to
    /// `max(3 * active coefficients, 100)`, and never below
    /// `active coefficients + 5`.
    pub samples: Option<usize>,
    pub seed: u64,
    /// Relative singular-value cutoff: `sigma < cutoff * sigma_max` counts as
    /// null.
    pub sv_cutoff: f64,
    /// Allow `xi` and `tau` to depend on `u` (off by default; the finder can
    /// then test u-independence rather than assume it).
    pub xi_tau_u_dependent: bool,
}

impl Default for FinderOptions {
    fn default() -> Self {
        FinderOptions {
            samples: None,
            seed: 0,
            sv_cutoff: 1e-8,
            xi_tau_u_dependent: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Sector {
    Finite,
    Superposition,
}

/// The found symmetry span with diagnostics.
pub struct SymmetryBasis {
    pub basis: Arc<AnsatzBasis>,
    pub fields: Vec<VectorField>,
    pub names: Vec<String>,
    pub sectors: Vec<Sector>,
    /// Singular values of the equilibrated constraint matrix, descending.
    pub singular_values: Vec<f64>,
    /// `||M c|| / (||M|| ||c||)` for each returned field.
    pub constraint_residuals: Vec<f64>,
    pub samples: usize,
    pub attempts: usize,
    pub active_columns: usize,
}

impl SymmetryBasis {
    pub fn dimension(&self) -> usize {
        self.fields.len()
    }

    pub fn finite_dimension(&self) -> usize {
        self.sectors.iter().filter(|s| **s == Sector::Finite).count()
    }

    pub fn superposition_dimension(&self) -> usize {
        self.sectors
            .iter()
            .filter(|s| **s == Sector::Superposition)
            .count()
    }

    /// Orthonormal basis of the span in flat coefficient space (columns).
    pub fn span_matrix(&self) -> DMatrix<f64> {
        let dim = 3 * self.basis.len();
        let mut m = DMatrix::zeros(dim, self.fields.len());
        for (j, f) in self.fields.iter().enumerate() {
            for (i, v) in f.flat().iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        orthonormal_columns(&m, 1e-8)
    }

    /// Relative residual of the projection of a coefficient vector onto the
    /// found span.
    pub fn projection_residual(&self, field: &VectorField) -> f64 {
        let q = self.span_matrix();
        let v = DVector::from_vec(field.flat());
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let proj = &q * (q.transpose() * &v);
        (v - proj).norm() / norm
    }
}

/// Position of a coefficient column: component 0/1/2 = xi/tau/phi, basis
/// function index.
#[derive(Debug, Clone, Copy)]
struct Column {
    comp: usize,
    k: usize,
}

fn active_columns(basis: &AnsatzBasis, allow_u: bool) -> Vec<Column> {
    let mut cols = Vec::new();
    for comp in 0..3usize {
        for (k, f) in basis.functions().iter().enumerate() {
            if comp < 2 && !allow_u && f.uses_u() {
                continue;
            }
            cols.push(Column { comp, k });
        }
    }
    cols
}

/// Find the symmetry span of a scheme over the ansatz.
///
/// `hints` are known closed-form fields; when one lies in the found span its
/// clean representative is emitted first (named), and the remaining nullspace
/// directions are sparsified by Gauss elimination over the coefficient
/// columns.
pub fn find_symmetries(
    scheme: &Scheme,
    sampling: &SamplingRecipe,
    basis: &Arc<AnsatzBasis>,
    opts: &FinderOptions,
    hints: &[(String, DslField)],
) -> Result<SymmetryBasis, FinderError> {
    let cols = active_columns(basis, opts.xi_tau_u_dependent);
    if cols.is_empty() {
        return Err(FinderError::EmptyAnsatz);
    }
    let n_coeff = cols.len();
    let samples = opts
        .samples
        .unwrap_or_else(|| (3 * n_coeff).max(100))
        .max(n_coeff + 5);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (configs, attempts) = sampling.draw_many(scheme, &mut rng, samples)?;

    // column index lookup: [comp][k] -> column
    let nb = basis.len();
    let mut col_index = vec![vec![usize::MAX; nb]; 3];
    for (j, c) in cols.iter().enumerate() {
        col_index[c.comp][c.k] = j;
    }

    let mut mat = DMatrix::zeros(5 * samples, n_coeff);
    let mut bvals = vec![0.0; nb];
    for (s, cfg) in configs.iter().enumerate() {
        // basis values at each stencil point
        let mut point_vals: BTreeMap<(i32, i32), Vec<f64>> = BTreeMap::new();
        for (offset, p) in cfg.complete_points() {
            basis.eval_all(p.x, p.t, p.u, &mut bvals)?;
            point_vals.insert(offset, bvals.clone());
        }
        let env = cfg.environment(scheme);
        for (a, residual) in scheme.residuals.iter().enumerate() {
            let (_, grad) = eval_with_gradient(residual, &env)?;
            let row = 5 * s + a;
            for (gref, g) in &grad {
                let comp = match gref.var {
                    GridVar::X => 0,
                    GridVar::T => 1,
                    GridVar::U => 2,
                };
                let vals = &point_vals[&gref.offset()];
                for k in 0..nb {
                    let j = col_index[comp][k];
                    if j != usize::MAX {
                        mat[(row, j)] += vals[k] * g;
                    }
                }
            }
        }
    }

    // column equilibration
    let mut col_norms = vec![0.0f64; n_coeff];
    for j in 0..n_coeff {
        let norm = mat.column(j).norm();
        col_norms[j] = if norm > 0.0 { norm } else { 1.0 };
        for i in 0..mat.nrows() {
            mat[(i, j)] /= col_norms[j];
        }
    }

    let svd = mat.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|a, b| sv[*b].partial_cmp(&sv[*a]).unwrap());
    let singular_values: Vec<f64> = order.iter().map(|i| sv[*i]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);

    // nullspace vectors in flat coefficient space
    let mut null_flat: Vec<DVector<f64>> = Vec::new();
    let flat_dim = 3 * nb;
    for &i in &order {
        if sv[i] <= opts.sv_cutoff * sigma_max {
            let mut flat = DVector::zeros(flat_dim);
            for (j, c) in cols.iter().enumerate() {
                flat[c.comp * nb + c.k] = v_t[(i, j)] / col_norms[j];
            }
            let norm = flat.norm();
            if norm > 0.0 {
                flat /= norm;
            }
            null_flat.push(flat);
        }
    }

    let dim = null_flat.len();
    let mut span = DMatrix::zeros(flat_dim, dim);
    for (j, v) in null_flat.iter().enumerate() {
        span.set_column(j, v);
    }
    let span = orthonormal_columns(&span, 1e-6);

    // sector split: superposition = xi = tau = 0 and phi independent of u
    let mut forbidden: Vec<usize> = Vec::new();
    for c in &cols {
        let flat_idx = c.comp * nb + c.k;
        if c.comp < 2 || basis.functions()[c.k].uses_u() {
            forbidden.push(flat_idx);
        }
    }
    let (sup_q, fin_q) = split_span(&span, &forbidden, 1e-10);

    // represent each sector: named hints first, then sparsified complement
    let mut fields = Vec::new();
    let mut names = Vec::new();
    let mut sectors = Vec::new();
    for (sector, q) in [(Sector::Finite, &fin_q), (Sector::Superposition, &sup_q)] {
        let (sector_fields, sector_names) =
            represent_sector(basis, q, hints, scheme, 1e-6)?;
        for (f, n) in sector_fields.into_iter().zip(sector_names) {
            fields.push(f);
            names.push(n);
            sectors.push(sector);
        }
    }

    // constraint residual per returned field
    let mut constraint_residuals = Vec::new();
    for f in &fields {
        let mut c = DVector::zeros(n_coeff);
        let flat = f.flat();
        for (j, col) in cols.iter().enumerate() {
            c[j] = flat[col.comp * nb + col.k] * col_norms[j];
        }
        let r = (&mat * &c).norm();
        let denom = sigma_max * c.norm();
        constraint_residuals.push(if denom > 0.0 { r / denom } else { 0.0 });
    }

    Ok(SymmetryBasis {
        basis: basis.clone(),
        fields,
        names,
        sectors,
        singular_values,
        constraint_residuals,
        samples,
        attempts,
        active_columns: n_coeff,
    })
}

/// Orthonormal basis of the column space, keeping directions with singular
/// value above the absolute threshold `min_sigma`. Inputs here are always
/// unit-norm (or near-orthonormal) columns, so surviving directions have
/// singular values of order one and discarded ones are numerically zero.
fn orthonormal_columns(m: &DMatrix<f64>, min_sigma: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).filter(|i| sv[*i] > min_sigma).collect();
    order.sort_by(|a, b| sv[*b].partial_cmp(&sv[*a]).unwrap());
    let mut out = DMatrix::zeros(m.nrows(), order.len());
    for (j, i) in order.iter().enumerate() {
        out.set_column(j, &u.column(*i));
    }
    out
}

/// Split an orthonormal span into (superposition, finite) parts: the maximal
/// subspace vanishing on the forbidden coordinates, and its complement.
fn split_span(
    span: &DMatrix<f64>,
    forbidden: &[usize],
    tol: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = span.ncols();
    if d == 0 {
        return (span.clone(), span.clone());
    }
    let mut restricted = DMatrix::zeros(forbidden.len(), d);
    for (r, idx) in forbidden.iter().enumerate() {
        for j in 0..d {
            restricted[(r, j)] = span[(*idx, j)];
        }
    }
    let svd = restricted.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let mut sup_dirs = Vec::new();
    for (i, s) in sv.iter().enumerate() {
        if *s <= tol * smax.max(1.0) {
            sup_dirs.push(v_t.row(i).transpose());
        }
    }
    let mut sup = DMatrix::zeros(d, sup_dirs.len());
    for (j, v) in sup_dirs.iter().enumerate() {
        sup.set_column(j, v);
    }
    // a thin svd of a wide (f x d, f < d) matrix reports only f values;
    // complete the kernel via the projector in that case.
    if restricted.nrows() < d {
        // complete via projector kernel
        let proj = &restricted.transpose() * &restricted;
        let eig = proj.clone().symmetric_eigen();
        let emax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let mut dirs = Vec::new();
        for (i, ev) in eig.eigenvalues.iter().enumerate() {
            if *ev <= (tol * tol) * emax.max(1.0) {
                dirs.push(i);
            }
        }
        sup = DMatrix::zeros(d, dirs.len());
        for (j, i) in dirs.iter().enumerate() {
            sup.set_column(j, &eig.eigenvectors.column(*i));
        }
    }

    let sup_span = span * &sup; // flat-space vectors, orthonormal
    let sup_q = orthonormal_columns(&sup_span, 0.5);

    // finite = complement of sup within span
    let mut resid = span.clone();
    if sup_q.ncols() > 0 {
        resid -= &sup_q * (sup_q.transpose() * span);
    }
    let fin_q = orthonormal_columns(&resid, 0.5);
    (sup_q, fin_q)
}

/// Build readable representatives of a sector span: matching hints first,
/// then reduced-row-echelon sparsification of the rest.
fn represent_sector(
    basis: &Arc<AnsatzBasis>,
    q: &DMatrix<f64>,
    hints: &[(String, DslField)],
    _scheme: &Scheme,
    hint_tol: f64,
) -> Result<(Vec<VectorField>, Vec<String>), FinderError> {
    let d = q.ncols();
    let mut fields = Vec::new();
    let mut names = Vec::new();
    if d == 0 {
        return Ok((fields, names));
    }
    let flat_dim = q.nrows();
    let mut accepted = DMatrix::<f64>::zeros(flat_dim, 0);

    for (name, hint) in hints {
        let vf = match VectorField::from_dsl(basis.clone(), hint) {
            Ok(v) => v,
            Err(SymmetryError::NotRepresentable { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let v = DVector::from_vec(vf.flat());
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        // must lie in this sector's span
        let proj = q * (q.transpose() * &v);
        if (&v - &proj).norm() / norm > hint_tol {
            continue;
        }
        // must be new relative to already accepted hints
        let mut rem = v.clone();
        if accepted.ncols() > 0 {
            rem -= &accepted * (accepted.transpose() * &v);
        }
        if rem.norm() / norm < 1e-8 {
            continue;
        }
        let mut grown = DMatrix::zeros(flat_dim, accepted.ncols() + 1);
        grown.view_mut((0, 0), (flat_dim, accepted.ncols())).copy_from(&accepted);
        grown.set_column(accepted.ncols(), &(&rem / rem.norm()));
        accepted = grown;
        fields.push(snap(VectorField::from_flat(basis.clone(), v.as_slice())?));
        names.push(name.clone());
        if fields.len() == d {
            break;
        }
    }

    // complement within the sector
    if fields.len() < d {
        let mut resid = q.clone();
        if accepted.ncols() > 0 {
            resid -= &accepted * (accepted.transpose() * q);
        }
        let comp = orthonormal_columns(&resid, 0.5);
        let reduced = rref_rows(&comp.transpose(), 1e-8);
        for (i, row) in reduced.iter().enumerate() {
            fields.push(snap(VectorField::from_flat(basis.clone(), row.as_slice())?));
            names.push(format!("null_{i}"));
        }
    }
    Ok((fields, names))
}

/// Gauss-Jordan elimination over the rows; returns rows normalized to a unit
/// pivot, ordered by pivot column.
fn rref_rows(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut rows: Vec<DVector<f64>> = (0..m.nrows()).map(|i| m.row(i).transpose()).collect();
    let ncols = m.ncols();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (col, row)
    let mut used = vec![false; rows.len()];
    for col in 0..ncols {
        let mut best: Option<(usize, f64)> = None;
        for (r, row) in rows.iter().enumerate() {
            if used[r] {
                continue;
            }
            let v = row[col].abs();
            if v > tol && best.map(|(_, bv)| v > bv).unwrap_or(true) {
                best = Some((r, v));
            }
        }
        if let Some((r, _)) = best {
            used[r] = true;
            let pivot = rows[r][col];
            rows[r] /= pivot;
            let pr = rows[r].clone();
            for (r2, row) in rows.iter_mut().enumerate() {
                if r2 != r && row[col].abs() > 0.0 {
                    let f = row[col];
                    *row -= &pr * f;
                }
            }
            pivots.push((col, r));
        }
        if pivots.len() == rows.len() {
            break;
        }
    }
    pivots.sort();
    pivots.into_iter().map(|(_, r)| rows[r].clone()).collect()
}

/// Zero out negligible coefficients for readability.
fn snap(mut f: VectorField) -> VectorField {
    let max = f
        .flat()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for v in f.xi.iter_mut().chain(f.tau.iter_mut()).chain(f.phi.iter_mut()) {
        if v.abs() < 1e-10 * max {
            *v = 0.0;
        }
    }
    f
}

/// Max `|pr X E_a|` of a field over freshly sampled on-shell configurations.
pub fn verify_field(
    scheme: &Scheme,
    sampling: &SamplingRecipe,
    field: &dyn PointField,
    count: usize,
    seed: u64,
) -> Result<f64, FinderError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (configs, _) = sampling.draw_many(scheme, &mut rng, count)?;
    let mut worst = 0.0f64;
    for cfg in &configs {
        let act = prolonged_action(field, scheme, cfg)?;
        for v in act {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// Soundness cross-validation of a found basis on held-out configurations.
pub fn verify_basis(
    scheme: &Scheme,
    sampling: &SamplingRecipe,
    basis: &SymmetryBasis,
    count: usize,
    seed: u64,
) -> Result<f64, FinderError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (configs, _) = sampling.draw_many(scheme, &mut rng, count)?;
    let mut worst = 0.0f64;
    for f in &basis.fields {
        for cfg in &configs {
            let act = prolonged_action(f, scheme, cfg)?;
            for v in act {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Structure constants of the finite sector, projected (least squares) onto
/// the full found span.
pub struct StructureConstants {
    pub finite_names: Vec<String>,
    pub all_names: Vec<String>,
    /// `constants[i][j]` = expansion of `[X_i, X_j]` over all found fields,
    /// for finite-sector `i < j`.
    pub constants: Vec<Vec<Option<Vec<f64>>>>,
    pub closure_residual: f64,
    pub bracket_reexpansion_max: f64,
}

pub fn structure_constants(sb: &SymmetryBasis) -> Result<StructureConstants, FinderError> {
    let finite: Vec<usize> = (0..sb.fields.len())
        .filter(|i| sb.sectors[*i] == Sector::Finite)
        .collect();
    let nf = finite.len();
    let flat_dim = 3 * sb.basis.len();
    let mut bmat = DMatrix::zeros(flat_dim, sb.fields.len());
    for (j, f) in sb.fields.iter().enumerate() {
        for (i, v) in f.flat().iter().enumerate() {
            bmat[(i, j)] = *v;
        }
    }
    let svd = bmat.clone().svd(true, true);

    let mut constants: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; nf]; nf];
    let mut closure = 0.0f64;
    let mut reexp = 0.0f64;
    for a in 0..nf {
        for b in (a + 1)..nf {
            let (br, resid) = lie_bracket(&sb.fields[finite[a]], &sb.fields[finite[b]], &sb.basis)?;
            reexp = reexp.max(resid);
            let v = DVector::from_vec(br.flat());
            let vnorm = v.norm();
            if vnorm <= 1e-12 {
                constants[a][b] = Some(vec![0.0; sb.fields.len()]);
                constants[b][a] = Some(vec![0.0; sb.fields.len()]);
                continue;
            }
            let c = svd.solve(&v, 1e-12).expect("svd solve");
            let proj_res = (&bmat * &c - &v).norm() / vnorm;
            closure = closure.max(proj_res);
            let coeffs: Vec<f64> = c.iter().copied().collect();
            let neg: Vec<f64> = coeffs.iter().map(|x| -x).collect();
            constants[a][b] = Some(coeffs);
            constants[b][a] = Some(neg);
        }
    }
    Ok(StructureConstants {
        finite_names: finite.iter().map(|i| sb.names[*i].clone()).collect(),
        all_names: sb.names.clone(),
        constants,
        closure_residual: closure,
        bracket_reexpansion_max: reexp,
    })
}
