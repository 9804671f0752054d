use latsym_core::catalog;
use latsym_core::dsl::{eval_with_gradient, GridVar};
use latsym_core::symmetry::VectorField;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "heat_fixed".into());
    let entry = catalog::default_entry(&id).unwrap();
    let basis = entry.reference_basis().unwrap();
    let nb = basis.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let (configs, _) = entry.sampling.draw_many(&entry.scheme, &mut rng, 30).unwrap();

    // replicate the finder's masked columns
    let mut cols: Vec<(usize, usize)> = Vec::new();
    for comp in 0..3usize {
        for (k, f) in basis.functions().iter().enumerate() {
            if comp < 2 && f.uses_u() {
                continue;
            }
            cols.push((comp, k));
        }
    }
    let mut col_index = vec![vec![usize::MAX; nb]; 3];
    for (j, c) in cols.iter().enumerate() {
        col_index[c.0][c.1] = j;
    }
    let mut mat = DMatrix::zeros(5 * configs.len(), cols.len());
    let mut bvals = vec![0.0; nb];
    for (s, cfg) in configs.iter().enumerate() {
        let mut point_vals = std::collections::BTreeMap::new();
        for (offset, p) in cfg.complete_points() {
            basis.eval_all(p.x, p.t, p.u, &mut bvals).unwrap();
            point_vals.insert(offset, bvals.clone());
        }
        let env = cfg.environment(&entry.scheme);
        for (a, residual) in entry.scheme.residuals.iter().enumerate() {
            let (_, grad) = eval_with_gradient(residual, &env).unwrap();
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

    // equilibrate like the finder
    let mut col_norms = vec![0.0f64; cols.len()];
    for j in 0..cols.len() {
        let norm = mat.column(j).norm();
        col_norms[j] = if norm > 0.0 { norm } else { 1.0 };
        for i in 0..mat.nrows() {
            mat[(i, j)] /= col_norms[j];
        }
    }
    let svd = mat.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    println!("smallest sigmas: {:?}", &sv[sv.len().saturating_sub(8)..]);
    for o in &entry.oracle_fields {
        let vf = VectorField::from_dsl(basis.clone(), &o.field).unwrap();
        let flat = vf.flat();
        let mut c = DVector::zeros(cols.len());
        for (j, (comp, k)) in cols.iter().enumerate() {
            c[j] = flat[comp * nb + k] * col_norms[j];
        }
        let r = (&mat * &c).norm();
        println!("||M c|| for {} = {:.3e}  (coeff norm {:.3})", o.name, r, c.norm());
        if r > 1e-8 {
            // find worst row
            let prod = &mat * &c;
            let mut worst = (0usize, 0.0f64);
            for (i, v) in prod.iter().enumerate() {
                if v.abs() > worst.1 {
                    worst = (i, v.abs());
                }
            }
            println!("   worst row {} (sample {}, residual E{})", worst.0, worst.0 / 5, worst.0 % 5 + 1);
            // print the coefficient expansion of the field
            println!("   xi={:?}", vf.xi);
            println!("   tau={:?}", vf.tau);
            println!("   phi={:?}", vf.phi);
        }
    }
}
