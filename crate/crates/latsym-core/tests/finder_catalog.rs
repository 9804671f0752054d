//! End-to-end finder runs on the built-in schemes: dimensions, sector splits,
//! oracle containment, determinism and scaling robustness.

use std::collections::BTreeMap;

use latsym_core::catalog::{self, CatalogEntry};
use latsym_core::finder::{
    find_symmetries, structure_constants, verify_basis, verify_field, FinderOptions, Sector,
    SymmetryBasis,
};
use latsym_core::symmetry::VectorField;

fn hints(entry: &CatalogEntry) -> Vec<(String, latsym_core::DslField)> {
    entry
        .oracle_fields
        .iter()
        .map(|o| (o.name.clone(), o.field.clone()))
        .collect()
}

fn run(entry: &CatalogEntry, seed: u64) -> SymmetryBasis {
    let basis = entry.reference_basis().unwrap();
    find_symmetries(
        &entry.scheme,
        &entry.sampling,
        &basis,
        &FinderOptions {
            seed,
            ..Default::default()
        },
        &hints(entry),
    )
    .unwrap()
}

fn lorentz(f: &str) -> CatalogEntry {
    let mut p = BTreeMap::new();
    p.insert("f".to_string(), f.to_string());
    catalog::instantiate("lorentz", &p).unwrap()
}

#[test]
fn heat_fixed_dimension_and_sectors() {
    let entry = catalog::default_entry("heat_fixed").unwrap();
    let sb = run(&entry, 42);
    assert_eq!(sb.dimension(), 6);
    assert_eq!(sb.finite_dimension(), 3);
    assert_eq!(sb.superposition_dimension(), 3);
    // oracle containment
    for o in &entry.oracle_fields {
        let vf = VectorField::from_dsl(sb.basis.clone(), &o.field).unwrap();
        assert!(
            sb.projection_residual(&vf) <= 1e-6,
            "{} not contained",
            o.name
        );
    }
}

#[test]
fn heat_dilation5_dimension() {
    let entry = catalog::default_entry("heat_dilation5").unwrap();
    let sb = run(&entry, 7);
    assert_eq!(sb.dimension(), 7);
    assert_eq!(sb.finite_dimension(), 4);
}

#[test]
fn heat_dilation4_dimension() {
    let entry = catalog::default_entry("heat_dilation4").unwrap();
    let sb = run(&entry, 7);
    assert_eq!(sb.dimension(), 7);
    assert_eq!(sb.finite_dimension(), 4);
}

#[test]
fn heat_exponential_contains_shifted_translation_excludes_dilation() {
    let entry = catalog::default_entry("heat_exponential").unwrap();
    let sb = run(&entry, 11);
    assert_eq!(sb.dimension(), 4);
    assert_eq!(sb.finite_dimension(), 3);
    for o in &entry.oracle_fields {
        let vf = VectorField::from_dsl(sb.basis.clone(), &o.field).unwrap();
        assert!(sb.projection_residual(&vf) <= 1e-6, "{} missing", o.name);
    }
    // x dx is not a symmetry of this scheme
    let xdx = latsym_core::DslField::parse("x", "0", "0", &BTreeMap::new()).unwrap();
    let vf = VectorField::from_dsl(sb.basis.clone(), &xdx).unwrap();
    assert!(sb.projection_residual(&vf) > 1e-2);
}

#[test]
fn heat_galilei_finite_sector() {
    let entry = catalog::default_entry("heat_galilei").unwrap();
    let sb = run(&entry, 3);
    assert_eq!(sb.finite_dimension(), 4);
    assert_eq!(sb.superposition_dimension(), 1);
}

#[test]
fn lorentz_power_dimension() {
    let sb = run(&lorentz("power"), 5);
    assert_eq!(sb.dimension(), 4);
    assert_eq!(sb.superposition_dimension(), 0);
}

#[test]
fn lorentz_exp_dimension() {
    let sb = run(&lorentz("exp"), 5);
    assert_eq!(sb.dimension(), 4);
}

#[test]
fn lorentz_linear_finite_only() {
    let entry = lorentz("linear");
    let sb = run(&entry, 5);
    assert_eq!(sb.finite_dimension(), 4);
    assert_eq!(sb.superposition_dimension(), 0);
    for o in &entry.oracle_fields {
        let vf = VectorField::from_dsl(sb.basis.clone(), &o.field).unwrap();
        assert!(sb.projection_residual(&vf) <= 1e-6, "{} missing", o.name);
    }
}

#[test]
fn lorentz_constant_superposition_slice() {
    let sb = run(&lorentz("constant"), 5);
    // separable polynomial slice {1, x, x^2, y, y^2}
    assert_eq!(sb.superposition_dimension(), 5);
}

#[test]
fn burgers_potential_dimension() {
    let sb = run(&catalog::default_entry("burgers_potential").unwrap(), 9);
    assert_eq!(sb.dimension(), 4);
}

#[test]
fn burgers_linearizable_dimension() {
    let entry = catalog::default_entry("burgers_linearizable").unwrap();
    let sb = run(&entry, 42);
    assert_eq!(sb.dimension(), 3);
    assert_eq!(sb.superposition_dimension(), 0);
}

#[test]
fn soundness_on_held_out_configurations() {
    let entry = catalog::default_entry("heat_fixed").unwrap();
    let sb = run(&entry, 1);
    let worst = verify_basis(&entry.scheme, &entry.sampling, &sb, 100, 999).unwrap();
    assert!(worst <= 1e-7, "held-out residual {worst}");
}

#[test]
fn determinism_same_seed_same_result() {
    let entry = catalog::default_entry("heat_dilation4").unwrap();
    let a = run(&entry, 12345);
    let b = run(&entry, 12345);
    assert_eq!(a.dimension(), b.dimension());
    assert_eq!(a.singular_values.len(), b.singular_values.len());
    for (x, y) in a.singular_values.iter().zip(&b.singular_values) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        for (x, y) in fa.flat().iter().zip(fb.flat()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn monotonicity_deg1_to_deg2() {
    let entry = catalog::default_entry("heat_fixed").unwrap();
    let d1 = {
        let basis = entry.basis(1, 1, 1).unwrap();
        find_symmetries(
            &entry.scheme,
            &entry.sampling,
            &basis,
            &FinderOptions { seed: 4, ..Default::default() },
            &[],
        )
        .unwrap()
        .dimension()
    };
    let d2 = run(&entry, 4).dimension();
    assert!(d2 >= d1, "dim deg1 = {d1}, deg2 = {d2}");
    assert_eq!(d1, 5); // {dx, dt, u du, du, x du}: x^2+2t needs degree 2
}

#[test]
fn scaling_robustness_principal_angles() {
    // widening the u sampling range by 10 must not move the found span
    let entry = catalog::default_entry("heat_fixed").unwrap();
    let sb1 = run(&entry, 8);
    let mut wide = catalog::default_entry("heat_fixed").unwrap();
    for f in &mut wide.sampling.free {
        if f.target.var == latsym_core::dsl::GridVar::U {
            f.lo *= 10.0;
            f.hi *= 10.0;
        }
    }
    let sb2 = run(&wide, 8);
    assert_eq!(sb1.dimension(), sb2.dimension());
    let q1 = sb1.span_matrix();
    let q2 = sb2.span_matrix();
    let overlap = q1.transpose() * q2;
    let svd = overlap.svd(false, false);
    for s in svd.singular_values.iter() {
        let angle = s.min(1.0).acos();
        assert!(angle < 1e-6, "principal angle {angle}");
    }
}

#[test]
fn galilei_structure_constants_contain_boost_bracket() {
    let entry = catalog::default_entry("heat_galilei").unwrap();
    let sb = run(&entry, 6);
    let sc = structure_constants(&sb).unwrap();
    assert!(sc.closure_residual <= 1e-8, "closure {}", sc.closure_residual);
    // [P0, B] = P1
    let i = sc.finite_names.iter().position(|n| n == "P0").unwrap();
    let j = sc.finite_names.iter().position(|n| n == "B").unwrap();
    let p1 = sc.all_names.iter().position(|n| n == "P1").unwrap();
    let c = sc.constants[i][j].as_ref().unwrap();
    for (k, v) in c.iter().enumerate() {
        let want = if k == p1 { 1.0 } else { 0.0 };
        assert!(
            (v - want).abs() <= 1e-8,
            "[P0,B] coefficient {k} = {v}, want {want}"
        );
    }
}

#[test]
fn oracle_fields_annihilate_residuals() {
    // catalog self-test on a couple of entries (full sweep in acceptance)
    for id in ["heat_galilei", "burgers_linearizable"] {
        let entry = catalog::default_entry(id).unwrap();
        for o in &entry.oracle_fields {
            let worst = verify_field(&entry.scheme, &entry.sampling, &o.field, 50, 77).unwrap();
            assert!(worst <= 1e-8, "{id}/{}: residual {worst}", o.name);
        }
    }
}

#[test]
fn prolonged_action_is_linear_in_the_field() {
    use latsym_core::prolonged_action;
    use rand::{Rng, SeedableRng};
    let entry = catalog::default_entry("heat_dilation5").unwrap();
    let basis = entry.reference_basis().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let (configs, _) = entry
        .sampling
        .draw_many(&entry.scheme, &mut rng, 5)
        .unwrap();
    let n = basis.len();
    let mut mk = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut v = VectorField::zero(basis.clone());
        for k in 0..n {
            v.xi[k] = rng.random_range(-1.0..1.0);
            v.tau[k] = rng.random_range(-1.0..1.0);
            v.phi[k] = rng.random_range(-1.0..1.0);
        }
        v
    };
    let a = mk(&mut rng);
    let b = mk(&mut rng);
    let (al, be) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let mut combo = VectorField::zero(basis.clone());
    combo.add_scaled(&a, al);
    combo.add_scaled(&b, be);
    for cfg in &configs {
        let pa = prolonged_action(&a, &entry.scheme, cfg).unwrap();
        let pb = prolonged_action(&b, &entry.scheme, cfg).unwrap();
        let pc = prolonged_action(&combo, &entry.scheme, cfg).unwrap();
        for k in 0..5 {
            let want = al * pa[k] + be * pb[k];
            let scale = want.abs().max(pa[k].abs()).max(pb[k].abs()).max(1.0);
            assert!(
                (pc[k] - want).abs() <= 1e-12 * scale,
                "linearity violated: {} vs {}",
                pc[k],
                want
            );
        }
    }
}
