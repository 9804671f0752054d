use latsym_core::catalog;
use latsym_core::finder::{find_symmetries, FinderOptions};

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "heat_fixed".into());
    let mut params = std::collections::BTreeMap::new();
    for arg in std::env::args().skip(2) {
        if let Some((k, v)) = arg.split_once('=') {
            params.insert(k.to_string(), v.to_string());
        }
    }
    let entry = catalog::instantiate(&id, &params).unwrap();
    let basis = entry.reference_basis().unwrap();
    let hints: Vec<_> = entry
        .oracle_fields
        .iter()
        .map(|o| (o.name.clone(), o.field.clone()))
        .collect();
    let sb = find_symmetries(
        &entry.scheme,
        &entry.sampling,
        &basis,
        &FinderOptions { seed: 42, ..Default::default() },
        &hints,
    )
    .unwrap();
    println!("scheme: {id}, basis size {}, active {}", basis.len(), sb.active_columns);
    println!("samples {}, attempts {}", sb.samples, sb.attempts);
    println!("singular values (desc):");
    for (i, s) in sb.singular_values.iter().enumerate() {
        println!("  {i:2}  {s:.6e}");
    }
    println!("dimension {} (finite {}, sup {})", sb.dimension(), sb.finite_dimension(), sb.superposition_dimension());
    for ((f, n), sec) in sb.fields.iter().zip(&sb.names).zip(&sb.sectors) {
        println!("  [{sec:?}] {n}: {}", f.to_dsl(entry.scheme.second_coord));
    }
}
