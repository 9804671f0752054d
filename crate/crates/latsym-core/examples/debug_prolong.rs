use latsym_core::catalog;
use latsym_core::symmetry::prolonged_action;
use rand::SeedableRng;

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "heat_fixed".into());
    let entry = catalog::default_entry(&id).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let (configs, _) = entry.sampling.draw_many(&entry.scheme, &mut rng, 3).unwrap();
    for (i, cfg) in configs.iter().enumerate() {
        println!("config {i}:");
        for (off, p) in cfg.complete_points() {
            println!("  {:?}: x={:.4} t={:.4} u={:.4}", off, p.x, p.t, p.u);
        }
        let res = latsym_core::lattice::residuals(&entry.scheme, cfg).unwrap();
        println!("  residuals: {res:?}");
        for o in &entry.oracle_fields {
            let act = prolonged_action(&o.field, &entry.scheme, cfg).unwrap();
            println!("  pr {} E = {act:?}", o.name);
        }
    }
}
