use latsym_core::catalog;
use latsym_core::lattice::solve_on_shell;
use latsym_core::sampling::default_guess;
use rand::{Rng, SeedableRng};

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "heat_galilei".into());
    let seed: u64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(77);
    let entry = catalog::default_entry(&id).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut solve_fail = 0;
    let mut fill_fail = 0;
    let mut pred_fail = 0;
    let mut incomplete = 0;
    let mut ok = 0;
    for _ in 0..200 {
        let mut builder = latsym_core::lattice::ConfigurationBuilder::new();
        for f in &entry.sampling.free {
            builder.set(f.target, rng.random_range(f.lo..f.hi));
        }
        let guess = default_guess(&entry.scheme, &builder);
        let solved = match solve_on_shell(&entry.scheme, &builder, guess) {
            Ok(s) => s,
            Err(e) => {
                solve_fail += 1;
                if solve_fail <= 3 {
                    println!("solve fail: {e}");
                }
                continue;
            }
        };
        let mut cfg = solved;
        let mut bad_fill = false;
        for (target, expr) in &entry.sampling.fills {
            let env = cfg.environment(&entry.scheme);
            match latsym_core::dsl::eval(expr, &env) {
                Ok(v) => cfg.set(*target, v),
                Err(e) => {
                    bad_fill = true;
                    if fill_fail < 3 {
                        println!("fill fail for {target}: {e}");
                    }
                    fill_fail += 1;
                    break;
                }
            }
        }
        if bad_fill {
            continue;
        }
        let x00 = cfg.get(&latsym_core::dsl::parse_grid_ref("x[0,0]").unwrap());
        let x10 = cfg.get(&latsym_core::dsl::parse_grid_ref("x[1,0]").unwrap());
        if let (Some(a), Some(b)) = (x00, x10) {
            if (b - a).abs() < 0.1 {
                pred_fail += 1;
                continue;
            }
        }
        if let Some(j) = latsym_core::lattice::cell_jacobian(&cfg) {
            if j.abs() < 1e-6 {
                pred_fail += 1;
                println!("cell jacobian reject: {j:.3e}");
                continue;
            }
        }
        if entry.sampling.admissible.iter().any(|p| !p(&cfg)) {
            pred_fail += 1;
            continue;
        }
        if !cfg.is_complete(&entry.scheme) {
            incomplete += 1;
            continue;
        }
        ok += 1;
    }
    println!("ok {ok}, solve_fail {solve_fail}, fill_fail {fill_fail}, pred_fail {pred_fail}, incomplete {incomplete}");
}
