use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::dsl::{parse_expression, parse_grid_ref};
use crate::sampling::{default_ranges, SamplingRecipe};

use super::{GuessSteps, LatticeError, Scheme, StencilBounds};

/// On-disk description of a custom scheme.
///
/// ```toml
/// name = "heat_fixed_custom"
/// residuals = [
///   "x[1,0]-x[0,0]-h1",
///   "t[1,0]-t[0,0]",
///   "x[0,1]-x[0,0]",
///   "t[0,1]-t[0,0]-h2",
///   "(u[0,1]-u[0,0])/h2-(u[1,0]-2*u[0,0]+u[-1,0])/h1^2",
/// ]
/// solve_for = ["x[1,0]", "t[1,0]", "x[0,1]", "t[0,1]", "u[0,1]"]
///
/// [stencil]
/// i1 = 1
/// i2 = 1
/// j1 = 0
/// j2 = 1
///
/// [params]
/// h1 = 1.0
/// h2 = 1.0
///
/// [sampling]
/// free = ["x[0,0]", "t[0,0]", "u[-1,0]", "u[0,0]", "u[1,0]"]
///
/// [sampling.fills]
/// "x[-1,0]" = "x[0,0]-h1"
/// "t[-1,0]" = "t[0,0]"
/// ```
#[derive(Debug, Deserialize)]
struct SchemeFileToml {
    name: String,
    stencil: StencilToml,
    residuals: Vec<String>,
    solve_for: Vec<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    second_coord: Option<String>,
    #[serde(default)]
    sampling: Option<SamplingToml>,
    #[serde(default)]
    guess_steps: Option<GuessStepsToml>,
}

#[derive(Debug, Deserialize)]
struct StencilToml {
    i1: u32,
    i2: u32,
    j1: u32,
    j2: u32,
}

#[derive(Debug, Deserialize)]
struct SamplingToml {
    free: Vec<String>,
    #[serde(default)]
    ranges: BTreeMap<String, (f64, f64)>,
    #[serde(default)]
    fills: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize, Default)]
struct GuessStepsToml {
    x_m: Option<f64>,
    t_m: Option<f64>,
    x_n: Option<f64>,
    t_n: Option<f64>,
}

pub struct SchemeFileResult {
    pub scheme: Scheme,
    pub sampling: Option<SamplingRecipe>,
}

pub fn load_scheme_file(path: &Path) -> Result<SchemeFileResult, LatticeError> {
    let text = std::fs::read_to_string(path)?;
    parse_scheme_file(&text)
}

pub fn parse_scheme_file(text: &str) -> Result<SchemeFileResult, LatticeError> {
    let file: SchemeFileToml =
        toml::from_str(text).map_err(|e| LatticeError::SchemeFile(e.to_string()))?;

    if file.residuals.len() != 5 {
        return Err(LatticeError::SchemeFile(format!(
            "expected exactly 5 residuals, got {}",
            file.residuals.len()
        )));
    }
    if file.solve_for.len() != 5 {
        return Err(LatticeError::SchemeFile(format!(
            "expected exactly 5 solve-for quantities, got {}",
            file.solve_for.len()
        )));
    }

    let mut residuals = Vec::with_capacity(5);
    for (i, r) in file.residuals.iter().enumerate() {
        residuals.push(parse_expression(r).map_err(|e| {
            LatticeError::SchemeFile(format!("residual E{}: {e}", i + 1))
        })?);
    }
    let residuals: [_; 5] = residuals.try_into().unwrap();

    let mut solve_for = Vec::with_capacity(5);
    for s in &file.solve_for {
        solve_for.push(
            parse_grid_ref(s).map_err(|e| LatticeError::SchemeFile(format!("solve_for `{s}`: {e}")))?,
        );
    }
    let solve_for: [_; 5] = solve_for.try_into().unwrap();

    let bounds = StencilBounds {
        i1: file.stencil.i1,
        i2: file.stencil.i2,
        j1: file.stencil.j1,
        j2: file.stencil.j2,
    };

    let mut scheme = Scheme::new(file.name, bounds, residuals, file.params, solve_for)?;
    if let Some(sc) = &file.second_coord {
        let c = match sc.as_str() {
            "t" => 't',
            "y" => 'y',
            other => {
                return Err(LatticeError::SchemeFile(format!(
                    "second_coord must be \"t\" or \"y\", got `{other}`"
                )))
            }
        };
        scheme = scheme.with_second_coord(c);
    }
    if let Some(g) = &file.guess_steps {
        let mut steps = GuessSteps::default();
        if let Some(v) = g.x_m {
            steps.x_m = v;
        }
        if let Some(v) = g.t_m {
            steps.t_m = v;
        }
        if let Some(v) = g.x_n {
            steps.x_n = v;
        }
        if let Some(v) = g.t_n {
            steps.t_n = v;
        }
        scheme = scheme.with_guess_steps(steps);
    }

    let sampling = match &file.sampling {
        None => None,
        Some(s) => {
            let mut targets = Vec::new();
            for f in &s.free {
                targets.push(
                    parse_grid_ref(f)
                        .map_err(|e| LatticeError::SchemeFile(format!("sampling free `{f}`: {e}")))?,
                );
            }
            let mut overrides = BTreeMap::new();
            for (k, v) in &s.ranges {
                let r = parse_grid_ref(k)
                    .map_err(|e| LatticeError::SchemeFile(format!("sampling range `{k}`: {e}")))?;
                if v.1 <= v.0 {
                    return Err(LatticeError::SchemeFile(format!(
                        "sampling range for `{k}` is empty"
                    )));
                }
                overrides.insert(r, *v);
            }
            let mut fills = Vec::new();
            for (k, v) in &s.fills {
                let r = parse_grid_ref(k)
                    .map_err(|e| LatticeError::SchemeFile(format!("fill target `{k}`: {e}")))?;
                let e = parse_expression(v)
                    .map_err(|e| LatticeError::SchemeFile(format!("fill for `{k}`: {e}")))?;
                fills.push((r, e));
            }
            Some(SamplingRecipe::new(default_ranges(&targets, &overrides), fills))
        }
    };

    Ok(SchemeFileResult { scheme, sampling })
}
