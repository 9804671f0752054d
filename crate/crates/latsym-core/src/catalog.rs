//! Built-in schemes: the heat equation on five lattices, Lorentz-invariant
//! schemes on a light-cone lattice with four interaction types, and two
//! discrete Burgers equations. Each entry carries closed-form symmetry fields
//! for verification, a sampling recipe for the finder, a seed recipe for grid
//! propagation, and (where meaningful) a continuum scaling map.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::continuum::{ContinuumScaling, DictTerm};
use crate::dsl::{parse_expression, parse_grid_ref, Expression, GridRef};
use crate::lattice::{
    propagate_grid, GridSeed, GridSolution, GuessSteps, LatticeError, Scheme, StencilBounds, Window,
};
use crate::sampling::{FreeQuantity, SamplingRecipe};
use crate::symmetry::{AnsatzBasis, DslField, SymmetryError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown scheme `{id}`; known schemes: {}", known.join(", "))]
    UnknownId { id: String, known: Vec<&'static str> },
    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: String, detail: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// A closed-form symmetry field used as a verification oracle.
pub struct OracleField {
    pub name: String,
    pub field: DslField,
}

/// Closed-form lattice coordinates for seeding propagation.
pub struct SeedRecipe {
    /// Rows seeded in full at the bottom of the padded region (j1 + j2).
    pub seed_rows: u32,
    /// Whether `u` must also be seeded along the left cone edge, one point
    /// per new row (schemes whose equation marches diagonally).
    pub left_u: bool,
    /// `(x, t)` at lattice site `(m, n)` given scheme and seed parameters.
    #[allow(clippy::type_complexity)]
    pub lattice:
        Box<dyn Fn(&BTreeMap<String, f64>, &BTreeMap<String, f64>, i64, i64) -> (f64, f64) + Send + Sync>,
}

pub struct CatalogEntry {
    pub id: &'static str,
    pub scheme: Scheme,
    /// Integration constants for the closed-form lattice seed.
    pub seed_params: BTreeMap<String, f64>,
    pub oracle_fields: Vec<OracleField>,
    /// Expected dimensions under the reference ansatz (deg 2,2,1 plus the
    /// entry's registered functions).
    pub expected_total_dim: Option<usize>,
    pub expected_finite_dim: Option<usize>,
    pub expected_superposition_dim: Option<usize>,
    /// Registered ansatz functions this entry needs, as `(name, dsl)`.
    pub extra_basis: Vec<(String, String)>,
    pub sampling: SamplingRecipe,
    pub seed: SeedRecipe,
    pub continuum: Option<ContinuumScaling>,
    pub expected_continuum: Vec<(DictTerm, f64)>,
    /// Default smooth profile `u0(x, t)` for seeding grids.
    pub default_profile: Expression,
}

impl CatalogEntry {
    /// Reference ansatz: monomials of degree (2, 2, 1) plus the entry's
    /// registered functions.
    pub fn reference_basis(&self) -> Result<Arc<AnsatzBasis>, SymmetryError> {
        self.basis(2, 2, 1)
    }

    pub fn basis(&self, deg_x: u32, deg_t: u32, deg_u: u32) -> Result<Arc<AnsatzBasis>, SymmetryError> {
        let mut basis = AnsatzBasis::new(deg_x, deg_t, deg_u)?;
        for (name, text) in &self.extra_basis {
            basis = basis.with_registered(name.clone(), text, &self.scheme.params)?;
        }
        Ok(Arc::new(basis))
    }

    pub fn profile_value(&self, x: f64, t: f64) -> f64 {
        let mut env = crate::dsl::Environment::new();
        env.bind_point(x, t, 0.0);
        env.bind_params(&self.scheme.params);
        env.bind_params(&self.seed_params);
        crate::dsl::eval(&self.default_profile, &env).unwrap_or(0.0)
    }

    /// Propagate a grid over `window` from the entry's closed-form seed and
    /// default profile.
    pub fn make_grid(&self, window: Window) -> Result<GridSolution, LatticeError> {
        self.make_grid_with(window, &|x, t| self.profile_value(x, t))
    }

    pub fn make_grid_with(
        &self,
        window: Window,
        profile: &dyn Fn(f64, f64) -> f64,
    ) -> Result<GridSolution, LatticeError> {
        let b = self.scheme.bounds;
        let seed_rows = self.seed.seed_rows as i64;
        let first_filled = window.n_lo + seed_rows;
        let rows_to_fill = (window.n_hi - first_filled + 1).max(0);
        let base_m_lo = window.m_lo - rows_to_fill * b.i1 as i64;
        let base_m_hi = window.m_hi + rows_to_fill * b.i2 as i64;

        let mut seed = GridSeed::default();
        for n in window.n_lo..window.n_lo + seed_rows {
            for m in base_m_lo..=base_m_hi {
                let (x, t) = (self.seed.lattice)(&self.scheme.params, &self.seed_params, m, n);
                seed.full.insert((m, n), (x, t, profile(x, t)));
            }
        }
        if self.seed.left_u {
            for k in 0..rows_to_fill {
                let n = first_filled + k;
                let m = base_m_lo + (k + 1) * b.i1 as i64;
                let (x, t) = (self.seed.lattice)(&self.scheme.params, &self.seed_params, m, n);
                seed.extra_u.insert((m, n), profile(x, t));
            }
        }
        propagate_grid(&self.scheme, &seed, window)
    }
}

pub fn ids() -> Vec<&'static str> {
    vec![
        "heat_fixed",
        "heat_dilation5",
        "heat_dilation4",
        "heat_exponential",
        "heat_galilei",
        "lorentz",
        "burgers_potential",
        "burgers_linearizable",
    ]
}

/// One line per id with its parameter signature.
pub fn signatures() -> Vec<(&'static str, &'static str)> {
    vec![
        ("heat_fixed", "h1=1 h2=1 [seed: x0=0 t0=0]"),
        ("heat_dilation5", "[seed: ax=1 bx=0 at=1 bt=0]"),
        ("heat_dilation4", "c=1 [seed: ax=1 bx=0 t0=0]"),
        ("heat_exponential", "c=1 h=1 [seed: alpha=1 beta=0 t0=0]"),
        ("heat_galilei", "tau1=1 tau2=2 zeta=2 [seed: sigma=1 x0=0 t0=0]"),
        ("lorentz", "f=power|exp|linear|constant p=3 [seed: sx=1 sy=1 x0=0 y0=0]"),
        ("burgers_potential", "c=1 [seed: sx=1 x0=0 t0=0]"),
        ("burgers_linearizable", "c=1 [seed: sx=1 x0=0 t0=0]"),
    ]
}

pub fn instantiate(
    id: &str,
    params: &BTreeMap<String, String>,
) -> Result<CatalogEntry, CatalogError> {
    let mut reader = ParamReader::new(params);
    let entry = match id {
        "heat_fixed" => heat_fixed(&mut reader)?,
        "heat_dilation5" => heat_dilation5(&mut reader)?,
        "heat_dilation4" => heat_dilation4(&mut reader)?,
        "heat_exponential" => heat_exponential(&mut reader)?,
        "heat_galilei" => heat_galilei(&mut reader)?,
        "lorentz" => lorentz(&mut reader)?,
        "burgers_potential" => burgers_potential(&mut reader)?,
        "burgers_linearizable" => burgers_linearizable(&mut reader)?,
        _ => {
            return Err(CatalogError::UnknownId {
                id: id.to_string(),
                known: ids(),
            })
        }
    };
    reader.check_unknown()?;
    Ok(entry)
}

pub fn default_entry(id: &str) -> Result<CatalogEntry, CatalogError> {
    instantiate(id, &BTreeMap::new())
}

// ---------------------------------------------------------------------------
// Parameter reading
// ---------------------------------------------------------------------------

struct ParamReader<'a> {
    map: &'a BTreeMap<String, String>,
    used: Vec<String>,
}

impl<'a> ParamReader<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        ParamReader { map, used: Vec::new() }
    }

    fn num(&mut self, name: &str, default: f64) -> Result<f64, CatalogError> {
        self.used.push(name.to_string());
        match self.map.get(name) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| CatalogError::InvalidParameter {
                name: name.to_string(),
                detail: format!("`{s}` is not a number"),
            }),
        }
    }

    fn text(&mut self, name: &str, default: &str) -> String {
        self.used.push(name.to_string());
        self.map.get(name).cloned().unwrap_or_else(|| default.to_string())
    }

    fn check_unknown(&self) -> Result<(), CatalogError> {
        for k in self.map.keys() {
            if !self.used.contains(k) {
                return Err(CatalogError::InvalidParameter {
                    name: k.clone(),
                    detail: format!("unknown parameter (known: {})", self.used.join(", ")),
                });
            }
        }
        Ok(())
    }
}

fn invalid(name: &str, detail: impl Into<String>) -> CatalogError {
    CatalogError::InvalidParameter {
        name: name.to_string(),
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

fn xp(text: &str) -> Expression {
    parse_expression(text).expect("catalog expression parses")
}

fn gr(text: &str) -> GridRef {
    parse_grid_ref(text).expect("catalog grid ref parses")
}

fn pmap(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn standard_solve_for() -> [GridRef; 5] {
    [gr("x[1,0]"), gr("t[1,0]"), gr("x[0,1]"), gr("t[0,1]"), gr("u[0,1]")]
}

fn oracle(name: &str, xi: &str, tau: &str, phi: &str, params: &BTreeMap<String, f64>) -> OracleField {
    OracleField {
        name: name.to_string(),
        field: DslField::parse(xi, tau, phi, params).expect("catalog oracle parses"),
    }
}

fn free_list(specs: &[(&str, f64, f64)]) -> Vec<FreeQuantity> {
    specs
        .iter()
        .map(|(t, lo, hi)| FreeQuantity {
            target: gr(t),
            lo: *lo,
            hi: *hi,
        })
        .collect()
}

fn fills(specs: &[(&str, &str)]) -> Vec<(GridRef, Expression)> {
    specs.iter().map(|(t, e)| (gr(t), xp(e))).collect()
}

const COORD: (f64, f64) = (-5.0, 5.0);
const VALUE: (f64, f64) = (-2.0, 2.0);

fn value_of(cfg: &crate::lattice::StencilConfiguration, text: &str) -> f64 {
    cfg.get(&gr(text)).unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Heat on the fixed rectangular lattice
// ---------------------------------------------------------------------------

fn heat_fixed(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let h1 = r.num("h1", 1.0)?;
    let h2 = r.num("h2", 1.0)?;
    if h1 <= 0.0 {
        return Err(invalid("h1", "must be positive"));
    }
    if h2 <= 0.0 {
        return Err(invalid("h2", "must be positive"));
    }
    let x0 = r.num("x0", 0.0)?;
    let t0 = r.num("t0", 0.0)?;

    let params = pmap(&[("h1", h1), ("h2", h2)]);
    let scheme = Scheme::new(
        "heat_fixed",
        StencilBounds { i1: 1, i2: 1, j1: 0, j2: 1 },
        [
            xp("x[1,0]-x[0,0]-h1"),
            xp("t[1,0]-t[0,0]"),
            xp("x[0,1]-x[0,0]"),
            xp("t[0,1]-t[0,0]-h2"),
            xp("(u[0,1]-u[0,0])/h2-(u[1,0]-2*u[0,0]+u[-1,0])/h1^2"),
        ],
        params.clone(),
        standard_solve_for(),
    )?
    .with_guess_steps(GuessSteps { x_m: h1, t_m: 1.0, x_n: 1.0, t_n: h2 });

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[0,0]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", VALUE.0, VALUE.1),
            ("u[0,0]", VALUE.0, VALUE.1),
            ("u[1,0]", VALUE.0, VALUE.1),
        ]),
        fills(&[("x[-1,0]", "x[0,0]-h1"), ("t[-1,0]", "t[0,0]")]),
    );

    let oracles = vec![
        oracle("P0", "0", "1", "0", &params),
        oracle("P1", "1", "0", "0", &params),
        oracle("W", "0", "0", "u", &params),
        oracle("S[1]", "0", "0", "1", &params),
        oracle("S[x]", "0", "0", "x", &params),
        oracle("S[x^2+2t]", "0", "0", "x^2+2*t", &params),
    ];

    Ok(CatalogEntry {
        id: "heat_fixed",
        scheme,
        seed_params: pmap(&[("x0", x0), ("t0", t0)]),
        oracle_fields: oracles,
        expected_total_dim: Some(6),
        expected_finite_dim: Some(3),
        expected_superposition_dim: Some(3),
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 1,
            left_u: false,
            lattice: Box::new(|sp, seed, m, n| {
                (
                    sp["h1"] * m as f64 + seed["x0"],
                    sp["h2"] * n as f64 + seed["t0"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            displacement: {
                let (h1, h2) = (h1, h2);
                Box::new(move |eps, i, j| (i as f64 * h1 * eps, j as f64 * h2 * eps * eps))
            },
            params: {
                let (h1, h2) = (h1, h2);
                Box::new(move |eps| pmap(&[("h1", h1 * eps), ("h2", h2 * eps * eps)]))
            },
            normalize_by: DictTerm::Ut,
            upow_exponent: 2.0,
        }),
        expected_continuum: vec![(DictTerm::Ut, 1.0), (DictTerm::Uxx, -1.0)],
        default_profile: xp("0.4*sin(x)+0.05*x^2"),
    })
}

// ---------------------------------------------------------------------------
// Heat on the five-point dilation-invariant lattice
// ---------------------------------------------------------------------------

fn heat_dilation5(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let ax = r.num("ax", 1.0)?;
    let bx = r.num("bx", 0.0)?;
    let at = r.num("at", 1.0)?;
    let bt = r.num("bt", 0.0)?;
    if ax == 0.0 || at == 0.0 {
        return Err(invalid("ax/at", "lattice spacings must be nonzero"));
    }

    let params = BTreeMap::new();
    let scheme = Scheme::new(
        "heat_dilation5",
        StencilBounds { i1: 1, i2: 1, j1: 1, j2: 1 },
        [
            xp("x[1,0]-2*x[0,0]+x[-1,0]"),
            xp("t[1,0]-t[0,0]"),
            xp("x[0,1]-x[0,0]"),
            xp("t[0,1]-2*t[0,0]+t[0,-1]"),
            xp("(u[0,1]-u[0,0])/(t[0,1]-t[0,0])-(u[1,0]-2*u[0,0]+u[-1,0])/(x[1,0]-x[0,0])^2"),
        ],
        params.clone(),
        standard_solve_for(),
    )?;

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[-1,0]", COORD.0, COORD.1),
            ("x[0,0]", COORD.0, COORD.1),
            ("t[0,-1]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", VALUE.0, VALUE.1),
            ("u[0,0]", VALUE.0, VALUE.1),
            ("u[1,0]", VALUE.0, VALUE.1),
            ("u[0,-1]", VALUE.0, VALUE.1),
        ]),
        fills(&[("x[0,-1]", "x[0,0]"), ("t[-1,0]", "t[0,0]")]),
    )
    .with_predicate(Box::new(|cfg| {
        (value_of(cfg, "t[0,0]") - value_of(cfg, "t[0,-1]")).abs() >= 0.1
    }));

    let oracles = vec![
        oracle("P0", "0", "1", "0", &params),
        oracle("P1", "1", "0", "0", &params),
        oracle("D", "x", "2*t", "0", &params),
        oracle("W", "0", "0", "u", &params),
        oracle("S[1]", "0", "0", "1", &params),
        oracle("S[x]", "0", "0", "x", &params),
        oracle("S[x^2+2t]", "0", "0", "x^2+2*t", &params),
    ];

    Ok(CatalogEntry {
        id: "heat_dilation5",
        scheme,
        seed_params: pmap(&[("ax", ax), ("bx", bx), ("at", at), ("bt", bt)]),
        oracle_fields: oracles,
        expected_total_dim: Some(7),
        expected_finite_dim: Some(4),
        expected_superposition_dim: Some(3),
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 2,
            left_u: false,
            lattice: Box::new(|_sp, seed, m, n| {
                (
                    seed["ax"] * m as f64 + seed["bx"],
                    seed["at"] * n as f64 + seed["bt"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            displacement: Box::new(|eps, i, j| (i as f64 * eps, j as f64 * eps * eps)),
            params: Box::new(|_| BTreeMap::new()),
            normalize_by: DictTerm::Ut,
            upow_exponent: 2.0,
        }),
        expected_continuum: vec![(DictTerm::Ut, 1.0), (DictTerm::Uxx, -1.0)],
        default_profile: xp("0.4*sin(x)+0.05*x^2"),
    })
}

// ---------------------------------------------------------------------------
// Heat on the four-point dilation-invariant lattice
// ---------------------------------------------------------------------------

fn heat_dilation4(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let c = r.num("c", 1.0)?;
    if c == 0.0 {
        return Err(invalid("c", "must be nonzero"));
    }
    let ax = r.num("ax", 1.0)?;
    let bx = r.num("bx", 0.0)?;
    let t0 = r.num("t0", 0.0)?;

    let params = pmap(&[("c", c)]);
    let scheme = Scheme::new(
        "heat_dilation4",
        StencilBounds { i1: 1, i2: 1, j1: 0, j2: 1 },
        [
            xp("x[1,0]-2*x[0,0]+x[-1,0]"),
            xp("t[1,0]-t[0,0]"),
            xp("x[0,1]-x[0,0]"),
            xp("t[0,1]-t[0,0]-c*(x[1,0]-x[0,0])^2"),
            xp("u[0,1]-u[0,0]-c*(u[1,0]-2*u[0,0]+u[-1,0])"),
        ],
        params.clone(),
        standard_solve_for(),
    )?
    .with_guess_steps(GuessSteps { x_m: 1.0, t_m: 1.0, x_n: 1.0, t_n: c })
    ;

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[-1,0]", COORD.0, COORD.1),
            ("x[0,0]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", VALUE.0, VALUE.1),
            ("u[0,0]", VALUE.0, VALUE.1),
            ("u[1,0]", VALUE.0, VALUE.1),
        ]),
        fills(&[("t[-1,0]", "t[0,0]")]),
    );

    let oracles = vec![
        oracle("P0", "0", "1", "0", &params),
        oracle("P1", "1", "0", "0", &params),
        oracle("D", "x", "2*t", "0", &params),
        oracle("W", "0", "0", "u", &params),
        oracle("S[1]", "0", "0", "1", &params),
        oracle("S[x]", "0", "0", "x", &params),
        oracle("S[x^2+2t]", "0", "0", "x^2+2*t", &params),
    ];

    Ok(CatalogEntry {
        id: "heat_dilation4",
        scheme,
        seed_params: pmap(&[("ax", ax), ("bx", bx), ("t0", t0)]),
        oracle_fields: oracles,
        expected_total_dim: Some(7),
        expected_finite_dim: Some(4),
        expected_superposition_dim: Some(3),
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 1,
            left_u: false,
            lattice: Box::new(|sp, seed, m, n| {
                (
                    seed["ax"] * m as f64 + seed["bx"],
                    seed["t0"] + n as f64 * sp["c"] * seed["ax"] * seed["ax"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            displacement: {
                let c = c;
                Box::new(move |eps, i, j| (i as f64 * eps, j as f64 * c * eps * eps))
            },
            params: {
                let c = c;
                Box::new(move |_| pmap(&[("c", c)]))
            },
            normalize_by: DictTerm::Ut,
            upow_exponent: 2.0,
        }),
        expected_continuum: vec![(DictTerm::Ut, 1.0), (DictTerm::Uxx, -1.0)],
        default_profile: xp("0.4*sin(x)+0.05*x^2"),
    })
}

// ---------------------------------------------------------------------------
// Heat on the exponential lattice
// ---------------------------------------------------------------------------

fn heat_exponential(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let c = r.num("c", 1.0)?;
    if c == 0.0 || c == -1.0 {
        return Err(invalid("c", "must satisfy c != 0 and c != -1"));
    }
    if c < -1.0 {
        return Err(invalid(
            "c",
            "must satisfy 1 + c > 0 so the time-dependent translation (1+c)^(t/h) is real",
        ));
    }
    let h = r.num("h", 1.0)?;
    if h <= 0.0 {
        return Err(invalid("h", "must be positive"));
    }
    let alpha = r.num("alpha", 1.0)?;
    let beta = r.num("beta", 0.0)?;
    let t0 = r.num("t0", 0.0)?;
    if alpha == 0.0 {
        return Err(invalid("alpha", "must be nonzero (degenerate lattice)"));
    }

    let params = pmap(&[("c", c), ("h", h)]);
    let scheme = Scheme::new(
        "heat_exponential",
        StencilBounds { i1: 1, i2: 1, j1: 0, j2: 1 },
        [
            xp("x[1,0]-2*x[0,0]+x[-1,0]"),
            xp("t[1,0]-t[0,0]"),
            xp("x[0,1]-(1+c)*x[0,0]"),
            xp("t[0,1]-t[0,0]-h"),
            xp("(u[0,1]-u[0,0])/h-(u[1,0]-2*u[0,0]+u[-1,0])/(x[1,0]-x[0,0])^2"),
        ],
        params.clone(),
        standard_solve_for(),
    )?
    .with_guess_steps(GuessSteps { x_m: 1.0, t_m: 1.0, x_n: 1.0, t_n: h });

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[-1,0]", COORD.0, COORD.1),
            ("x[0,0]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", VALUE.0, VALUE.1),
            ("u[0,0]", VALUE.0, VALUE.1),
            ("u[1,0]", VALUE.0, VALUE.1),
        ]),
        fills(&[("t[-1,0]", "t[0,0]")]),
    );

    let g_text = "(1+c)^(t/h)";
    let oracles = vec![
        oracle("P1shift", g_text, "0", "0", &params),
        oracle("P0", "0", "1", "0", &params),
        oracle("W", "0", "0", "u", &params),
        oracle("S[1]", "0", "0", "1", &params),
    ];

    Ok(CatalogEntry {
        id: "heat_exponential",
        scheme,
        seed_params: pmap(&[("alpha", alpha), ("beta", beta), ("t0", t0)]),
        oracle_fields: oracles,
        expected_total_dim: Some(4),
        expected_finite_dim: Some(3),
        expected_superposition_dim: Some(1),
        extra_basis: vec![(g_text.to_string(), g_text.to_string())],
        sampling,
        seed: SeedRecipe {
            seed_rows: 1,
            left_u: false,
            lattice: Box::new(|sp, seed, m, n| {
                let growth = (1.0 + sp["c"]).powi(n as i32);
                (
                    growth * (seed["alpha"] * m as f64 + seed["beta"]),
                    sp["h"] * n as f64 + seed["t0"],
                )
            }),
        },
        continuum: None,
        expected_continuum: vec![],
        default_profile: xp("0.5*sin(x/4)"),
    })
}

// ---------------------------------------------------------------------------
// Heat on the Galilei-invariant lattice
// ---------------------------------------------------------------------------

fn heat_galilei(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let tau1 = r.num("tau1", 1.0)?;
    let tau2 = r.num("tau2", 2.0)?;
    let zeta = r.num("zeta", 2.0)?;
    for (name, v) in [("tau1", tau1), ("tau2", tau2), ("zeta", zeta)] {
        if v == 0.0 {
            return Err(invalid(name, "must be nonzero"));
        }
    }
    let sigma = r.num("sigma", 1.0)?;
    let x0 = r.num("x0", 0.0)?;
    let t0 = r.num("t0", 0.0)?;

    let params = pmap(&[("tau1", tau1), ("tau2", tau2), ("zeta", zeta)]);
    let scheme = Scheme::new(
        "heat_galilei",
        StencilBounds { i1: 1, i2: 1, j1: 0, j2: 1 },
        [
            xp("x[1,0]-2*x[0,0]+x[-1,0]"),
            xp("t[1,0]-t[0,0]-tau1"),
            xp("(x[1,0]-x[0,0])*tau2-(x[0,1]-x[0,0])*tau1-zeta"),
            xp("t[0,1]-t[0,0]-tau2"),
            xp("(u[0,1]-u[0,0])/tau2-tau2^2*(u[1,0]-2*u[0,0]+u[-1,0])/zeta^2"),
        ],
        params.clone(),
        standard_solve_for(),
    )?
    .with_guess_steps(GuessSteps { x_m: 1.0, t_m: tau1, x_n: 1.0, t_n: tau2 });

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[-1,0]", COORD.0, COORD.1),
            ("x[0,0]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", VALUE.0, VALUE.1),
            ("u[0,0]", VALUE.0, VALUE.1),
            ("u[1,0]", VALUE.0, VALUE.1),
        ]),
        fills(&[("t[-1,0]", "t[0,0]-tau1")]),
    );

    let oracles = vec![
        oracle("P0", "0", "1", "0", &params),
        oracle("P1", "1", "0", "0", &params),
        oracle("B", "t", "0", "0", &params),
        oracle("W", "0", "0", "u", &params),
        oracle("S[1]", "0", "0", "1", &params),
    ];

    let sig = zeta / (tau1 * tau2);
    Ok(CatalogEntry {
        id: "heat_galilei",
        scheme,
        seed_params: pmap(&[("sigma", sigma), ("x0", x0), ("t0", t0)]),
        oracle_fields: oracles,
        expected_total_dim: Some(5),
        expected_finite_dim: Some(4),
        expected_superposition_dim: Some(1),
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 1,
            left_u: false,
            lattice: Box::new(|sp, seed, m, n| {
                let (t1, t2, z) = (sp["tau1"], sp["tau2"], sp["zeta"]);
                let s = seed["sigma"];
                (
                    s * t1 * m as f64 + ((s * t1 * t2 - z) / t1) * n as f64 + seed["x0"],
                    t1 * m as f64 + t2 * n as f64 + seed["t0"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            // alignment (zeta = sigma tau1 tau2) imposed by deriving sigma
            displacement: {
                let (t1, t2) = (tau1, tau2);
                let s = sig;
                Box::new(move |eps, i, j| {
                    (i as f64 * s * t1 * eps, i as f64 * t1 * eps + j as f64 * t2 * eps)
                })
            },
            params: {
                let (t1, t2, z) = (tau1, tau2, zeta);
                Box::new(move |eps| {
                    pmap(&[("tau1", t1 * eps), ("tau2", t2 * eps), ("zeta", z * eps * eps)])
                })
            },
            normalize_by: DictTerm::Ut,
            upow_exponent: 2.0,
        }),
        expected_continuum: vec![
            (DictTerm::Ut, 1.0),
            (DictTerm::Uxx, -1.0),
            (DictTerm::Uxt, -2.0 / sig),
            (DictTerm::Utt, -1.0 / (sig * sig)),
        ],
        default_profile: xp("0.4*sin(x)+0.05*x^2"),
    })
}

/// Orthogonality of the two straight-line coordinate families:
/// `(sigma^2 + 1) tau1 tau2 = sigma zeta`.
pub fn galilei_is_orthogonal(tau1: f64, tau2: f64, zeta: f64, sigma: f64) -> bool {
    ((sigma * sigma + 1.0) * tau1 * tau2 - sigma * zeta).abs() <= 1e-12 * (1.0 + zeta.abs())
}

/// Alignment of the `m = const` family with the x-axis:
/// `sigma tau1 tau2 - zeta = 0`.
pub fn galilei_is_aligned(tau1: f64, tau2: f64, zeta: f64, sigma: f64) -> bool {
    (sigma * tau1 * tau2 - zeta).abs() <= 1e-12 * (1.0 + zeta.abs())
}

// ---------------------------------------------------------------------------
// Lorentz-invariant schemes on the light-cone lattice
// ---------------------------------------------------------------------------

fn lorentz(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let f_kind = r.text("f", "power");
    let p = r.num("p", 3.0)?;
    let sx = r.num("sx", 1.0)?;
    let sy = r.num("sy", 1.0)?;
    let x0 = r.num("x0", 0.0)?;
    let y0 = r.num("y0", 0.0)?;
    if sx == 0.0 || sy == 0.0 {
        return Err(invalid("sx/sy", "lattice spacings must be nonzero"));
    }

    let (f_text, params) = match f_kind.as_str() {
        "power" => {
            if p == 0.0 || p == 1.0 {
                return Err(invalid("p", "power interaction requires p != 0 and p != 1"));
            }
            ("u[0,0]^p", pmap(&[("p", p)]))
        }
        "exp" => ("exp(u[0,0])", BTreeMap::new()),
        "linear" => ("u[0,0]", BTreeMap::new()),
        "constant" => ("1", BTreeMap::new()),
        other => {
            return Err(invalid(
                "f",
                format!("unknown interaction `{other}` (power, exp, linear, constant)"),
            ))
        }
    };

    let e5 = format!(
        "(u[1,1]-u[0,1]-u[1,0]+u[0,0])/((x[1,0]-x[0,0])*(y[0,1]-y[0,0]))-({f_text})"
    );
    let scheme = Scheme::new(
        format!("lorentz[f={f_kind}]"),
        StencilBounds { i1: 1, i2: 1, j1: 1, j2: 1 },
        [
            xp("x[1,0]-2*x[0,0]+x[-1,0]"),
            xp("y[1,0]-y[0,0]"),
            xp("x[0,1]-x[0,0]"),
            xp("y[0,1]-2*y[0,0]+y[0,-1]"),
            xp(&e5),
        ],
        params.clone(),
        [gr("x[1,0]"), gr("y[1,0]"), gr("x[0,1]"), gr("y[0,1]"), gr("u[1,1]")],
    )?
    .with_second_coord('y');

    // power interactions with general exponent need a positive argument
    let uval = if f_kind == "power" { (0.2, 2.2) } else { VALUE };
    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[-1,0]", COORD.0, COORD.1),
            ("x[0,0]", COORD.0, COORD.1),
            ("y[0,-1]", COORD.0, COORD.1),
            ("y[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", uval.0, uval.1),
            ("u[0,-1]", uval.0, uval.1),
            ("u[0,0]", uval.0, uval.1),
            ("u[1,0]", uval.0, uval.1),
            ("u[0,1]", uval.0, uval.1),
        ]),
        fills(&[
            ("y[-1,0]", "y[0,0]"),
            ("x[0,-1]", "x[0,0]"),
            ("x[1,1]", "x[1,0]"),
            ("y[1,1]", "y[0,1]"),
        ]),
    )
    .with_predicate(Box::new(|cfg| {
        (value_of(cfg, "y[0,1]") - value_of(cfg, "y[0,0]")).abs() >= 0.1
    }));

    let mut oracles = vec![
        oracle("X1", "1", "0", "0", &params),
        oracle("X2", "0", "1", "0", &params),
        oracle("L", "x", "-y", "0", &params),
    ];
    let (total, finite, superp) = match f_kind.as_str() {
        "power" => {
            oracles.push(oracle("D", "x", "y", "2/(1-p)*u", &params));
            (Some(4), Some(4), Some(0))
        }
        "exp" => {
            oracles.push(oracle("D", "x", "y", "-2", &params));
            (Some(4), Some(4), Some(0))
        }
        "linear" => {
            oracles.push(oracle("W", "0", "0", "u", &params));
            (Some(4), Some(4), Some(0))
        }
        "constant" => {
            oracles.push(oracle("Lhat", "x", "y", "2*u", &params));
            for (name, s) in [
                ("S[1]", "1"),
                ("S[x]", "x"),
                ("S[x^2]", "x^2"),
                ("S[y]", "y"),
                ("S[y^2]", "y^2"),
            ] {
                oracles.push(oracle(name, "0", "0", s, &params));
            }
            (Some(9), Some(4), Some(5))
        }
        _ => unreachable!(),
    };

    let upow = if f_kind == "power" { p } else { 2.0 };
    Ok(CatalogEntry {
        id: "lorentz",
        scheme,
        seed_params: pmap(&[("sx", sx), ("sy", sy), ("x0", x0), ("y0", y0)]),
        oracle_fields: oracles,
        expected_total_dim: total,
        expected_finite_dim: finite,
        expected_superposition_dim: superp,
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 2,
            left_u: true,
            lattice: Box::new(|_sp, seed, m, n| {
                (
                    seed["sx"] * m as f64 + seed["x0"],
                    seed["sy"] * n as f64 + seed["y0"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            displacement: Box::new(|eps, i, j| (i as f64 * eps, j as f64 * eps)),
            params: {
                let params = params.clone();
                Box::new(move |_| params.clone())
            },
            normalize_by: DictTerm::Uxt,
            upow_exponent: upow,
        }),
        expected_continuum: match f_kind.as_str() {
            "power" => vec![(DictTerm::Uxt, 1.0), (DictTerm::UPow, -1.0)],
            "exp" => vec![(DictTerm::Uxt, 1.0), (DictTerm::ExpU, -1.0)],
            "linear" => vec![(DictTerm::Uxt, 1.0), (DictTerm::U, -1.0)],
            _ => vec![(DictTerm::Uxt, 1.0), (DictTerm::One, -1.0)],
        },
        default_profile: match f_kind.as_str() {
            "power" => xp("1+0.2*sin(x)+0.2*cos(t)"),
            "exp" => xp("-2+0.2*sin(x)+0.1*cos(t)"),
            _ => xp("0.3*sin(x)+0.2*cos(t)"),
        },
    })
}

// ---------------------------------------------------------------------------
// Discrete potential Burgers equation (four-point lattice)
// ---------------------------------------------------------------------------

fn burgers_potential(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let c = r.num("c", 1.0)?;
    if c == 0.0 {
        return Err(invalid("c", "must be nonzero"));
    }
    let sx = r.num("sx", 1.0)?;
    let x0 = r.num("x0", 0.0)?;
    let t0 = r.num("t0", 0.0)?;

    let params = pmap(&[("c", c)]);
    let scheme = Scheme::new(
        "burgers_potential",
        StencilBounds { i1: 1, i2: 1, j1: 0, j2: 1 },
        [
            xp("x[1,0]-2*x[0,0]+x[-1,0]"),
            xp("t[1,0]-t[0,0]"),
            xp("x[0,1]-x[0,0]"),
            xp("t[0,1]-t[0,0]-c*(x[1,0]-x[0,0])^2"),
            xp("(u[0,1]-u[0,0])/(t[0,1]-t[0,0])-(u[1,0]-2*u[0,0]+u[-1,0])/(x[1,0]-x[0,0])^2-((u[1,0]-u[0,0])/(x[1,0]-x[0,0]))^2"),
        ],
        params.clone(),
        standard_solve_for(),
    )?
    .with_guess_steps(GuessSteps { x_m: 1.0, t_m: 1.0, x_n: 1.0, t_n: c });

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[-1,0]", COORD.0, COORD.1),
            ("x[0,0]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[-1,0]", VALUE.0, VALUE.1),
            ("u[0,0]", VALUE.0, VALUE.1),
            ("u[1,0]", VALUE.0, VALUE.1),
        ]),
        fills(&[("t[-1,0]", "t[0,0]")]),
    );

    let oracles = vec![
        oracle("P1", "1", "0", "0", &params),
        oracle("P0", "0", "1", "0", &params),
        oracle("D", "x", "2*t", "0", &params),
        oracle("W", "0", "0", "1", &params),
    ];

    Ok(CatalogEntry {
        id: "burgers_potential",
        scheme,
        seed_params: pmap(&[("sx", sx), ("x0", x0), ("t0", t0)]),
        oracle_fields: oracles,
        expected_total_dim: Some(4),
        expected_finite_dim: Some(3),
        expected_superposition_dim: Some(1),
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 1,
            left_u: false,
            lattice: Box::new(|sp, seed, m, n| {
                (
                    seed["sx"] * m as f64 + seed["x0"],
                    seed["t0"] + n as f64 * sp["c"] * seed["sx"] * seed["sx"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            displacement: {
                let c = c;
                Box::new(move |eps, i, j| (i as f64 * eps, j as f64 * c * eps * eps))
            },
            params: {
                let c = c;
                Box::new(move |_| pmap(&[("c", c)]))
            },
            normalize_by: DictTerm::Ut,
            upow_exponent: 2.0,
        }),
        expected_continuum: vec![
            (DictTerm::Ut, 1.0),
            (DictTerm::Uxx, -1.0),
            (DictTerm::UxSq, -1.0),
        ],
        default_profile: xp("0.3*sin(x)"),
    })
}

// ---------------------------------------------------------------------------
// Linearizable discrete Burgers equation
// ---------------------------------------------------------------------------

fn burgers_linearizable(r: &mut ParamReader) -> Result<CatalogEntry, CatalogError> {
    let c = r.num("c", 1.0)?;
    if c == 0.0 {
        return Err(invalid("c", "must be nonzero"));
    }
    let sx = r.num("sx", 1.0)?;
    let x0 = r.num("x0", 0.0)?;
    let t0 = r.num("t0", 0.0)?;

    let params = pmap(&[("c", c)]);
    // numerator bracket closes after u[1,0]*(u[2,0]-u[0,0]); verified by the
    // catalog self-test (the listed algebra annihilates this reading).
    let e5 = "u[0,1]-u[0,0]-c*(1+(x[1,0]-x[0,0])*u[0,0])\
              *(u[2,0]-2*u[1,0]+u[0,0]+(x[1,0]-x[0,0])*u[1,0]*(u[2,0]-u[0,0]))\
              /(1+c*(x[1,0]-x[0,0])*(u[1,0]-u[0,0]+(x[1,0]-x[0,0])*u[0,0]*u[1,0]))";
    let scheme = Scheme::new(
        "burgers_linearizable",
        StencilBounds { i1: 0, i2: 2, j1: 0, j2: 1 },
        [
            xp("x[2,0]-2*x[1,0]+x[0,0]"),
            xp("t[1,0]-t[0,0]"),
            xp("x[0,1]-x[0,0]"),
            xp("t[0,1]-t[0,0]-c*(x[1,0]-x[0,0])^2"),
            xp(e5),
        ],
        params.clone(),
        [gr("x[2,0]"), gr("t[1,0]"), gr("x[0,1]"), gr("t[0,1]"), gr("u[0,1]")],
    )?
    .with_guess_steps(GuessSteps { x_m: 1.0, t_m: 1.0, x_n: 1.0, t_n: c });

    let sampling = SamplingRecipe::new(
        free_list(&[
            ("x[0,0]", COORD.0, COORD.1),
            ("x[1,0]", COORD.0, COORD.1),
            ("t[0,0]", COORD.0, COORD.1),
            ("u[0,0]", -0.4, 0.4),
            ("u[1,0]", -0.4, 0.4),
            ("u[2,0]", -0.4, 0.4),
        ]),
        fills(&[("t[2,0]", "t[0,0]")]),
    )
    .with_predicate(Box::new(move |cfg| {
        let hx = value_of(cfg, "x[1,0]") - value_of(cfg, "x[0,0]");
        let (u0, u1) = (value_of(cfg, "u[0,0]"), value_of(cfg, "u[1,0]"));
        let den = 1.0 + c * hx * (u1 - u0 + hx * u0 * u1);
        hx.abs() <= 1.5 && den.abs() >= 0.2 && (1.0 + hx * u0).abs() >= 0.2
    }));

    let oracles = vec![
        oracle("P0", "0", "1", "0", &params),
        oracle("P1", "1", "0", "0", &params),
        oracle("D", "x", "2*t", "-u", &params),
    ];

    Ok(CatalogEntry {
        id: "burgers_linearizable",
        scheme,
        seed_params: pmap(&[("sx", sx), ("x0", x0), ("t0", t0)]),
        oracle_fields: oracles,
        expected_total_dim: Some(3),
        expected_finite_dim: Some(3),
        expected_superposition_dim: Some(0),
        extra_basis: vec![],
        sampling,
        seed: SeedRecipe {
            seed_rows: 1,
            left_u: false,
            lattice: Box::new(|sp, seed, m, n| {
                (
                    seed["sx"] * m as f64 + seed["x0"],
                    seed["t0"] + n as f64 * sp["c"] * seed["sx"] * seed["sx"],
                )
            }),
        },
        continuum: Some(ContinuumScaling {
            displacement: {
                let c = c;
                Box::new(move |eps, i, j| (i as f64 * eps, j as f64 * c * eps * eps))
            },
            params: {
                let c = c;
                Box::new(move |_| pmap(&[("c", c)]))
            },
            normalize_by: DictTerm::Ut,
            upow_exponent: 2.0,
        }),
        expected_continuum: vec![
            (DictTerm::Ut, 1.0),
            (DictTerm::Uxx, -1.0),
            (DictTerm::UUx, -2.0),
        ],
        default_profile: xp("0.15*sin(x)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::GridVar;

    /// free + solve-for covers every residual quantity, and fills complete
    /// every referenced point.
    #[test]
    fn entries_are_well_formed() {
        for id in ids() {
            let entry = default_entry(id).unwrap();
            let s = &entry.scheme;
            for q in s.referenced_quantities() {
                let in_free = entry.sampling.free.iter().any(|f| f.target == q);
                assert!(
                    in_free || s.is_solve_for(&q),
                    "{id}: residual quantity {q} neither free nor solved"
                );
            }
            for (di, dj) in s.referenced_points() {
                for var in [GridVar::X, GridVar::T, GridVar::U] {
                    let r = GridRef::new(var, di, dj);
                    let covered = entry.sampling.free.iter().any(|f| f.target == r)
                        || s.is_solve_for(&r)
                        || entry.sampling.fills.iter().any(|(t, _)| *t == r);
                    assert!(covered, "{id}: point quantity {r} not covered by sampling");
                }
            }
        }
    }

    #[test]
    fn unknown_id_lists_known() {
        match default_entry("no_such_scheme") {
            Err(CatalogError::UnknownId { known, .. }) => {
                assert!(known.contains(&"heat_fixed"));
            }
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("unknown id accepted"),
        }
    }

    #[test]
    fn exponential_rejects_excluded_c() {
        for bad in ["0", "-1", "-2.5"] {
            let mut p = BTreeMap::new();
            p.insert("c".to_string(), bad.to_string());
            assert!(
                matches!(instantiate("heat_exponential", &p), Err(CatalogError::InvalidParameter { .. })),
                "c={bad} should be rejected"
            );
        }
    }

    #[test]
    fn lorentz_power_rejects_degenerate_exponents() {
        for bad in ["0", "1"] {
            let mut p = BTreeMap::new();
            p.insert("f".to_string(), "power".to_string());
            p.insert("p".to_string(), bad.to_string());
            assert!(matches!(
                instantiate("lorentz", &p),
                Err(CatalogError::InvalidParameter { .. })
            ));
        }
    }

    #[test]
    fn unknown_parameter_rejected() {
        let mut p = BTreeMap::new();
        p.insert("nope".to_string(), "1".to_string());
        assert!(matches!(
            instantiate("heat_fixed", &p),
            Err(CatalogError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn fixed_lattice_reproduces_closed_form() {
        let entry = default_entry("heat_fixed").unwrap();
        let grid = entry.make_grid(Window::new(0, 8, 0, 8).unwrap()).unwrap();
        for m in 0..=8 {
            for n in 0..=8 {
                let (x, t, _) = grid.get(m, n).unwrap();
                assert!((x - m as f64).abs() < 1e-12);
                assert!((t - n as f64).abs() < 1e-12);
            }
        }
        assert!(grid.onshell_residual < 1e-9);
    }

    #[test]
    fn exponential_lattice_matches_figure_parameters() {
        // c = sqrt(2), h = 1, alpha = pi, beta = 0, t0 = 0
        let mut p = BTreeMap::new();
        p.insert("c".to_string(), format!("{}", std::f64::consts::SQRT_2));
        p.insert("alpha".to_string(), format!("{}", std::f64::consts::PI));
        let entry = instantiate("heat_exponential", &p).unwrap();
        let grid = entry.make_grid(Window::new(0, 8, 0, 8).unwrap()).unwrap();
        let c = std::f64::consts::SQRT_2;
        for m in 0..=8i64 {
            for n in 0..=8i64 {
                let (x, t, _) = grid.get(m, n).unwrap();
                let expect = (1.0 + c).powi(n as i32) * std::f64::consts::PI * m as f64;
                assert!(
                    (x - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
                    "x({m},{n}) = {x}, want {expect}"
                );
                assert!((t - n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn galilei_lattice_matches_straight_line_families() {
        // Figure parameters tau1=1, tau2=2, zeta=2, sigma=1, x0=t0=0
        let entry = default_entry("heat_galilei").unwrap();
        let grid = entry.make_grid(Window::new(0, 10, 0, 10).unwrap()).unwrap();
        let (t1, t2, z) = (1.0, 2.0, 2.0);
        let s = 1.0;
        for n in 0..=10i64 {
            for m in 0..=10i64 {
                let (x, t, _) = grid.get(m, n).unwrap();
                // n = const family: x - x0 = sigma (t - t0) - (zeta/tau1) n
                let lhs = x - (s * t - (z / t1) * n as f64);
                assert!(lhs.abs() <= 1e-12 * (1.0 + x.abs()), "family1 ({m},{n}): {lhs}");
                // m = const family: x - x0 = ((s t1 t2 - z)/(t1 t2)) (t - t0) + (zeta/tau2) m
                let lhs2 = x - (((s * t1 * t2 - z) / (t1 * t2)) * t + (z / t2) * m as f64);
                assert!(lhs2.abs() <= 1e-12 * (1.0 + x.abs()), "family2 ({m},{n}): {lhs2}");
            }
        }
        assert!(galilei_is_aligned(1.0, 2.0, 2.0, 1.0));
        assert!(!galilei_is_orthogonal(1.0, 2.0, 2.0, 1.0));
        // orthogonal case: (s^2+1) t1 t2 = s z  with t1=1, t2=1, s=1 -> z=2
        assert!(galilei_is_orthogonal(1.0, 1.0, 2.0, 1.0));
    }
}
