use std::collections::BTreeMap;

use crate::dsl::{GridRef, GridVar};

use super::{residuals, solve_on_shell, ConfigurationBuilder, LatticeError, Scheme};

/// Inclusive index window `[m_lo..=m_hi] x [n_lo..=n_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub m_lo: i64,
    pub m_hi: i64,
    pub n_lo: i64,
    pub n_hi: i64,
}

impl Window {
    pub fn new(m_lo: i64, m_hi: i64, n_lo: i64, n_hi: i64) -> Result<Self, LatticeError> {
        if m_hi < m_lo || n_hi < n_lo {
            return Err(LatticeError::EmptyWindow);
        }
        Ok(Window {
            m_lo,
            m_hi,
            n_lo,
            n_hi,
        })
    }

    pub fn m_len(&self) -> usize {
        (self.m_hi - self.m_lo + 1) as usize
    }

    pub fn n_len(&self) -> usize {
        (self.n_hi - self.n_lo + 1) as usize
    }
}

/// Boundary data for grid propagation: complete `(x,t,u)` points on the seed
/// rows, plus optional extra `u` values (boundary columns) for schemes whose
/// equation marches diagonally.
#[derive(Debug, Clone, Default)]
pub struct GridSeed {
    pub full: BTreeMap<(i64, i64), (f64, f64, f64)>,
    pub extra_u: BTreeMap<(i64, i64), f64>,
}

/// A filled lattice window with `x`, `t`, `u` arrays.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub window: Window,
    x: Vec<f64>,
    t: Vec<f64>,
    u: Vec<f64>,
    /// Max interior residual measured when the grid was produced.
    pub onshell_residual: f64,
}

impl GridSolution {
    pub fn from_fn(window: Window, mut f: impl FnMut(i64, i64) -> (f64, f64, f64)) -> Self {
        let (ml, nl) = (window.m_len(), window.n_len());
        let mut x = vec![0.0; ml * nl];
        let mut t = vec![0.0; ml * nl];
        let mut u = vec![0.0; ml * nl];
        for n in window.n_lo..=window.n_hi {
            for m in window.m_lo..=window.m_hi {
                let idx = ((n - window.n_lo) as usize) * ml + (m - window.m_lo) as usize;
                let (xv, tv, uv) = f(m, n);
                x[idx] = xv;
                t[idx] = tv;
                u[idx] = uv;
            }
        }
        GridSolution {
            window,
            x,
            t,
            u,
            onshell_residual: f64::NAN,
        }
    }

    fn idx(&self, m: i64, n: i64) -> Option<usize> {
        let w = &self.window;
        if m < w.m_lo || m > w.m_hi || n < w.n_lo || n > w.n_hi {
            return None;
        }
        Some(((n - w.n_lo) as usize) * w.m_len() + (m - w.m_lo) as usize)
    }

    pub fn get(&self, m: i64, n: i64) -> Option<(f64, f64, f64)> {
        self.idx(m, n).map(|i| (self.x[i], self.t[i], self.u[i]))
    }

    /// Re-check all five residuals at every interior placement; returns the
    /// largest absolute residual.
    pub fn max_residual(&self, scheme: &Scheme) -> Result<f64, LatticeError> {
        let b = &scheme.bounds;
        let w = &self.window;
        let mut worst = 0.0f64;
        for n in (w.n_lo + b.j1 as i64)..=(w.n_hi - b.j2 as i64) {
            for m in (w.m_lo + b.i1 as i64)..=(w.m_hi - b.i2 as i64) {
                let mut builder = ConfigurationBuilder::new();
                for gref in scheme.referenced_quantities() {
                    let (xv, tv, uv) = self
                        .get(m + gref.di as i64, n + gref.dj as i64)
                        .expect("interior placement inside window");
                    let v = match gref.var {
                        GridVar::X => xv,
                        GridVar::T => tv,
                        GridVar::U => uv,
                    };
                    builder.set(gref, v);
                }
                // also bind coordinates of auxiliary points so the config builds
                for (di, dj) in scheme.referenced_points() {
                    let (xv, tv, uv) = self.get(m + di as i64, n + dj as i64).unwrap();
                    builder.set(GridRef::new(GridVar::X, di, dj), xv);
                    builder.set(GridRef::new(GridVar::T, di, dj), tv);
                    builder.set(GridRef::new(GridVar::U, di, dj), uv);
                }
                let cfg = builder.build();
                let res = residuals(scheme, &cfg)?;
                for r in res {
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Serialize as CSV with header `m,n,x,t,u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,x,t,u\n");
        for m in self.window.m_lo..=self.window.m_hi {
            for n in self.window.n_lo..=self.window.n_hi {
                let (x, t, u) = self.get(m, n).unwrap();
                out.push_str(&format!("{m},{n},{x},{t},{u}\n"));
            }
        }
        out
    }

    /// Parse a CSV produced by [`GridSolution::to_csv`]; the `u` column may be
    /// absent, in which case it defaults to zero.
    pub fn from_csv(text: &str) -> Result<GridSolution, LatticeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| LatticeError::Csv("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_u = match cols.as_slice() {
            ["m", "n", "x", "t", "u"] => true,
            ["m", "n", "x", "t"] => false,
            _ => {
                return Err(LatticeError::Csv(format!(
                    "unexpected header `{header}` (want m,n,x,t[,u])"
                )))
            }
        };
        let mut pts: BTreeMap<(i64, i64), (f64, f64, f64)> = BTreeMap::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(LatticeError::Csv(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 2,
                    cols.len(),
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64, LatticeError> {
                s.parse()
                    .map_err(|_| LatticeError::Csv(format!("line {}: bad number `{s}`", lineno + 2)))
            };
            let m = parse(fields[0])? as i64;
            let n = parse(fields[1])? as i64;
            let x = parse(fields[2])?;
            let t = parse(fields[3])?;
            let u = if with_u { parse(fields[4])? } else { 0.0 };
            pts.insert((m, n), (x, t, u));
        }
        if pts.is_empty() {
            return Err(LatticeError::Csv("no data rows".into()));
        }
        let m_lo = pts.keys().map(|k| k.0).min().unwrap();
        let m_hi = pts.keys().map(|k| k.0).max().unwrap();
        let n_lo = pts.keys().map(|k| k.1).min().unwrap();
        let n_hi = pts.keys().map(|k| k.1).max().unwrap();
        let window = Window::new(m_lo, m_hi, n_lo, n_hi)?;
        if pts.len() != window.m_len() * window.n_len() {
            return Err(LatticeError::Csv("grid window is not a full rectangle".into()));
        }
        Ok(GridSolution::from_fn(window, |m, n| pts[&(m, n)]))
    }
}

/// Working state for propagation.
struct Sheet {
    vals: BTreeMap<(i64, i64), [Option<f64>; 3]>,
}

impl Sheet {
    fn slot(var: GridVar) -> usize {
        match var {
            GridVar::X => 0,
            GridVar::T => 1,
            GridVar::U => 2,
        }
    }

    fn get(&self, m: i64, n: i64, var: GridVar) -> Option<f64> {
        self.vals.get(&(m, n)).and_then(|v| v[Self::slot(var)])
    }

    fn set(&mut self, m: i64, n: i64, var: GridVar, v: f64) {
        self.vals.entry((m, n)).or_insert([None; 3])[Self::slot(var)] = Some(v);
    }
}

/// Fill `window` from boundary data by repeated on-shell solves, sweeping the
/// reference point in increasing `n`, then increasing `m`.
pub fn propagate_grid(
    scheme: &Scheme,
    seed: &GridSeed,
    window: Window,
) -> Result<GridSolution, LatticeError> {
    let mut sheet = Sheet {
        vals: BTreeMap::new(),
    };
    for ((m, n), (x, t, u)) in &seed.full {
        sheet.set(*m, *n, GridVar::X, *x);
        sheet.set(*m, *n, GridVar::T, *t);
        sheet.set(*m, *n, GridVar::U, *u);
    }
    for ((m, n), u) in &seed.extra_u {
        sheet.set(*m, *n, GridVar::U, *u);
    }

    let all_m: Vec<i64> = sheet.vals.keys().map(|k| k.0).collect();
    let all_n: Vec<i64> = sheet.vals.keys().map(|k| k.1).collect();
    let m_min = all_m.iter().copied().min().unwrap_or(window.m_lo).min(window.m_lo);
    let m_max = all_m.iter().copied().max().unwrap_or(window.m_hi).max(window.m_hi);
    let n_min = all_n.iter().copied().min().unwrap_or(window.n_lo).min(window.n_lo);
    let n_max = all_n.iter().copied().max().unwrap_or(window.n_hi).max(window.n_hi);

    let quantities = scheme.referenced_quantities();
    let points = scheme.referenced_points();
    let free: Vec<GridRef> = quantities
        .iter()
        .filter(|q| !scheme.is_solve_for(q))
        .copied()
        .collect();

    let max_passes = (n_max - n_min + 2) as usize;
    for _pass in 0..max_passes {
        let mut progress = false;
        for n in n_min..=n_max {
            for m in m_min..=m_max {
                // feasibility: all free quantities known, some solve-for unknown
                if !free
                    .iter()
                    .all(|q| sheet.get(m + q.di as i64, n + q.dj as i64, q.var).is_some())
                {
                    continue;
                }
                // auxiliary coordinates of points outside the solved set must
                // be known too so prolongation-grade configurations are full;
                // propagation only needs residual quantities, so require just
                // those plus anything already present.
                if scheme
                    .solve_for
                    .iter()
                    .all(|q| sheet.get(m + q.di as i64, n + q.dj as i64, q.var).is_some())
                {
                    continue;
                }

                // Bind all known quantities at referenced points (the free
                // data plus whatever auxiliary coordinates are already known).
                let mut builder = ConfigurationBuilder::new();
                for (di, dj) in &points {
                    for var in [GridVar::X, GridVar::T, GridVar::U] {
                        let r = GridRef::new(var, *di, *dj);
                        if scheme.is_solve_for(&r) {
                            continue;
                        }
                        if let Some(v) = sheet.get(m + *di as i64, n + *dj as i64, var) {
                            builder.set(r, v);
                        }
                    }
                }
                let guess = propagation_guess(scheme, &sheet, m, n);
                let solved = solve_on_shell(scheme, &builder, guess).map_err(|e| {
                    LatticeError::PropagationSite {
                        m,
                        n,
                        source: Box::new(e),
                    }
                })?;

                let scale = 1.0 + solved.magnitude();
                for q in &scheme.solve_for {
                    let v = solved.get(q).unwrap();
                    let (am, an) = (m + q.di as i64, n + q.dj as i64);
                    match sheet.get(am, an, q.var) {
                        Some(old) => {
                            if (old - v).abs() > 1e-9 * scale {
                                return Err(LatticeError::InconsistentPropagation {
                                    m: am,
                                    n: an,
                                    var: q.var.symbol(),
                                    a: old,
                                    b: v,
                                });
                            }
                        }
                        None => {
                            sheet.set(am, an, q.var, v);
                            progress = true;
                        }
                    }
                }
            }
        }
        if !progress {
            break;
        }
    }

    // crop to the requested window
    for n in window.n_lo..=window.n_hi {
        for m in window.m_lo..=window.m_hi {
            for var in [GridVar::X, GridVar::T, GridVar::U] {
                if sheet.get(m, n, var).is_none() {
                    return Err(LatticeError::InsufficientSeed { m, n });
                }
            }
        }
    }
    let mut grid = GridSolution::from_fn(window, |m, n| {
        (
            sheet.get(m, n, GridVar::X).unwrap(),
            sheet.get(m, n, GridVar::T).unwrap(),
            sheet.get(m, n, GridVar::U).unwrap(),
        )
    });
    grid.onshell_residual = grid.max_residual(scheme)?;
    Ok(grid)
}

fn propagation_guess(scheme: &Scheme, sheet: &Sheet, m: i64, n: i64) -> [f64; 5] {
    let g = &scheme.guess_steps;
    let mut out = [0.0; 5];
    for (k, q) in scheme.solve_for.iter().enumerate() {
        let base = sheet.get(m, n, q.var).unwrap_or(0.0);
        let (step_m, step_n) = match q.var {
            GridVar::X => (
                local_step(sheet, m, n, GridVar::X, -1, 0).unwrap_or(g.x_m),
                local_step(sheet, m, n, GridVar::X, 0, -1).unwrap_or(g.x_n),
            ),
            GridVar::T => (
                local_step(sheet, m, n, GridVar::T, -1, 0).unwrap_or(g.t_m),
                local_step(sheet, m, n, GridVar::T, 0, -1).unwrap_or(g.t_n),
            ),
            GridVar::U => (0.0, 0.0),
        };
        out[k] = base + q.di as f64 * step_m + q.dj as f64 * step_n;
    }
    out
}

fn local_step(sheet: &Sheet, m: i64, n: i64, var: GridVar, dm: i64, dn: i64) -> Option<f64> {
    let here = sheet.get(m, n, var)?;
    let prev = sheet.get(m + dm, n + dn, var)?;
    let step = here - prev;
    if step == 0.0 {
        None
    } else {
        Some(step)
    }
}
