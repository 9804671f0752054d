use std::collections::BTreeMap;

use super::ast::{BinOp, Expression, Func, GridRef, GridVar, Node, NodeKind, Span};
use super::DslError;

/// Value bindings for evaluation: grid quantities, bare point variables and
/// named parameters. Immutable once built; evaluation never mutates it.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    grid: BTreeMap<GridRef, f64>,
    point: BTreeMap<GridVar, f64>,
    params: BTreeMap<String, f64>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_grid(&mut self, r: GridRef, v: f64) {
        self.grid.insert(r, v);
    }

    pub fn bind_point(&mut self, x: f64, t: f64, u: f64) {
        self.point.insert(GridVar::X, x);
        self.point.insert(GridVar::T, t);
        self.point.insert(GridVar::U, u);
    }

    pub fn bind_param(&mut self, name: &str, v: f64) {
        self.params.insert(name.to_string(), v);
    }

    pub fn bind_params(&mut self, params: &BTreeMap<String, f64>) {
        for (k, v) in params {
            self.params.insert(k.clone(), *v);
        }
    }

    pub fn grid(&self, r: &GridRef) -> Option<f64> {
        self.grid.get(r).copied()
    }
}

/// Differentiation slot: either a grid reference or a bare point variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Grid(GridRef),
    Point(GridVar),
}

/// Forward-mode dual value carrying a value and a gradient with respect to a
/// fixed slot ordering.
#[derive(Debug, Clone)]
struct Dual {
    val: f64,
    grad: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, width: usize) -> Self {
        Dual {
            val: v,
            grad: vec![0.0; width],
        }
    }

    fn seeded(v: f64, width: usize, idx: usize) -> Self {
        let mut grad = vec![0.0; width];
        grad[idx] = 1.0;
        Dual { val: v, grad }
    }

    fn is_grad_zero(&self) -> bool {
        self.grad.iter().all(|g| *g == 0.0)
    }
}

/// Evaluate the expression value only.
pub fn eval(e: &Expression, env: &Environment) -> Result<f64, DslError> {
    let d = eval_dual(e.root(), env, &[])?;
    Ok(d.val)
}

/// Evaluate value and exact first derivatives with respect to every grid
/// reference appearing in the expression (forward-mode duals).
pub fn eval_with_gradient(
    e: &Expression,
    env: &Environment,
) -> Result<(f64, BTreeMap<GridRef, f64>), DslError> {
    let slots: Vec<Slot> = e.grid_refs().iter().map(|r| Slot::Grid(*r)).collect();
    let d = eval_dual(e.root(), env, &slots)?;
    let grad = e
        .grid_refs()
        .iter()
        .zip(d.grad.iter())
        .map(|(r, g)| (*r, *g))
        .collect();
    Ok((d.val, grad))
}

/// Evaluate value and derivatives with respect to the bare point variables
/// `(x, t, u)`. Used for fields given as scalar functions of a point.
pub fn eval_with_point_gradient(
    e: &Expression,
    env: &Environment,
) -> Result<(f64, [f64; 3]), DslError> {
    let slots = [
        Slot::Point(GridVar::X),
        Slot::Point(GridVar::T),
        Slot::Point(GridVar::U),
    ];
    let d = eval_dual(e.root(), env, &slots)?;
    Ok((d.val, [d.grad[0], d.grad[1], d.grad[2]]))
}

fn lookup(env: &Environment, slot: Slot, span: Span) -> Result<f64, DslError> {
    match slot {
        Slot::Grid(r) => env.grid.get(&r).copied().ok_or(DslError::UnboundRef { span, gref: r }),
        Slot::Point(v) => env
            .point
            .get(&v)
            .copied()
            .ok_or(DslError::UnboundPoint { span, var: v.symbol() }),
    }
}

fn eval_dual(n: &Node, env: &Environment, slots: &[Slot]) -> Result<Dual, DslError> {
    let w = slots.len();
    let span = n.span;
    let out = match &n.kind {
        NodeKind::Num(v) => Dual::constant(*v, w),
        NodeKind::Param(p) => {
            let v = env
                .params
                .get(p)
                .copied()
                .ok_or_else(|| DslError::UnboundParam {
                    span,
                    name: p.clone(),
                })?;
            Dual::constant(v, w)
        }
        NodeKind::Point(v) => {
            let val = lookup(env, Slot::Point(*v), span)?;
            match slots.iter().position(|s| *s == Slot::Point(*v)) {
                Some(i) => Dual::seeded(val, w, i),
                None => Dual::constant(val, w),
            }
        }
        NodeKind::Grid(r) => {
            let val = lookup(env, Slot::Grid(*r), span)?;
            match slots.iter().position(|s| *s == Slot::Grid(*r)) {
                Some(i) => Dual::seeded(val, w, i),
                None => Dual::constant(val, w),
            }
        }
        NodeKind::Neg(a) => {
            let mut d = eval_dual(a, env, slots)?;
            d.val = -d.val;
            for g in &mut d.grad {
                *g = -*g;
            }
            d
        }
        NodeKind::Bin(op, a, b) => {
            let da = eval_dual(a, env, slots)?;
            let db = eval_dual(b, env, slots)?;
            apply_bin(*op, da, db, span)?
        }
        NodeKind::Call(func, args) => match func {
            Func::Pow => {
                let da = eval_dual(&args[0], env, slots)?;
                let db = eval_dual(&args[1], env, slots)?;
                apply_bin(BinOp::Pow, da, db, span)?
            }
            _ => {
                let d = eval_dual(&args[0], env, slots)?;
                apply_func(*func, d, span)?
            }
        },
    };
    if !out.val.is_finite() {
        return Err(DslError::NonFinite { span });
    }
    Ok(out)
}

fn apply_bin(op: BinOp, a: Dual, b: Dual, span: Span) -> Result<Dual, DslError> {
    let mut out = Dual::constant(0.0, a.grad.len());
    match op {
        BinOp::Add => {
            out.val = a.val + b.val;
            for i in 0..out.grad.len() {
                out.grad[i] = a.grad[i] + b.grad[i];
            }
        }
        BinOp::Sub => {
            out.val = a.val - b.val;
            for i in 0..out.grad.len() {
                out.grad[i] = a.grad[i] - b.grad[i];
            }
        }
        BinOp::Mul => {
            out.val = a.val * b.val;
            for i in 0..out.grad.len() {
                out.grad[i] = a.grad[i] * b.val + a.val * b.grad[i];
            }
        }
        BinOp::Div => {
            if b.val == 0.0 {
                return Err(DslError::DivisionByZero { span });
            }
            out.val = a.val / b.val;
            let inv2 = 1.0 / (b.val * b.val);
            for i in 0..out.grad.len() {
                out.grad[i] = (a.grad[i] * b.val - a.val * b.grad[i]) * inv2;
            }
        }
        BinOp::Pow => {
            return pow_dual(a, b, span);
        }
    }
    Ok(out)
}

fn pow_dual(a: Dual, b: Dual, span: Span) -> Result<Dual, DslError> {
    let w = a.grad.len();
    if b.is_grad_zero() {
        // constant exponent: d(a^p) = p a^(p-1) da
        let p = b.val;
        if a.val == 0.0 && p < 0.0 {
            return Err(DslError::PowDomain {
                span,
                base: a.val,
                exp: p,
            });
        }
        let val = a.val.powf(p);
        if val.is_nan() {
            return Err(DslError::PowDomain {
                span,
                base: a.val,
                exp: p,
            });
        }
        let mut out = Dual::constant(val, w);
        if !a.is_grad_zero() {
            let slope = if p == 0.0 { 0.0 } else { p * a.val.powf(p - 1.0) };
            if !slope.is_finite() {
                return Err(DslError::PowDomain {
                    span,
                    base: a.val,
                    exp: p,
                });
            }
            for i in 0..w {
                out.grad[i] = slope * a.grad[i];
            }
        }
        Ok(out)
    } else {
        // variable exponent requires a positive base: a^b = exp(b ln a)
        if a.val <= 0.0 {
            return Err(DslError::PowDomain {
                span,
                base: a.val,
                exp: b.val,
            });
        }
        let val = (b.val * a.val.ln()).exp();
        let mut out = Dual::constant(val, w);
        let ln_a = a.val.ln();
        for i in 0..w {
            out.grad[i] = val * (b.grad[i] * ln_a + b.val * a.grad[i] / a.val);
        }
        Ok(out)
    }
}

fn apply_func(func: Func, a: Dual, span: Span) -> Result<Dual, DslError> {
    let w = a.grad.len();
    let (val, slope) = match func {
        Func::Exp => {
            let v = a.val.exp();
            (v, v)
        }
        Func::Ln => {
            if a.val <= 0.0 {
                return Err(DslError::LnDomain { span, value: a.val });
            }
            (a.val.ln(), 1.0 / a.val)
        }
        Func::Sin => (a.val.sin(), a.val.cos()),
        Func::Cos => (a.val.cos(), -a.val.sin()),
        Func::Sqrt => {
            if a.val < 0.0 {
                return Err(DslError::SqrtDomain { span, value: a.val });
            }
            if a.val == 0.0 {
                if !a.is_grad_zero() {
                    return Err(DslError::SqrtDomain { span, value: a.val });
                }
                (0.0, 0.0)
            } else {
                let r = a.val.sqrt();
                (r, 0.5 / r)
            }
        }
        Func::Abs => (a.val.abs(), a.val.signum() * if a.val == 0.0 { 0.0 } else { 1.0 }),
        Func::Pow => unreachable!("pow handled as binary"),
    };
    let mut out = Dual::constant(val, w);
    for i in 0..w {
        out.grad[i] = slope * a.grad[i];
    }
    Ok(out)
}
