//! Expression tree for the scheme definition language.
//!
//! Expressions are built over numeric literals, named parameters, bare point
//! variables (`x`, `t`, `u`, with `y` accepted as an alias for the second
//! coordinate) and grid references like `u[-1,0]` whose offsets are relative
//! to the stencil reference point.

use std::fmt;

/// A grid quantity: first coordinate, second coordinate, or the dependent
/// variable. The second coordinate prints as `t`; light-cone schemes may
/// write it as `y` in source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GridVar {
    X,
    T,
    U,
}

impl GridVar {
    pub fn symbol(self) -> char {
        match self {
            GridVar::X => 'x',
            GridVar::T => 't',
            GridVar::U => 'u',
        }
    }
}

/// A reference to one quantity at a stencil offset, e.g. `u[-1,0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridRef {
    pub var: GridVar,
    pub di: i32,
    pub dj: i32,
}

impl GridRef {
    pub fn new(var: GridVar, di: i32, dj: i32) -> Self {
        GridRef { var, di, dj }
    }

    pub fn offset(&self) -> (i32, i32) {
        (self.di, self.dj)
    }
}

impl fmt::Display for GridRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{}]", self.var.symbol(), self.di, self.dj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Pow,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

/// 1-based source position of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Num(f64),
    Param(String),
    /// Bare point variable (`x`, `t`/`y`, `u`) in a scalar function of a point.
    Point(GridVar),
    Grid(GridRef),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

/// Structural equality ignores source positions.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Num(a), NodeKind::Num(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Param(a), NodeKind::Param(b)) => a == b,
            (NodeKind::Point(a), NodeKind::Point(b)) => a == b,
            (NodeKind::Grid(a), NodeKind::Grid(b)) => a == b,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a == b,
            (NodeKind::Bin(o, a, b), NodeKind::Bin(p, c, d)) => o == p && a == c && b == d,
            (NodeKind::Call(f, a), NodeKind::Call(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

/// A parsed expression together with its catalogue of distinct grid
/// references, point variables and parameter names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    refs: Vec<GridRef>,
    params: Vec<String>,
    points: Vec<GridVar>,
}

impl Expression {
    pub(crate) fn from_root(root: Node) -> Self {
        let mut refs = Vec::new();
        let mut params = Vec::new();
        let mut points = Vec::new();
        collect(&root, &mut refs, &mut params, &mut points);
        refs.sort();
        refs.dedup();
        params.sort();
        params.dedup();
        points.sort();
        points.dedup();
        Expression {
            root,
            refs,
            params,
            points,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Distinct grid references, in `(var, di, dj)` order.
    pub fn grid_refs(&self) -> &[GridRef] {
        &self.refs
    }

    pub fn param_names(&self) -> &[String] {
        &self.params
    }

    pub fn point_vars(&self) -> &[GridVar] {
        &self.points
    }

    pub fn uses_point_vars(&self) -> bool {
        !self.points.is_empty()
    }

    pub fn uses_var(&self, v: GridVar) -> bool {
        self.points.contains(&v)
    }
}

fn collect(n: &Node, refs: &mut Vec<GridRef>, params: &mut Vec<String>, points: &mut Vec<GridVar>) {
    match &n.kind {
        NodeKind::Num(_) => {}
        NodeKind::Param(p) => params.push(p.clone()),
        NodeKind::Point(v) => points.push(*v),
        NodeKind::Grid(r) => refs.push(*r),
        NodeKind::Neg(a) => collect(a, refs, params, points),
        NodeKind::Bin(_, a, b) => {
            collect(a, refs, params, points);
            collect(b, refs, params, points);
        }
        NodeKind::Call(_, args) => {
            for a in args {
                collect(a, refs, params, points);
            }
        }
    }
}

// Precedence-aware printing; `parse(to_string(e))` is structurally identical
// to `e`.
fn fmt_node(n: &Node, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = match &n.kind {
        NodeKind::Bin(op, _, _) => op.precedence(),
        NodeKind::Neg(_) => 3,
        _ => 5,
    };
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match &n.kind {
        NodeKind::Num(v) => write!(f, "{v}")?,
        NodeKind::Param(p) => write!(f, "{p}")?,
        NodeKind::Point(v) => write!(f, "{}", v.symbol())?,
        NodeKind::Grid(r) => write!(f, "{r}")?,
        NodeKind::Neg(a) => {
            write!(f, "-")?;
            fmt_node(a, 3, f)?;
        }
        NodeKind::Bin(op, a, b) => {
            let p = op.precedence();
            // ^ is right-associative, everything else left-associative.
            let (lp, rp) = match op {
                BinOp::Pow => (p + 1, 3),
                _ => (p, p + 1),
            };
            fmt_node(a, lp, f)?;
            write!(f, "{}", op.symbol())?;
            fmt_node(b, rp, f)?;
        }
        NodeKind::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_node(a, 0, f)?;
            }
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, 0, f)
    }
}
