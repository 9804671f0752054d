use super::ast::{BinOp, Expression, Func, GridRef, GridVar, Node, NodeKind, Span};
use super::lexer::{tokenize, Tok, Token};
use super::DslError;

/// Parse expression text into an [`Expression`].
///
/// Grammar (highest binding last): `+ -` < `* /` < unary `-` < `^`
/// (right-associative) < atoms. Grid references are written `u[i,j]` with
/// integer offsets; `y` is accepted as an alias for the second coordinate.
pub fn parse_expression(text: &str) -> Result<Expression, DslError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let root = p.add()?;
    p.expect_eof()?;
    Ok(Expression::from_root(root))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.tokens[self.pos].tok.clone();
        let s = self.tokens[self.pos].span;
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        (t, s)
    }

    fn err(&self, expected: &[&str]) -> DslError {
        DslError::Syntax {
            span: self.span(),
            found: self.peek().describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_eof(&self) -> Result<(), DslError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.err(&["operator", "end of input"]))
        }
    }

    fn add(&mut self) -> Result<Node, DslError> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let (_, span) = self.bump();
            let rhs = self.mul()?;
            lhs = Node {
                kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn mul(&mut self) -> Result<Node, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let (_, span) = self.bump();
            let rhs = self.unary()?;
            lhs = Node {
                kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, DslError> {
        if matches!(self.peek(), Tok::Minus) {
            let (_, span) = self.bump();
            let inner = self.unary()?;
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, DslError> {
        let base = self.atom()?;
        if matches!(self.peek(), Tok::Caret) {
            let (_, span) = self.bump();
            // the exponent may itself carry a unary minus: `x^-2`
            let exponent = self.unary()?;
            return Ok(Node {
                kind: NodeKind::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, DslError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                let (_, span) = self.bump();
                Ok(Node {
                    kind: NodeKind::Num(v),
                    span,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.add()?;
                if !matches!(self.peek(), Tok::RParen) {
                    return Err(self.err(&["`)`"]));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (_, span) = self.bump();
                match self.peek() {
                    Tok::LParen => self.call(&name, span),
                    Tok::LBracket => self.grid_ref(&name, span),
                    _ => Ok(self.ident_atom(&name, span)),
                }
            }
            _ => Err(self.err(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn ident_atom(&self, name: &str, span: Span) -> Node {
        let kind = match name {
            "x" => NodeKind::Point(GridVar::X),
            "t" | "y" => NodeKind::Point(GridVar::T),
            "u" => NodeKind::Point(GridVar::U),
            _ => NodeKind::Param(name.to_string()),
        };
        Node { kind, span }
    }

    fn call(&mut self, name: &str, span: Span) -> Result<Node, DslError> {
        let func = Func::from_name(name).ok_or_else(|| DslError::UnknownFunction {
            span,
            name: name.to_string(),
        })?;
        self.bump(); // (
        let mut args = vec![self.add()?];
        while matches!(self.peek(), Tok::Comma) {
            self.bump();
            args.push(self.add()?);
        }
        if !matches!(self.peek(), Tok::RParen) {
            return Err(self.err(&["`,`", "`)`"]));
        }
        self.bump();
        if args.len() != func.arity() {
            return Err(DslError::FunctionArity {
                span,
                name: func.name().to_string(),
                expected: func.arity(),
                got: args.len(),
            });
        }
        Ok(Node {
            kind: NodeKind::Call(func, args),
            span,
        })
    }

    fn grid_ref(&mut self, name: &str, span: Span) -> Result<Node, DslError> {
        let var = match name {
            "x" => GridVar::X,
            "t" | "y" => GridVar::T,
            "u" => GridVar::U,
            _ => {
                return Err(DslError::MalformedGridRef {
                    span,
                    detail: format!("`{name}` is not a grid variable (expected x, t, y or u)"),
                });
            }
        };
        self.bump(); // [
        let di = self.grid_index()?;
        if !matches!(self.peek(), Tok::Comma) {
            return Err(self.err(&["`,`"]));
        }
        self.bump();
        let dj = self.grid_index()?;
        if !matches!(self.peek(), Tok::RBracket) {
            return Err(self.err(&["`]`"]));
        }
        self.bump();
        Ok(Node {
            kind: NodeKind::Grid(GridRef::new(var, di, dj)),
            span,
        })
    }

    fn grid_index(&mut self) -> Result<i32, DslError> {
        let neg = if matches!(self.peek(), Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let span = self.span();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                if v.fract() != 0.0 || v < 0.0 || v > i32::MAX as f64 {
                    return Err(DslError::MalformedGridRef {
                        span,
                        detail: format!("offset `{v}` is not a small integer"),
                    });
                }
                let i = v as i32;
                Ok(if neg { -i } else { i })
            }
            _ => Err(self.err(&["integer"])),
        }
    }
}

/// Parse a string of the form `x[1,0]` into a single grid reference.
pub fn parse_grid_ref(text: &str) -> Result<GridRef, DslError> {
    let expr = parse_expression(text)?;
    match &expr.root().kind {
        NodeKind::Grid(r) => Ok(*r),
        _ => Err(DslError::MalformedGridRef {
            span: expr.root().span,
            detail: format!("`{text}` is not a grid reference"),
        }),
    }
}
