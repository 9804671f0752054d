use super::ast::Span;
use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let span = Span { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | '[' | ']' | ',' => {
                chars.next();
                col += 1;
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    _ => Tok::Comma,
                };
                out.push(Token { tok, span });
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                // optional exponent
                if let Some(&e) = chars.peek() {
                    if e == 'e' || e == 'E' {
                        let mut tail = String::new();
                        tail.push(e);
                        let mut look = chars.clone();
                        look.next();
                        if let Some(&sgn) = look.peek() {
                            if sgn == '+' || sgn == '-' {
                                tail.push(sgn);
                                look.next();
                            }
                        }
                        let mut digits = 0;
                        while let Some(&d) = look.peek() {
                            if d.is_ascii_digit() {
                                tail.push(d);
                                look.next();
                                digits += 1;
                            } else {
                                break;
                            }
                        }
                        if digits > 0 {
                            col += tail.chars().count() as u32;
                            s.push_str(&tail);
                            chars = look;
                        }
                    }
                }
                let v: f64 = s.parse().map_err(|_| DslError::Syntax {
                    span,
                    found: format!("`{s}`"),
                    expected: vec!["number".into()],
                })?;
                out.push(Token {
                    tok: Tok::Num(v),
                    span,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    span,
                });
            }
            other => {
                return Err(DslError::Syntax {
                    span,
                    found: format!("`{other}`"),
                    expected: vec!["token".into()],
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}
