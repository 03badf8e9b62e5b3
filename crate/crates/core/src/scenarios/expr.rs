//! Field-expression DSL.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum   := prod (('+' | '-') prod)*
//! prod  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' int)?            int may carry a sign or parentheses
//! atom  := number | x | y | z | param | func '(' sum ')' | '(' sum ')'
//! ```

use std::fmt;

use crate::autodiff::{Dual, Jet4, Scalar};
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 0, 1, 2 for x, y, z.
    Var(u8),
    /// Index into the declared parameter list.
    Param(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval<S: Scalar>(&self, p: &[S; 3], params: &[f64]) -> S {
        match self {
            Expr::Num(v) => S::from_f64(*v),
            Expr::Var(i) => p[*i as usize],
            Expr::Param(i) => S::from_f64(params[*i]),
            Expr::Neg(a) => -a.eval(p, params),
            Expr::Add(a, b) => a.eval(p, params) + b.eval(p, params),
            Expr::Sub(a, b) => a.eval(p, params) - b.eval(p, params),
            Expr::Mul(a, b) => a.eval(p, params) * b.eval(p, params),
            Expr::Div(a, b) => a.eval(p, params) / b.eval(p, params),
            Expr::Pow(a, n) => a.eval(p, params).powi(*n),
            Expr::Call(f, a) => {
                let v = a.eval(p, params);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn write(&self, out: &mut fmt::Formatter<'_>, names: &[String], min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            write!(out, "(")?;
        }
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(out, "-{:?}", -v)?
                } else {
                    write!(out, "{v:?}")?
                }
            }
            Expr::Var(i) => write!(out, "{}", ["x", "y", "z"][*i as usize])?,
            Expr::Param(i) => write!(out, "{}", names[*i])?,
            Expr::Neg(a) => {
                write!(out, "-")?;
                a.write(out, names, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(out, names, 1)?;
                write!(out, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write(out, names, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write(out, names, 2)?;
                write!(out, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write(out, names, 3)?;
            }
            Expr::Pow(a, n) => {
                a.write(out, names, 5)?;
                write!(out, "^{n}")?;
            }
            Expr::Call(f, a) => {
                write!(out, "{}(", f.name())?;
                a.write(out, names, 0)?;
                write!(out, ")")?;
            }
        }
        if paren {
            write!(out, ")")?;
        }
        Ok(())
    }
}

/// A parsed expression with its source text and the parameter names it
/// may reference.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    pub ast: Expr,
    pub source: String,
    pub params: Vec<String>,
}

impl FieldExpr {
    pub fn eval(&self, p: &Vec3, values: &[f64]) -> f64 {
        self.ast.eval(&[p.x, p.y, p.z], values)
    }

    pub fn eval_dual(&self, p: &Vec3, values: &[f64]) -> Dual {
        let v = [Dual::var(p.x, 0), Dual::var(p.y, 1), Dual::var(p.z, 2)];
        self.ast.eval(&v, values)
    }

    pub fn eval_jet(&self, p: &[Jet4; 3], values: &[f64]) -> Jet4 {
        self.ast.eval(p, values)
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.write(f, &self.params, 0)
    }
}

/// Parse `text`; identifiers other than x, y, z and the function names must
/// appear in `params`.
pub fn parse_field_expression(text: &str, params: &[String]) -> Result<FieldExpr> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, params };
    let ast = p.sum()?;
    let (tok, at) = p.peek();
    if tok != Tok::End {
        return Err(syntax(at, format!("unexpected {tok:?}")));
    }
    Ok(FieldExpr { ast, source: text.to_string(), params: params.to_vec() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn syntax(offset: usize, message: String) -> Error {
    Error::SyntaxError { offset, message }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v = s
                    .parse::<f64>()
                    .map_err(|_| syntax(start, format!("bad number '{s}'")))?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => return Err(syntax(i, format!("unexpected character '{}'", c as char))),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    params: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> (Tok, usize) {
        self.tokens[self.pos].clone()
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.peek();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let (tok, at) = self.bump();
        if tok == want {
            Ok(())
        } else {
            Err(syntax(at, format!("expected {want:?}, found {tok:?}")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.prod()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.prod()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.prod()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn prod(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().0 == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().0 != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let n = self.integer()?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn integer(&mut self) -> Result<i32> {
        let (tok, at) = self.bump();
        match tok {
            Tok::LParen => {
                let n = self.integer()?;
                self.expect(Tok::RParen)?;
                Ok(n)
            }
            Tok::Minus => Ok(-self.integer()?),
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Ok(v as i32),
            other => Err(syntax(at, format!("exponent must be an integer, found {other:?}"))),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.sum()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var(0)),
                    "y" => Ok(Expr::Var(1)),
                    "z" => Ok(Expr::Var(2)),
                    _ => match self.params.iter().position(|p| *p == name) {
                        Some(i) => Ok(Expr::Param(i)),
                        None => Err(Error::UnknownIdentifier { name, offset: at }),
                    },
                }
            }
            other => Err(syntax(at, format!("unexpected {other:?}"))),
        }
    }
}
