//! Expression grammar for scalar fields.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? atom
//! atom   := number | coord | func '(' expr (',' expr)* ')' | '(' expr ')'
//! coord  := 'x1' .. 'x9'
//! func   := abs | pow | exp | log | min | max
//! ```
//!
//! There is no `^` operator; powers are written `pow(base, exponent)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    pub(crate) fn apply<T: Real>(self, a: T, b: T) -> T {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Pow,
    Exp,
    Log,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Abs, Func::Pow, Func::Exp, Func::Log, Func::Min, Func::Max];

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Accepted argument counts as `(min, max)`.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Func::Abs | Func::Exp | Func::Log => (1, 1),
            Func::Pow => (2, 2),
            Func::Min | Func::Max => (2, usize::MAX),
        }
    }
}

/// Parsed field expression. Coordinates are stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    Num(f64),
    Coord(usize),
    Neg(Box<FieldExpr>),
    Binary(BinOp, Box<FieldExpr>, Box<FieldExpr>),
    Call(Func, Vec<FieldExpr>),
}

impl FieldExpr {
    /// Direct recursive interpretation at `x`. Saturates to `±∞`/NaN following
    /// IEEE semantics instead of raising.
    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            FieldExpr::Num(v) => T::lit(*v),
            FieldExpr::Coord(i) => x[*i],
            FieldExpr::Neg(e) => -e.eval(x),
            FieldExpr::Binary(op, a, b) => op.apply(a.eval(x), b.eval(x)),
            FieldExpr::Call(func, args) => match func {
                Func::Abs => args[0].eval(x).abs(),
                Func::Exp => args[0].eval(x).exp(),
                Func::Log => args[0].eval(x).ln(),
                Func::Pow => args[0].eval(x).powf(args[1].eval(x)),
                Func::Min => args.iter().map(|a| a.eval(x)).fold(T::infinity(), T::min),
                Func::Max => args
                    .iter()
                    .map(|a| a.eval(x))
                    .fold(T::neg_infinity(), T::max),
            },
        }
    }

    /// Largest coordinate index referenced plus one (0 for constants).
    pub fn arity(&self) -> usize {
        match self {
            FieldExpr::Num(_) => 0,
            FieldExpr::Coord(i) => i + 1,
            FieldExpr::Neg(e) => e.arity(),
            FieldExpr::Binary(_, a, b) => a.arity().max(b.arity()),
            FieldExpr::Call(_, args) => args.iter().map(FieldExpr::arity).max().unwrap_or(0),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            FieldExpr::Num(_) | FieldExpr::Coord(_) => 1,
            FieldExpr::Neg(e) => 1 + e.depth(),
            FieldExpr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            FieldExpr::Call(_, args) => 1 + args.iter().map(FieldExpr::depth).max().unwrap_or(0),
        }
    }

    /// Constant value if the expression contains no coordinates.
    pub fn constant_value(&self) -> Option<f64> {
        (self.arity() == 0).then(|| self.eval::<f64>(&[]))
    }
}

/// Prints with explicit parentheses around every binary operation so that
/// `parse_field(&e.to_string(), d)` reproduces `e` structurally.
impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Num(v) => write!(f, "{v:?}"),
            FieldExpr::Coord(i) => write!(f, "x{}", i + 1),
            FieldExpr::Neg(e) => write!(f, "-({e})"),
            FieldExpr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            FieldExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses `src` as a field on `R^dim`.
pub fn parse_field(src: &str, dim: usize) -> Result<FieldExpr> {
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            pos: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        src: src.as_bytes(),
        pos: 0,
        dim,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<FieldExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = FieldExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<FieldExpr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = FieldExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<FieldExpr> {
        if self.eat(b'-') {
            Ok(FieldExpr::Neg(Box::new(self.atom()?)))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<FieldExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<FieldExpr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(FieldExpr::Num)
            .map_err(|_| Error::Syntax {
                pos: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<FieldExpr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            self.expect(b')')?;
            let (lo, hi) = func.arity();
            if args.len() < lo || args.len() > hi {
                return Err(Error::Syntax {
                    pos: start,
                    message: format!("`{name}` takes {lo}..{hi} arguments, got {}", args.len()),
                });
            }
            return Ok(FieldExpr::Call(func, args));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if rest.len() == 1 && (b'1'..=b'9').contains(&rest.as_bytes()[0]) {
                let k = (rest.as_bytes()[0] - b'0') as usize;
                if k > self.dim {
                    return Err(Error::UnknownCoordinate {
                        name: name.to_string(),
                        dim: self.dim,
                    });
                }
                return Ok(FieldExpr::Coord(k - 1));
            }
        }
        self.pos = start;
        Err(self.error(&format!("unknown identifier `{name}`")))
    }
}
