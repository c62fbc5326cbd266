//! Scalar fields on boxes of `R^d`: weights, exponents and test functions.

mod expr;

use std::fmt;
use std::sync::Arc;

pub use expr::{parse_field, BinOp, FieldExpr, Func};

use crate::error::{Error, Result};
use crate::geometry::DomainBox;
use crate::scalar::{to_f64_vec, Real};

type Closure<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Clone)]
enum Node<T> {
    Const(T),
    Expr(FieldExpr),
    Closure(Closure<T>),
    Piecewise(Piecewise<T>),
    Unary(Unary<T>, Arc<Node<T>>),
    Binary(BinOp, Arc<Node<T>>, Arc<Node<T>>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Unary<T> {
    PowConst(T),
    Recip,
    Scale(T),
    Offset(T),
    Abs,
}

/// Piecewise constant values on a uniform lattice of cells over the box.
#[derive(Clone, Debug)]
struct Piecewise<T> {
    lo: Vec<T>,
    cell: Vec<T>,
    cells: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> Piecewise<T> {
    fn eval(&self, x: &[T]) -> T {
        let mut flat = 0;
        for i in 0..self.lo.len() {
            let k = ((x[i] - self.lo[i]) / self.cell[i])
                .floor()
                .to_i64()
                .unwrap_or(0)
                .clamp(0, self.cells[i] as i64 - 1) as usize;
            flat = flat * self.cells[i] + k;
        }
        self.values[flat]
    }
}

impl<T: Real> Node<T> {
    fn eval(&self, x: &[T]) -> T {
        match self {
            Node::Const(c) => *c,
            Node::Expr(e) => e.eval(x),
            Node::Closure(f) => f(x),
            Node::Piecewise(p) => p.eval(x),
            Node::Unary(op, a) => {
                let v = a.eval(x);
                match *op {
                    Unary::PowConst(e) => v.powf(e),
                    Unary::Recip => v.recip(),
                    Unary::Scale(c) => c * v,
                    Unary::Offset(c) => v + c,
                    Unary::Abs => v.abs(),
                }
            }
            Node::Binary(op, a, b) => op.apply(a.eval(x), b.eval(x)),
        }
    }

}

impl<T: fmt::Debug> Node<T> {
    fn describe(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Expr(e) => write!(f, "{e}"),
            Node::Closure(_) => write!(f, "<closure>"),
            Node::Piecewise(p) => write!(f, "piecewise{:?}", p.cells),
            Node::Unary(op, a) => {
                match op {
                    Unary::PowConst(_) => write!(f, "pow(")?,
                    Unary::Recip => write!(f, "(1 / ")?,
                    Unary::Scale(c) => write!(f, "({c:?} * ")?,
                    Unary::Offset(c) => write!(f, "({c:?} + ")?,
                    Unary::Abs => write!(f, "abs(")?,
                }
                a.describe(f)?;
                match op {
                    Unary::PowConst(e) => write!(f, ", {e:?})"),
                    _ => write!(f, ")"),
                }
            }
            Node::Binary(op, a, b) => {
                write!(f, "(")?;
                a.describe(f)?;
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, " {sym} ")?;
                b.describe(f)?;
                write!(f, ")")
            }
        }
    }
}

/// Immutable, thread-safe real-valued field on a box.
///
/// Evaluation follows extended-real IEEE semantics: values saturate to `±∞`
/// (or NaN) instead of raising. Points where the field is allowed to vanish
/// or blow up (the origin of `|x|^a`) are listed in `singular_points`; the
/// quadrature grades its cells towards them.
#[derive(Clone)]
pub struct ScalarField<T> {
    node: Arc<Node<T>>,
    domain: DomainBox<T>,
    singular: Vec<Vec<T>>,
}

impl<T: fmt::Debug> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(")?;
        self.node.describe(f)?;
        write!(f, ")")
    }
}

impl<T: fmt::Debug> fmt::Display for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.describe(f)
    }
}

/// Right-hand side of [`pointwise`].
#[derive(Debug, Clone)]
pub enum Operand<T> {
    Field(ScalarField<T>),
    Const(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointwiseOp {
    Mul,
    Div,
    PowConst,
    Recip,
}

/// Pointwise algebra on fields. `Recip` ignores `b`; `PowConst` requires a
/// constant operand.
pub fn pointwise<T: Real>(
    op: PointwiseOp,
    a: &ScalarField<T>,
    b: Operand<T>,
) -> Result<ScalarField<T>> {
    match (op, b) {
        (PointwiseOp::Recip, _) => Ok(a.recip()),
        (PointwiseOp::PowConst, Operand::Const(c)) => Ok(a.pow_const(c)),
        (PointwiseOp::PowConst, Operand::Field(_)) => Err(Error::InvalidArgument(
            "pow_const needs a constant exponent".into(),
        )),
        (PointwiseOp::Mul, Operand::Const(c)) => Ok(a.scale(c)),
        (PointwiseOp::Div, Operand::Const(c)) => Ok(a.scale(c.recip())),
        (PointwiseOp::Mul, Operand::Field(b)) => a.mul(&b),
        (PointwiseOp::Div, Operand::Field(b)) => a.div(&b),
    }
}

impl<T: Real> ScalarField<T> {
    fn from_node(node: Node<T>, domain: DomainBox<T>, singular: Vec<Vec<T>>) -> Self {
        Self {
            node: Arc::new(node),
            domain,
            singular,
        }
    }

    pub fn constant(value: T, domain: &DomainBox<T>) -> Self {
        Self::from_node(Node::Const(value), domain.clone(), Vec::new())
    }

    pub fn from_expr(expr: FieldExpr, domain: &DomainBox<T>) -> Result<Self> {
        if expr.arity() > domain.dim() {
            return Err(Error::UnknownCoordinate {
                name: format!("x{}", expr.arity()),
                dim: domain.dim(),
            });
        }
        let node = match expr.constant_value() {
            Some(c) => Node::Const(T::lit(c)),
            None => Node::Expr(expr),
        };
        Ok(Self::from_node(node, domain.clone(), Vec::new()))
    }

    /// Parses an expression in the field grammar over `domain`.
    pub fn parse(src: &str, domain: &DomainBox<T>) -> Result<Self> {
        Self::from_expr(parse_field(src, domain.dim())?, domain)
    }

    pub fn from_fn(f: impl Fn(&[T]) -> T + Send + Sync + 'static, domain: &DomainBox<T>) -> Self {
        Self::from_node(Node::Closure(Arc::new(f)), domain.clone(), Vec::new())
    }

    /// Piecewise constant field on `cells[i]` equal cells per axis, values in
    /// row-major order (first axis most significant).
    pub fn piecewise(domain: &DomainBox<T>, cells: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let d = domain.dim();
        if cells.len() != d || cells.contains(&0) || cells.iter().product::<usize>() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "piecewise field needs {d} positive cell counts matching {} values",
                values.len()
            )));
        }
        let two = T::lit(2.0);
        let node = Piecewise {
            lo: (0..d).map(|i| domain.lo(i)).collect(),
            cell: cells
                .iter()
                .map(|&c| two * domain.half_width() / T::from_count(c))
                .collect(),
            cells,
            values,
        };
        Ok(Self::from_node(Node::Piecewise(node), domain.clone(), Vec::new()))
    }

    pub fn with_singular_point(mut self, point: Vec<T>) -> Self {
        if !self.singular.contains(&point) {
            self.singular.push(point);
        }
        self
    }

    pub fn with_singular_points(self, points: impl IntoIterator<Item = Vec<T>>) -> Self {
        points.into_iter().fold(self, Self::with_singular_point)
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn singular_points(&self) -> &[Vec<T>] {
        &self.singular
    }

    pub fn is_singular_point(&self, x: &[T]) -> bool {
        self.singular.iter().any(|z| z.as_slice() == x)
    }

    /// Value if the field is a literal constant.
    pub fn as_constant(&self) -> Option<T> {
        match *self.node {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        self.node.eval(x)
    }

    /// `1 / self(x)`, evaluated without a double reciprocal when the field is
    /// itself a reciprocal.
    #[inline]
    pub fn eval_recip(&self, x: &[T]) -> T {
        match &*self.node {
            Node::Unary(Unary::Recip, inner) => inner.eval(x),
            other => other.eval(x).recip(),
        }
    }

    /// Evaluation that flags non-finite values at non-singular points.
    pub fn eval_checked(&self, x: &[T]) -> Result<T> {
        let v = self.eval(x);
        if v.is_finite() || self.is_singular_point(x) {
            Ok(v)
        } else {
            Err(Error::Domain {
                point: to_f64_vec(x),
                value: v.as_f64(),
            })
        }
    }

    fn unary(&self, op: Unary<T>) -> Self {
        Self::from_node(
            Node::Unary(op, self.node.clone()),
            self.domain.clone(),
            self.singular.clone(),
        )
    }

    fn binary(&self, op: BinOp, other: &Self) -> Result<Self> {
        self.domain.ensure_compatible(&other.domain)?;
        let mut singular = self.singular.clone();
        for z in &other.singular {
            if !singular.contains(z) {
                singular.push(z.clone());
            }
        }
        Ok(Self::from_node(
            Node::Binary(op, self.node.clone(), other.node.clone()),
            self.domain.clone(),
            singular,
        ))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binary(BinOp::Mul, other)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.binary(BinOp::Div, other)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(BinOp::Add, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary(BinOp::Sub, other)
    }

    /// `self^a`; constants fold, and `1` is the identity.
    pub fn pow_const(&self, a: T) -> Self {
        if a == T::one() {
            return self.clone();
        }
        match *self.node {
            Node::Const(c) => Self::from_node(Node::Const(c.powf(a)), self.domain.clone(), self.singular.clone()),
            _ => self.unary(Unary::PowConst(a)),
        }
    }

    /// `1 / self`; `recip(recip(f))` is `f` itself.
    pub fn recip(&self) -> Self {
        match &*self.node {
            Node::Unary(Unary::Recip, inner) => Self {
                node: inner.clone(),
                domain: self.domain.clone(),
                singular: self.singular.clone(),
            },
            Node::Const(c) => Self::from_node(Node::Const(c.recip()), self.domain.clone(), self.singular.clone()),
            _ => self.unary(Unary::Recip),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        if c == T::one() {
            return self.clone();
        }
        match *self.node {
            Node::Const(v) => Self::from_node(Node::Const(c * v), self.domain.clone(), self.singular.clone()),
            _ => self.unary(Unary::Scale(c)),
        }
    }

    pub fn offset(&self, c: T) -> Self {
        match *self.node {
            Node::Const(v) => Self::from_node(Node::Const(v + c), self.domain.clone(), self.singular.clone()),
            _ => self.unary(Unary::Offset(c)),
        }
    }

    pub fn abs(&self) -> Self {
        match *self.node {
            Node::Const(v) => Self::from_node(Node::Const(v.abs()), self.domain.clone(), self.singular.clone()),
            _ => self.unary(Unary::Abs),
        }
    }
}
