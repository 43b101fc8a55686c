//! Second-order jets: value, gradient and packed symmetric Hessian of a chart function.
//!
//! Every jet carries an `order` (2, 1 or 0) saying how many of its derivative
//! levels are exact. Arithmetic takes the minimum order of its operands and
//! [`Jet2::partial`] lowers it by one, so nested derivatives never silently
//! read stale data.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 8;
const HLEN: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline]
fn hidx(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    b * (b + 1) / 2 + a
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("chart dimension {0} exceeds the supported maximum {MAX_DIM}")]
    TooLarge(usize),
    #[error("division by a jet with zero value")]
    DivByZero,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("singular system: pivot magnitude {pivot:.3e} below 1e-12")]
    Singular { pivot: f64 },
    #[error("{0}")]
    Eval(String),
}

pub type JetResult<T> = Result<T, JetError>;

/// Value, gradient and Hessian of a scalar function at one point.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: [f64; MAX_DIM],
    hess: [f64; HLEN],
    dim: u8,
    order: u8,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dim();
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &&self.grad[..d])
            .field("order", &self.order)
            .finish()
    }
}

impl Default for Jet2 {
    fn default() -> Self {
        Jet2::constant(0.0)
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Jet2::constant(v)
    }
}

impl Jet2 {
    /// Exact constant; broadcasts against jets of any dimension.
    pub fn constant(v: f64) -> Self {
        Jet2 { value: v, grad: [0.0; MAX_DIM], hess: [0.0; HLEN], dim: 0, order: 2 }
    }

    pub fn zero() -> Self {
        Jet2::constant(0.0)
    }

    /// The coordinate function `x^i` of a `dim`-dimensional chart, valued `v`.
    pub fn variable(dim: usize, i: usize, v: f64) -> Self {
        assert!(dim <= MAX_DIM && i < dim, "variable {i} out of range for dim {dim}");
        let mut j = Jet2::constant(v);
        j.dim = dim as u8;
        j.grad[i] = 1.0;
        j
    }

    /// Coordinate jets of the point `x`.
    pub fn variables(x: &[f64]) -> JetResult<Vec<Jet2>> {
        if x.len() > MAX_DIM {
            return Err(JetError::TooLarge(x.len()));
        }
        Ok(x.iter().enumerate().map(|(i, &v)| Jet2::variable(x.len(), i, v)).collect())
    }

    /// Build from value, gradient and full row-major Hessian (symmetrised).
    pub fn from_parts(value: f64, grad: &[f64], hess: &[f64]) -> Self {
        let d = grad.len();
        assert!(d <= MAX_DIM && hess.len() == d * d);
        let mut j = Jet2::constant(value);
        j.dim = d as u8;
        j.grad[..d].copy_from_slice(grad);
        for b in 0..d {
            for a in 0..=b {
                j.hess[hidx(a, b)] = 0.5 * (hess[a * d + b] + hess[b * d + a]);
            }
        }
        j
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }
    #[inline]
    pub fn order(&self) -> u8 {
        self.order
    }
    #[inline]
    pub fn grad(&self, i: usize) -> f64 {
        self.grad[i]
    }
    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[hidx(i, j)]
    }
    pub fn gradient(&self) -> Vec<f64> {
        self.grad[..self.dim()].to_vec()
    }
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.hess(i, j)).collect()).collect()
    }

    /// Drop derivative levels above `order`.
    pub fn truncate(mut self, order: u8) -> Self {
        if order < self.order {
            self.order = order;
            self.clear_above_order();
        }
        self
    }

    fn clear_above_order(&mut self) {
        if self.order < 2 {
            self.hess = [0.0; HLEN];
        }
        if self.order < 1 {
            self.grad = [0.0; MAX_DIM];
        }
    }

    /// `∂_i` of the jet; the result is exact to one order less.
    /// Differentiating an order-0 jet yields NaN so misuse is visible.
    pub fn partial(&self, i: usize) -> Jet2 {
        let mut out = Jet2::constant(0.0);
        out.dim = self.dim;
        if self.order == 0 {
            out.value = f64::NAN;
            out.order = 0;
            return out;
        }
        if i >= self.dim() {
            out.order = self.order - 1;
            return out;
        }
        let d = self.dim();
        out.value = self.grad[i];
        for j in 0..d {
            out.grad[j] = self.hess(i, j);
        }
        out.order = self.order - 1;
        out.clear_above_order();
        out
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        let mut o = *self;
        o.value *= s;
        let d = self.dim();
        for g in &mut o.grad[..d] {
            *g *= s;
        }
        for h in &mut o.hess[..d * (d + 1) / 2] {
            *h *= s;
        }
        o
    }

    /// Apply a scalar function with derivatives `f0, f1, f2` at the value.
    fn lift(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let d = self.dim();
        let mut o = Jet2::constant(f0);
        o.dim = self.dim;
        o.order = self.order;
        for i in 0..d {
            o.grad[i] = f1 * self.grad[i];
        }
        for b in 0..d {
            for a in 0..=b {
                let k = hidx(a, b);
                o.hess[k] = f1 * self.hess[k] + f2 * self.grad[a] * self.grad[b];
            }
        }
        o
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.lift(e, e, e)
    }
    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.lift(s, c, -s)
    }
    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.lift(c, -s, -c)
    }
    pub fn ln(&self) -> JetResult<Jet2> {
        let v = self.value;
        if v <= 0.0 {
            return Err(JetError::Domain { func: "ln", value: v });
        }
        Ok(self.lift(v.ln(), 1.0 / v, -1.0 / (v * v)))
    }
    pub fn sqrt(&self) -> JetResult<Jet2> {
        let v = self.value;
        if v <= 0.0 {
            return Err(JetError::Domain { func: "sqrt", value: v });
        }
        let s = v.sqrt();
        Ok(self.lift(s, 0.5 / s, -0.25 / (s * v)))
    }
    pub fn recip(&self) -> JetResult<Jet2> {
        let v = self.value;
        if v == 0.0 {
            return Err(JetError::DivByZero);
        }
        Ok(self.lift(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }
    pub fn checked_div(&self, rhs: &Jet2) -> JetResult<Jet2> {
        Ok(*self * rhs.recip()?)
    }
    /// Integer power; negative exponents need a nonzero value.
    pub fn powi(&self, n: i32) -> JetResult<Jet2> {
        let v = self.value;
        if n < 0 && v == 0.0 {
            return Err(JetError::DivByZero);
        }
        let nf = n as f64;
        let f1 = if n == 0 { 0.0 } else { nf * v.powi(n - 1) };
        let f2 = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * v.powi(n - 2) };
        Ok(self.lift(v.powi(n), f1, f2))
    }
    /// Real power on positive values.
    pub fn powf(&self, p: f64) -> JetResult<Jet2> {
        let v = self.value;
        if v <= 0.0 {
            return Err(JetError::Domain { func: "powf", value: v });
        }
        Ok(self.lift(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0)))
    }

    /// Chain rule: `self` is a jet in chart coordinates `x`, `inner[i]` are
    /// jets of `x^i` as functions of new coordinates `y`. Returns the jet in `y`.
    pub fn compose(&self, inner: &[Jet2]) -> Jet2 {
        let n = inner.len();
        let d = inner.iter().map(Jet2::dim).max().unwrap_or(0);
        let mut o = Jet2::constant(self.value);
        o.dim = d as u8;
        o.order = inner.iter().map(Jet2::order).min().unwrap_or(2).min(self.order);
        if self.dim == 0 {
            return o;
        }
        for (i, p) in inner.iter().enumerate().take(n) {
            let t = self.grad[i];
            if t != 0.0 {
                for m in 0..d {
                    o.grad[m] += t * p.grad[m];
                }
                for k in 0..d * (d + 1) / 2 {
                    o.hess[k] += t * p.hess[k];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let t = self.hess(i, j);
                if t == 0.0 {
                    continue;
                }
                let (pi, pj) = (&inner[i], &inner[j]);
                for b in 0..d {
                    for a in 0..=b {
                        o.hess[hidx(a, b)] += t * pi.grad[a] * pj.grad[b];
                    }
                }
            }
        }
        o
    }

    /// Max-abs distance over the exact parts shared by both jets.
    pub fn max_diff(&self, other: &Jet2) -> f64 {
        let ord = self.order.min(other.order);
        let d = self.dim().max(other.dim());
        let mut m = (self.value - other.value).abs();
        if ord >= 1 {
            for i in 0..d {
                m = m.max((self.grad[i] - other.grad[i]).abs());
            }
        }
        if ord >= 2 {
            for k in 0..d * (d + 1) / 2 {
                m = m.max((self.hess[k] - other.hess[k]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, rhs: Jet2) -> Jet2 {
        self += rhs;
        self
    }
}

impl AddAssign for Jet2 {
    #[inline]
    fn add_assign(&mut self, rhs: Jet2) {
        let d = self.dim().max(rhs.dim());
        self.value += rhs.value;
        for i in 0..d {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..d * (d + 1) / 2 {
            self.hess[k] += rhs.hess[k];
        }
        self.dim = d as u8;
        self.order = self.order.min(rhs.order);
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Jet2) {
        let d = self.dim().max(rhs.dim());
        self.value -= rhs.value;
        for i in 0..d {
            self.grad[i] -= rhs.grad[i];
        }
        for k in 0..d * (d + 1) / 2 {
            self.hess[k] -= rhs.hess[k];
        }
        self.dim = d as u8;
        self.order = self.order.min(rhs.order);
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        let d = self.dim().max(rhs.dim());
        let (a, b) = (&self, &rhs);
        let mut o = Jet2::constant(a.value * b.value);
        o.dim = d as u8;
        o.order = a.order.min(b.order);
        for i in 0..d {
            o.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
        }
        for j in 0..d {
            for i in 0..=j {
                let k = hidx(i, j);
                o.hess[k] = a.value * b.hess[k]
                    + b.value * a.hess[k]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
            }
        }
        o
    }
}

impl MulAssign for Jet2 {
    fn mul_assign(&mut self, rhs: Jet2) {
        *self = *self * rhs;
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: f64) -> Jet2 {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: f64) -> Jet2 {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl std::iter::Sum for Jet2 {
    fn sum<I: Iterator<Item = Jet2>>(iter: I) -> Jet2 {
        iter.fold(Jet2::zero(), |a, b| a + b)
    }
}

/// Expression trees over chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sqrt(Box<Expr>),
    Powi(Box<Expr>, i32),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }
    pub fn x(i: usize) -> Expr {
        Expr::Coord(i)
    }
    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }
    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }
    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }
    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }
    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }
    pub fn powi(self, n: i32) -> Expr {
        Expr::Powi(Box::new(self), n)
    }

    /// Largest coordinate index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Coord(i) => i + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
            Expr::Neg(a)
            | Expr::Exp(a)
            | Expr::Ln(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Sqrt(a)
            | Expr::Powi(a, _) => a.arity(),
        }
    }

    pub fn eval(&self, x: &[Jet2]) -> JetResult<Jet2> {
        Ok(match self {
            Expr::Const(v) => Jet2::constant(*v),
            Expr::Coord(i) => *x
                .get(*i)
                .ok_or(JetError::DimMismatch { expected: i + 1, got: x.len() })?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => a.eval(x)?.checked_div(&b.eval(x)?)?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Exp(a) => a.eval(x)?.exp(),
            Expr::Ln(a) => a.eval(x)?.ln()?,
            Expr::Sin(a) => a.eval(x)?.sin(),
            Expr::Cos(a) => a.eval(x)?.cos(),
            Expr::Sqrt(a) => a.eval(x)?.sqrt()?,
            Expr::Powi(a, n) => a.eval(x)?.powi(*n)?,
        })
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    fn sum(a: Expr, b: Expr) -> Expr {
        match (a.is_zero(), b.is_zero()) {
            (true, _) => b,
            (_, true) => a,
            _ => a + b,
        }
    }

    fn prod(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::c(0.0);
        }
        match (&a, &b) {
            (Expr::Const(v), _) if *v == 1.0 => b,
            (_, Expr::Const(v)) if *v == 1.0 => a,
            _ => a * b,
        }
    }

    /// Symbolic partial derivative `∂_i`.
    pub fn diff(&self, i: usize) -> Expr {
        let d = |e: &Expr| e.diff(i);
        match self {
            Expr::Const(_) => Expr::c(0.0),
            Expr::Coord(j) => Expr::c(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => Expr::sum(d(a), d(b)),
            Expr::Sub(a, b) => {
                let (da, db) = (d(a), d(b));
                if db.is_zero() {
                    da
                } else {
                    Expr::sum(da, -db)
                }
            }
            Expr::Mul(a, b) => Expr::sum(Expr::prod(d(a), (**b).clone()), Expr::prod((**a).clone(), d(b))),
            Expr::Div(a, b) => {
                let num = Expr::prod(d(a), (**b).clone()) - Expr::prod((**a).clone(), d(b));
                num / (**b).clone().powi(2)
            }
            Expr::Neg(a) => {
                let da = d(a);
                if da.is_zero() {
                    da
                } else {
                    -da
                }
            }
            Expr::Exp(a) => Expr::prod(d(a), self.clone()),
            Expr::Ln(a) => Expr::prod(d(a), Expr::c(1.0) / (**a).clone()),
            Expr::Sin(a) => Expr::prod(d(a), (**a).clone().cos()),
            Expr::Cos(a) => Expr::prod(d(a), -(**a).clone().sin()),
            Expr::Sqrt(a) => Expr::prod(d(a), Expr::c(0.5) / self.clone()),
            Expr::Powi(a, n) => {
                if *n == 0 {
                    return Expr::c(0.0);
                }
                Expr::prod(d(a), Expr::prod(Expr::c(*n as f64), (**a).clone().powi(n - 1)))
            }
        }
    }

    /// Random polynomial of total degree `deg` in `dim` variables, coefficients in [-1, 1].
    pub fn random_poly<R: Rng>(dim: usize, deg: usize, rng: &mut R) -> Expr {
        let mut e = Expr::c(rng.gen_range(-1.0..1.0));
        for m in monomials(dim, deg) {
            if m.is_empty() {
                continue;
            }
            let coef = rng.gen_range(-1.0..1.0);
            let term = m.into_iter().fold(Expr::c(coef), |acc, i| acc * Expr::x(i));
            e = e + term;
        }
        e
    }
}

/// Exponent multisets (as sorted index lists) of all monomials of degree ≤ `deg`.
fn monomials(dim: usize, deg: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.last().copied().unwrap_or(0);
            for i in start..dim {
                let mut k = m.clone();
                k.push(i);
                next.push(k);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

macro_rules! expr_binop {
    ($tr:ident, $f:ident, $var:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr {
                Expr::$var(Box::new(self), Box::new(rhs))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $f(self, rhs: f64) -> Expr {
                Expr::$var(Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }
    };
}
expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

type ScalarFn = dyn Fn(&[Jet2]) -> JetResult<Jet2> + Send + Sync;
type TensorFn = dyn Fn(&[f64]) -> JetResult<Vec<Jet2>> + Send + Sync;

/// A real function on a chart, evaluable to second order.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    f: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(dim={})", self.dim)
    }
}

impl ScalarField {
    pub fn from_expr(dim: usize, e: Expr) -> Self {
        ScalarField { dim, f: Arc::new(move |x| e.eval(x)) }
    }
    /// A closure acting on coordinate jets.
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[Jet2]) -> JetResult<Jet2> + Send + Sync + 'static,
    {
        ScalarField { dim, f: Arc::new(f) }
    }
    pub fn constant(dim: usize, v: f64) -> Self {
        ScalarField::from_fn(dim, move |_| Ok(Jet2::constant(v)))
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn eval_jets(&self, x: &[Jet2]) -> JetResult<Jet2> {
        if x.len() != self.dim {
            return Err(JetError::DimMismatch { expected: self.dim, got: x.len() });
        }
        (self.f)(x)
    }
    pub fn value(&self, x: &[f64]) -> JetResult<f64> {
        let js: Vec<Jet2> = x.iter().map(|&v| Jet2::constant(v)).collect();
        Ok(self.eval_jets(&js)?.value())
    }
}

/// Value, gradient and Hessian of `f` at `x` by forward-mode differentiation.
pub fn jet_eval(f: &ScalarField, x: &[f64]) -> JetResult<Jet2> {
    if x.len() != f.dim() {
        return Err(JetError::DimMismatch { expected: f.dim(), got: x.len() });
    }
    f.eval_jets(&Jet2::variables(x)?)
}

/// Central-difference directional derivative.
pub fn fd_oracle(f: &ScalarField, x: &[f64], v: &[f64], h: f64) -> JetResult<f64> {
    let shift = |s: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    Ok((f.value(&shift(h))? - f.value(&shift(-h))?) / (2.0 * h))
}

/// Hessian-vector product `H v` by mixed central second differences.
pub fn fd_hvp(f: &ScalarField, x: &[f64], v: &[f64], h: f64) -> JetResult<Vec<f64>> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let at = |s: f64, t: f64| -> JetResult<f64> {
                let p: Vec<f64> = (0..n)
                    .map(|i| x[i] + s * v[i] + if i == k { t } else { 0.0 })
                    .collect();
                f.value(&p)
            };
            Ok((at(h, h)? - at(h, -h)? - at(-h, h)? + at(-h, -h)?) / (4.0 * h * h))
        })
        .collect()
}

/// An array-valued chart function. The closure receives a point and returns
/// order-2 jets in the chart coordinates, flattened row-major by `shape`.
#[derive(Clone)]
pub struct TensorField {
    shape: Vec<usize>,
    in_dim: usize,
    f: Arc<TensorFn>,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorField(shape={:?}, in_dim={})", self.shape, self.in_dim)
    }
}

impl TensorField {
    pub fn from_point_fn<F>(shape: Vec<usize>, in_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> JetResult<Vec<Jet2>> + Send + Sync + 'static,
    {
        TensorField { shape, in_dim, f: Arc::new(f) }
    }

    /// Closure over coordinate jets; it may only use jet arithmetic.
    pub fn from_jet_fn<F>(shape: Vec<usize>, in_dim: usize, f: F) -> Self
    where
        F: Fn(&[Jet2]) -> JetResult<Vec<Jet2>> + Send + Sync + 'static,
    {
        TensorField::from_point_fn(shape, in_dim, move |x| f(&Jet2::variables(x)?))
    }

    pub fn from_exprs(shape: Vec<usize>, in_dim: usize, es: Vec<Expr>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), es.len(), "shape/len mismatch");
        TensorField::from_jet_fn(shape, in_dim, move |x| es.iter().map(|e| e.eval(x)).collect())
    }

    pub fn from_scalars(shape: Vec<usize>, in_dim: usize, fs: Vec<ScalarField>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), fs.len(), "shape/len mismatch");
        TensorField::from_jet_fn(shape, in_dim, move |x| fs.iter().map(|f| f.eval_jets(x)).collect())
    }

    pub fn constant(shape: Vec<usize>, in_dim: usize, vals: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), vals.len(), "shape/len mismatch");
        TensorField::from_point_fn(shape, in_dim, move |_| {
            Ok(vals.iter().map(|&v| Jet2::constant(v)).collect())
        })
    }

    pub fn zeros(shape: Vec<usize>, in_dim: usize) -> Self {
        let len = shape.iter().product();
        TensorField::constant(shape, in_dim, vec![0.0; len])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    /// Jets in the chart coordinates at `x`.
    pub fn eval_at(&self, x: &[f64]) -> JetResult<Vec<Jet2>> {
        if x.len() != self.in_dim {
            return Err(JetError::DimMismatch { expected: self.in_dim, got: x.len() });
        }
        let out = (self.f)(x)?;
        if out.len() != self.len() {
            return Err(JetError::DimMismatch { expected: self.len(), got: out.len() });
        }
        Ok(out)
    }

    /// Evaluate at jets `x(y)` and return jets in `y` by the chain rule.
    pub fn eval_jets(&self, x: &[Jet2]) -> JetResult<Vec<Jet2>> {
        let p: Vec<f64> = x.iter().map(Jet2::value).collect();
        Ok(self.eval_at(&p)?.iter().map(|t| t.compose(x)).collect())
    }
}

/// Solve `A v = b` over jets by Gaussian elimination with partial pivoting
/// on value parts. `a` is row-major `n × n`.
pub fn jet_linear_solve(a: &[Jet2], b: &[Jet2]) -> JetResult<Vec<Jet2>> {
    jet_solve_many(a, b, 1)
}

/// Solve `A X = B` with `B` row-major `n × m`.
pub fn jet_solve_many(a: &[Jet2], b: &[Jet2], m: usize) -> JetResult<Vec<Jet2>> {
    let n = if m == 0 { 0 } else { b.len() / m };
    if a.len() != n * n || b.len() != n * m {
        return Err(JetError::DimMismatch { expected: n * n, got: a.len() });
    }
    let w = n + m;
    let mut aug: Vec<Jet2> = Vec::with_capacity(n * w);
    for i in 0..n {
        aug.extend_from_slice(&a[i * n..(i + 1) * n]);
        aug.extend_from_slice(&b[i * m..(i + 1) * m]);
    }
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, aug[r * w + col].value().abs()))
            .fold((col, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if !(mag >= 1e-12) {
            return Err(JetError::Singular { pivot: mag.max(0.0) });
        }
        if piv != col {
            for k in 0..w {
                aug.swap(piv * w + k, col * w + k);
            }
        }
        let inv = aug[col * w + col].recip()?;
        for k in col..w {
            aug[col * w + k] = aug[col * w + k] * inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[r * w + col];
            if f.value() == 0.0 && f.dim() == 0 {
                continue;
            }
            for k in col..w {
                let t = aug[col * w + k];
                aug[r * w + k] -= f * t;
            }
        }
    }
    let mut x = Vec::with_capacity(n * m);
    for i in 0..n {
        x.extend_from_slice(&aug[i * w + n..i * w + w]);
    }
    Ok(x)
}

/// Inverse of a row-major `n × n` jet matrix.
pub fn jet_inverse(a: &[Jet2], n: usize) -> JetResult<Vec<Jet2>> {
    let id: Vec<Jet2> = (0..n * n)
        .map(|k| Jet2::constant(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    jet_solve_many(a, &id, n)
}

/// Product of row-major jet matrices `(p × q)(q × s)`.
pub fn jet_matmul(a: &[Jet2], b: &[Jet2], p: usize, q: usize, s: usize) -> Vec<Jet2> {
    let mut out = vec![Jet2::zero(); p * s];
    for i in 0..p {
        for k in 0..q {
            let aik = a[i * q + k];
            for j in 0..s {
                out[i * s + j] += aik * b[k * s + j];
            }
        }
    }
    out
}

/// Determinant of a value matrix by LU with partial pivoting.
pub fn det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x * n + c].abs().total_cmp(&m[y * n + c].abs()))
            .unwrap_or(c);
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
            }
            d = -d;
        }
        d *= m[c * n + c];
        for r in c + 1..n {
            let f = m[r * n + c] / m[c * n + c];
            for k in c..n {
                m[r * n + k] -= f * m[c * n + k];
            }
        }
    }
    d
}

pub fn values(js: &[Jet2]) -> Vec<f64> {
    js.iter().map(Jet2::value).collect()
}

pub fn max_abs(js: &[Jet2]) -> f64 {
    js.iter().fold(0.0, |m, j| m.max(j.value().abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_of_coordinates() {
        let f = ScalarField::from_expr(2, Expr::x(0) * Expr::x(1));
        let j = jet_eval(&f, &[2.0, 3.0]).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.gradient(), vec![3.0, 2.0]);
        assert_eq!(j.hessian(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn constant_has_no_derivatives() {
        let f = ScalarField::constant(3, 4.5);
        let j = jet_eval(&f, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(j.value(), 4.5);
        assert!(j.gradient().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet2::variable(1, 0, 3.0);
        let y = x * x;
        assert_eq!((y.value(), y.grad(0), y.hess(0, 0)), (9.0, 6.0, 2.0));
    }

    #[test]
    fn quotient_by_self_is_one() {
        let x = Jet2::variables(&[0.3, -1.2]).unwrap();
        let f = (x[0] * x[1]).exp() + x[0].sin();
        let q = f.checked_div(&f).unwrap();
        assert_relative_eq!(q.value(), 1.0, epsilon = 1e-15);
        for i in 0..2 {
            assert!(q.grad(i).abs() < 1e-14);
            for k in 0..2 {
                assert!(q.hess(i, k).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sin_exp_against_differences() {
        let f = ScalarField::from_expr(2, Expr::x(0).sin() * Expr::x(1).exp());
        let x = [0.7, -0.2];
        let j = jet_eval(&f, &x).unwrap();
        for (i, v) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
            let fd = fd_oracle(&f, &x, v, 1e-5).unwrap();
            assert!((fd - j.grad(i)).abs() / (1.0 + j.grad(i).abs()) < 1e-6);
        }
    }

    #[test]
    fn sqrt_of_shifted_norm() {
        let e = (Expr::c(1.0) + (0..7).fold(Expr::c(0.0), |a, i| a + Expr::x(i).powi(2))).sqrt();
        let f = ScalarField::from_expr(7, e);
        let mut x = [0.0; 7];
        x[0] = 1.0;
        let j = jet_eval(&f, &x).unwrap();
        let v = [0.3, -0.1, 0.2, 0.0, 0.5, -0.4, 0.1];
        let ad: f64 = (0..7).map(|i| j.grad(i) * v[i]).sum();
        let fd = fd_oracle(&f, &x, &v, 1e-5).unwrap();
        assert!((ad - fd).abs() / (1.0 + ad.abs()) < 1e-6);
    }

    #[test]
    fn fd_oracle_basics() {
        let sq = ScalarField::from_expr(1, Expr::x(0).powi(2));
        assert!((fd_oracle(&sq, &[1.0], &[1.0], 1e-5).unwrap() - 2.0).abs() < 1e-9);
        let c = ScalarField::constant(1, 2.0);
        assert_eq!(fd_oracle(&c, &[1.0], &[1.0], 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let z = Jet2::constant(0.0);
        assert_eq!(z.recip(), Err(JetError::DivByZero));
        assert!(matches!(Jet2::constant(-1.0).ln(), Err(JetError::Domain { .. })));
        assert!(matches!(Jet2::constant(-1.0).sqrt(), Err(JetError::Domain { .. })));
        assert!(z.powi(-2).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = ScalarField::from_expr(2, Expr::x(0));
        assert!(matches!(jet_eval(&f, &[1.0]), Err(JetError::DimMismatch { .. })));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let x = Jet2::variables(&[0.4, 1.1]).unwrap();
        let id = [1.0, 0.0, 0.0, 1.0].map(Jet2::constant);
        let v = jet_linear_solve(&id, &x).unwrap();
        assert_eq!(v[0].max_diff(&x[0]), 0.0);
        let two = [Jet2::constant(2.0)];
        let h = jet_linear_solve(&two, &x[..1]).unwrap();
        assert_relative_eq!(h[0].value(), 0.2);
        assert_relative_eq!(h[0].grad(0), 0.5);
    }

    #[test]
    fn singular_system_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0].map(Jet2::constant);
        let b = [1.0, 1.0].map(Jet2::constant);
        assert!(matches!(jet_linear_solve(&a, &b), Err(JetError::Singular { .. })));
    }

    #[test]
    fn solve_residual_on_random_jet_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let x = Jet2::variables(&[0.2, -0.3, 0.5]).unwrap();
        let es: Vec<Expr> = (0..n * n + n).map(|_| Expr::random_poly(3, 2, &mut rng)).collect();
        let mut a: Vec<Jet2> = es[..n * n].iter().map(|e| e.eval(&x).unwrap()).collect();
        for i in 0..n {
            a[i * n + i] += Jet2::constant(4.0);
        }
        let b: Vec<Jet2> = es[n * n..].iter().map(|e| e.eval(&x).unwrap()).collect();
        let v = jet_linear_solve(&a, &b).unwrap();
        let av = jet_matmul(&a, &v, n, n, 1);
        for i in 0..n {
            assert!(av[i].max_diff(&b[i]) < 1e-10);
        }
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        let y = Jet2::variables(&[0.3, 0.8]).unwrap();
        let inner = [y[0] * y[1], y[0].sin() + y[1]];
        let f = |x: &[Jet2]| (x[0] * x[1]).exp() + x[0] * x[0];
        let direct = f(&inner);
        let xv = Jet2::variables(&values(&inner)).unwrap();
        let composed = f(&xv).compose(&inner);
        assert!(direct.max_diff(&composed) < 1e-13);
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet2::variables(&[1.5, 2.0]).unwrap();
        let f = x[0] * x[0] * x[1];
        let d = f.partial(0);
        assert_eq!(d.order(), 1);
        assert_relative_eq!(d.value(), 6.0);
        assert_relative_eq!(d.grad(0), 4.0);
        assert_relative_eq!(d.grad(1), 3.0);
        assert!(d.partial(1).partial(0).value().is_nan());
    }

    #[test]
    fn determinant_small() {
        assert_relative_eq!(det(&[2.0, 1.0, 1.0, 3.0], 2), 5.0);
    }

    #[test]
    fn symbolic_diff_matches_jets() {
        let e = (Expr::x(0) * Expr::x(1)).sin() / (Expr::x(0).powi(2) + 2.0) + Expr::x(1).exp().sqrt();
        let x = [0.3, -0.7];
        let v = Jet2::variables(&x).unwrap();
        let j = e.eval(&v).unwrap();
        for i in 0..2 {
            let d = e.diff(i).eval(&v).unwrap();
            assert!((d.value() - j.grad(i)).abs() < 1e-12);
            for k in 0..2 {
                assert!((d.grad(k) - j.hess(i, k)).abs() < 1e-10);
            }
        }
    }
}
