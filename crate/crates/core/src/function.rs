//! Edge coefficient functions.
//!
//! An [`EdgeFunction`] is a cheap-to-clone tree of symbolic expressions,
//! opaque closures and arithmetic, optionally wrapped with clamps (the
//! function is replaced by a constant beyond a bound) and a decay flag.
//! It carries its own derivative and structural tail metadata describing
//! behaviour near `x = -inf`.

use std::fmt;
use std::sync::Arc;

use crate::expr::{parse_expression, ExprError, Expression};

pub type Closure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Behaviour of a coefficient as `x -> -inf` in its canonical chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// No information: regularity and improper integrals cannot be decided.
    Unspecified,
    /// Integrable decay, but not identically constant near `-inf`.
    Decaying,
    /// A non-constant polynomial: at most polynomial growth.
    Polynomial,
    /// Equal to `value` on `(-inf, bound)`.
    ConstantBelow { bound: f64, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamp {
    pub bound: f64,
    pub value: f64,
}

struct Wrap {
    inner: EdgeFunction,
    below: Option<Clamp>,
    above: Option<Clamp>,
    decaying: bool,
}

enum Node {
    Const(f64),
    Expr(Expression),
    Closure(Closure),
    Explicit {
        value: Closure,
        derivative: EdgeFunction,
        tail: Tail,
    },
    Add(EdgeFunction, EdgeFunction),
    Mul(EdgeFunction, EdgeFunction),
    Div(EdgeFunction, EdgeFunction),
    Neg(EdgeFunction),
    Wrap(Wrap),
}

#[derive(Clone)]
pub struct EdgeFunction(Arc<Node>);

fn central_difference(f: Closure) -> Closure {
    Arc::new(move |x: f64| {
        let h = (1e-8 * x.abs()).max(1e-6);
        (f(x + h) - f(x - h)) / (2.0 * h)
    })
}

impl EdgeFunction {
    fn node(n: Node) -> Self {
        EdgeFunction(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::node(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn x() -> Self {
        Self::from_expression(Expression::X)
    }

    pub fn from_expression(e: Expression) -> Self {
        match e.as_const() {
            Some(c) => Self::constant(c),
            None => Self::node(Node::Expr(e)),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        parse_expression(text).map(Self::from_expression)
    }

    pub fn polynomial(coeffs: &[f64]) -> Self {
        Self::from_expression(Expression::polynomial(coeffs))
    }

    /// Opaque evaluator; its derivative is a central difference.
    pub fn from_closure(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::node(Node::Closure(Arc::new(f)))
    }

    /// Opaque evaluator with a known derivative and tail behaviour.
    pub fn from_closure_with_derivative(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: EdgeFunction,
        tail: Tail,
    ) -> Self {
        Self::node(Node::Explicit {
            value: Arc::new(f),
            derivative,
            tail,
        })
    }

    /// `2 e^{2x} / (1 + e^{2x})^2`, marked as decaying.
    pub fn fubini_study() -> Self {
        let e2x = || Expression::exp(Expression::mul(Expression::num(2.0), Expression::X));
        let expr = Expression::div(
            Expression::mul(Expression::num(2.0), e2x()),
            Expression::pow(Expression::add(Expression::num(1.0), e2x()), 2),
        );
        Self::from_expression(expr).decaying()
    }

    fn wrap(self, below: Option<Clamp>, above: Option<Clamp>, decaying: bool) -> Self {
        if let Node::Const(_) = &*self.0 {
            if below.is_none() && above.is_none() {
                return self;
            }
        }
        Self::node(Node::Wrap(Wrap {
            inner: self,
            below,
            above,
            decaying,
        }))
    }

    /// Declare integrable decay towards `-inf`.
    pub fn decaying(self) -> Self {
        match self.tail() {
            Tail::Decaying | Tail::ConstantBelow { .. } => self,
            Tail::Unspecified | Tail::Polynomial => self.wrap(None, None, true),
        }
    }

    /// Replace the function by `value` on `x < bound`.
    pub fn clamp_below(self, bound: f64, value: f64) -> Self {
        self.wrap(Some(Clamp { bound, value }), None, false)
    }

    /// Replace the function by `value` on `x > bound`.
    pub fn clamp_above(self, bound: f64, value: f64) -> Self {
        self.wrap(None, Some(Clamp { bound, value }), false)
    }

    pub fn as_const(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Underlying symbolic expression when no clamps intervene.
    fn plain_expression(&self) -> Option<Expression> {
        match &*self.0 {
            Node::Const(c) => Some(Expression::num(*c)),
            Node::Expr(e) => Some(e.clone()),
            Node::Wrap(w) if w.below.is_none() && w.above.is_none() => w.inner.plain_expression(),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Expr(e) => e.eval(x),
            Node::Closure(f) => f(x),
            Node::Explicit { value, .. } => value(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Neg(a) => -a.eval(x),
            Node::Wrap(w) => {
                if let Some(c) = w.below {
                    if x < c.bound {
                        return c.value;
                    }
                }
                if let Some(c) = w.above {
                    if x > c.bound {
                        return c.value;
                    }
                }
                w.inner.eval(x)
            }
        }
    }

    pub fn derivative(&self) -> EdgeFunction {
        match &*self.0 {
            Node::Const(_) => Self::zero(),
            Node::Expr(e) => Self::from_expression(e.derivative()),
            Node::Closure(f) => Self::node(Node::Closure(central_difference(f.clone()))),
            Node::Explicit { derivative, .. } => derivative.clone(),
            Node::Add(a, b) => a.derivative() + b.derivative(),
            Node::Mul(a, b) => a.derivative() * b.clone() + a.clone() * b.derivative(),
            Node::Div(a, b) => {
                (a.derivative() * b.clone() - a.clone() * b.derivative()) / (b.clone() * b.clone())
            }
            Node::Neg(a) => -a.derivative(),
            Node::Wrap(w) => {
                let zeroed = |c: Option<Clamp>| c.map(|c| Clamp { bound: c.bound, value: 0.0 });
                let d = w.inner.derivative();
                if w.below.is_none() && w.above.is_none() {
                    return if w.decaying { d.decaying() } else { d };
                }
                d.wrap(zeroed(w.below), zeroed(w.above), w.decaying)
            }
        }
    }

    /// Structural tail metadata.
    pub fn tail(&self) -> Tail {
        use Tail::*;
        match &*self.0 {
            Node::Const(c) => ConstantBelow {
                bound: f64::INFINITY,
                value: *c,
            },
            Node::Expr(e) if is_polynomial(e) => Polynomial,
            Node::Expr(_) | Node::Closure(_) => Unspecified,
            Node::Explicit { tail, .. } => *tail,
            Node::Wrap(w) => match w.below {
                Some(c) => ConstantBelow {
                    bound: c.bound,
                    value: c.value,
                },
                None if w.decaying => Decaying,
                None => w.inner.tail(),
            },
            Node::Neg(a) => match a.tail() {
                ConstantBelow { bound, value } => ConstantBelow {
                    bound,
                    value: -value,
                },
                t => t,
            },
            Node::Add(a, b) => combine_add(a.tail(), b.tail()),
            Node::Mul(a, b) => combine_mul(a.tail(), b.tail()),
            Node::Div(a, b) => combine_div(a.tail(), b.tail()),
        }
    }

    /// Clamp bounds, i.e. possible kinks, for quadrature panel splitting.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match &*self.0 {
            Node::Const(_) | Node::Expr(_) | Node::Closure(_) => {}
            Node::Explicit { derivative, .. } => derivative.collect_breakpoints(out),
            Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_breakpoints(out);
                b.collect_breakpoints(out);
            }
            Node::Neg(a) => a.collect_breakpoints(out),
            Node::Wrap(w) => {
                for c in [w.below, w.above].into_iter().flatten() {
                    if c.bound.is_finite() {
                        out.push(c.bound);
                    }
                }
                w.inner.collect_breakpoints(out);
            }
        }
    }

    /// The function `y -> f(scale * y + shift)`.
    pub fn reparametrize(&self, scale: f64, shift: f64) -> EdgeFunction {
        match &*self.0 {
            Node::Const(c) => Self::constant(*c),
            Node::Expr(e) => Self::from_expression(e.compose_affine(scale, shift)),
            Node::Closure(f) => {
                let f = f.clone();
                Self::from_closure(move |y| f(scale * y + shift))
            }
            Node::Explicit { value, derivative, tail } => {
                let f = value.clone();
                let tail = match *tail {
                    _ if scale <= 0.0 => Tail::Unspecified,
                    Tail::ConstantBelow { bound, value } => Tail::ConstantBelow {
                        bound: (bound - shift) / scale,
                        value,
                    },
                    t => t,
                };
                Self::from_closure_with_derivative(
                    move |y| f(scale * y + shift),
                    derivative.reparametrize(scale, shift).scale(scale),
                    tail,
                )
            }
            Node::Add(a, b) => a.reparametrize(scale, shift) + b.reparametrize(scale, shift),
            Node::Mul(a, b) => a.reparametrize(scale, shift) * b.reparametrize(scale, shift),
            Node::Div(a, b) => a.reparametrize(scale, shift) / b.reparametrize(scale, shift),
            Node::Neg(a) => -a.reparametrize(scale, shift),
            Node::Wrap(w) => {
                let map = |c: Clamp| Clamp {
                    bound: (c.bound - shift) / scale,
                    value: c.value,
                };
                let (below, above) = if scale > 0.0 {
                    (w.below.map(map), w.above.map(map))
                } else {
                    (w.above.map(map), w.below.map(map))
                };
                let inner = w.inner.reparametrize(scale, shift);
                if below.is_none() && above.is_none() {
                    if w.decaying && scale > 0.0 {
                        inner.decaying()
                    } else {
                        inner
                    }
                } else {
                    inner.wrap(below, above, w.decaying && scale > 0.0)
                }
            }
        }
    }

    pub fn scale(&self, c: f64) -> EdgeFunction {
        EdgeFunction::constant(c) * self.clone()
    }

    pub fn recip(&self) -> EdgeFunction {
        EdgeFunction::one() / self.clone()
    }

    fn fold(
        a: &EdgeFunction,
        b: &EdgeFunction,
        op: fn(Expression, Expression) -> Expression,
        tail: Tail,
    ) -> Option<EdgeFunction> {
        let e = op(a.plain_expression()?, b.plain_expression()?);
        let f = Self::from_expression(e);
        Some(match (tail, f.as_const()) {
            (_, Some(_)) => f,
            (Tail::Decaying, None) => f.wrap(None, None, true),
            _ => f,
        })
    }
}

fn combine_add(a: Tail, b: Tail) -> Tail {
    use Tail::*;
    match (a, b) {
        (ConstantBelow { bound: b1, value: v1 }, ConstantBelow { bound: b2, value: v2 }) => {
            ConstantBelow {
                bound: b1.min(b2),
                value: v1 + v2,
            }
        }
        (ConstantBelow { value, .. }, Decaying) | (Decaying, ConstantBelow { value, .. })
            if value == 0.0 =>
        {
            Decaying
        }
        (Decaying, Decaying) => Decaying,
        (Polynomial, Polynomial | Decaying | ConstantBelow { .. })
        | (Decaying | ConstantBelow { .. }, Polynomial) => Polynomial,
        _ => Unspecified,
    }
}

fn combine_mul(a: Tail, b: Tail) -> Tail {
    use Tail::*;
    match (a, b) {
        (ConstantBelow { bound: b1, value: v1 }, ConstantBelow { bound: b2, value: v2 }) => {
            if v1 == 0.0 && v2 != 0.0 {
                ConstantBelow { bound: b1, value: 0.0 }
            } else if v2 == 0.0 && v1 != 0.0 {
                ConstantBelow { bound: b2, value: 0.0 }
            } else if v1 == 0.0 {
                ConstantBelow {
                    bound: b1.max(b2),
                    value: 0.0,
                }
            } else {
                ConstantBelow {
                    bound: b1.min(b2),
                    value: v1 * v2,
                }
            }
        }
        (ConstantBelow { bound, value }, _) | (_, ConstantBelow { bound, value }) if value == 0.0 => {
            ConstantBelow { bound, value: 0.0 }
        }
        (ConstantBelow { .. }, Decaying) | (Decaying, ConstantBelow { .. }) => Decaying,
        (Decaying, Decaying) => Decaying,
        (Polynomial, Decaying) | (Decaying, Polynomial) => Decaying,
        (Polynomial, Polynomial | ConstantBelow { .. }) | (ConstantBelow { .. }, Polynomial) => {
            Polynomial
        }
        _ => Unspecified,
    }
}

fn combine_div(a: Tail, b: Tail) -> Tail {
    use Tail::*;
    match (a, b) {
        (ConstantBelow { bound: b1, value: v1 }, ConstantBelow { bound: b2, value: v2 })
            if v2 != 0.0 =>
        {
            if v1 == 0.0 {
                ConstantBelow { bound: b1, value: 0.0 }
            } else {
                ConstantBelow {
                    bound: b1.min(b2),
                    value: v1 / v2,
                }
            }
        }
        (ConstantBelow { bound, value }, _) if value == 0.0 => ConstantBelow { bound, value: 0.0 },
        (Decaying, ConstantBelow { value, .. }) if value != 0.0 => Decaying,
        (Polynomial, ConstantBelow { value, .. }) if value != 0.0 => Polynomial,
        _ => Unspecified,
    }
}

fn is_polynomial(e: &Expression) -> bool {
    match e {
        Expression::Num(_) | Expression::X => true,
        Expression::Neg(a) => is_polynomial(a),
        Expression::Add(a, b) | Expression::Sub(a, b) | Expression::Mul(a, b) => {
            is_polynomial(a) && is_polynomial(b)
        }
        Expression::Pow(a, n) => *n >= 0 && is_polynomial(a),
        Expression::Div(..) | Expression::Exp(_) => false,
    }
}

impl fmt::Debug for EdgeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Expr(e) => write!(f, "[{e}]"),
            Node::Closure(_) | Node::Explicit { .. } => write!(f, "[closure]"),
            Node::Add(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Mul(a, b) => write!(f, "({a:?} * {b:?})"),
            Node::Div(a, b) => write!(f, "({a:?} / {b:?})"),
            Node::Neg(a) => write!(f, "-{a:?}"),
            Node::Wrap(w) => {
                write!(f, "{:?}", w.inner)?;
                if let Some(c) = w.below {
                    write!(f, "{{x<{}:{}}}", c.bound, c.value)?;
                }
                if let Some(c) = w.above {
                    write!(f, "{{x>{}:{}}}", c.bound, c.value)?;
                }
                if w.decaying {
                    write!(f, "{{decaying}}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::ops::Add for EdgeFunction {
    type Output = EdgeFunction;

    fn add(self, rhs: EdgeFunction) -> EdgeFunction {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let tail = combine_add(self.tail(), rhs.tail());
        EdgeFunction::fold(&self, &rhs, Expression::add, tail)
            .unwrap_or_else(|| EdgeFunction::node(Node::Add(self, rhs)))
    }
}

impl std::ops::Sub for EdgeFunction {
    type Output = EdgeFunction;

    fn sub(self, rhs: EdgeFunction) -> EdgeFunction {
        self + (-rhs)
    }
}

impl std::ops::Mul for EdgeFunction {
    type Output = EdgeFunction;

    fn mul(self, rhs: EdgeFunction) -> EdgeFunction {
        if self.is_zero() || rhs.is_zero() {
            return EdgeFunction::zero();
        }
        if self.as_const() == Some(1.0) {
            return rhs;
        }
        if rhs.as_const() == Some(1.0) {
            return self;
        }
        let tail = combine_mul(self.tail(), rhs.tail());
        EdgeFunction::fold(&self, &rhs, Expression::mul, tail)
            .unwrap_or_else(|| EdgeFunction::node(Node::Mul(self, rhs)))
    }
}

impl std::ops::Div for EdgeFunction {
    type Output = EdgeFunction;

    fn div(self, rhs: EdgeFunction) -> EdgeFunction {
        if self.is_zero() {
            return EdgeFunction::zero();
        }
        if rhs.as_const() == Some(1.0) {
            return self;
        }
        let tail = combine_div(self.tail(), rhs.tail());
        EdgeFunction::fold(&self, &rhs, Expression::div, tail)
            .unwrap_or_else(|| EdgeFunction::node(Node::Div(self, rhs)))
    }
}

impl std::ops::Neg for EdgeFunction {
    type Output = EdgeFunction;

    fn neg(self) -> EdgeFunction {
        match &*self.0 {
            Node::Const(c) => EdgeFunction::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => {
                let tail = self.tail();
                match self.plain_expression() {
                    Some(e) => {
                        let f = EdgeFunction::from_expression(Expression::neg(e));
                        if tail == Tail::Decaying {
                            f.decaying()
                        } else {
                            f
                        }
                    }
                    None => EdgeFunction::node(Node::Neg(self)),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fubini_study_values() {
        let g = EdgeFunction::fubini_study();
        assert_eq!(g.eval(0.0), 0.5);
        assert_eq!(g.tail(), Tail::Decaying);
        // g' = 4 e^{2x}(1 - e^{2x})/(1+e^{2x})^3
        let x: f64 = -0.3;
        let e = (2.0 * x).exp();
        let want = 4.0 * e * (1.0 - e) / (1.0 + e).powi(3);
        assert!((g.derivative().eval(x) - want).abs() < 1e-14);
        assert_eq!(g.derivative().tail(), Tail::Decaying);
    }

    #[test]
    fn clamps_and_tails() {
        let f = EdgeFunction::parse("x^2 + 1").unwrap().clamp_below(-2.0, 5.0);
        assert_eq!(f.eval(-3.0), 5.0);
        assert_eq!(f.eval(-1.0), 2.0);
        assert_eq!(
            f.tail(),
            Tail::ConstantBelow {
                bound: -2.0,
                value: 5.0
            }
        );
        let d = f.derivative();
        assert_eq!(d.eval(-3.0), 0.0);
        assert_eq!(d.eval(-1.0), -2.0);
        assert_eq!(
            d.tail(),
            Tail::ConstantBelow {
                bound: -2.0,
                value: 0.0
            }
        );
        let prod = d.clone() * EdgeFunction::x();
        assert_eq!(
            prod.tail(),
            Tail::ConstantBelow {
                bound: -2.0,
                value: 0.0
            }
        );
        assert_eq!(f.breakpoints(), vec![-2.0]);
        let g = EdgeFunction::fubini_study();
        assert_eq!((g.clone() * EdgeFunction::x()).tail(), Tail::Decaying);
        assert_eq!((g.clone() + EdgeFunction::one()).tail(), Tail::Unspecified);
        assert_eq!((g.clone() / EdgeFunction::constant(2.0)).tail(), Tail::Decaying);
        assert_eq!(EdgeFunction::x().tail(), Tail::Polynomial);
        assert_eq!(EdgeFunction::parse("exp(x)").unwrap().tail(), Tail::Unspecified);
    }

    #[test]
    fn closure_central_difference() {
        let f = EdgeFunction::from_closure(|x| x.sin());
        let d = f.derivative();
        assert!((d.eval(0.4) - 0.4f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn reversal_moves_clamps() {
        let f = EdgeFunction::x().clamp_below(-0.5, -0.5);
        let r = f.reparametrize(-1.0, -1.0);
        for &y in &[-1.0, -0.75, -0.4, 0.0] {
            assert_eq!(r.eval(y), f.eval(-1.0 - y));
        }
        assert_eq!(r.breakpoints(), vec![-0.5]);
    }

    #[test]
    fn symbolic_folding_keeps_trees_flat() {
        let a = EdgeFunction::parse("x^2").unwrap();
        let b = EdgeFunction::parse("3*x").unwrap();
        let s = (a * b).derivative();
        assert!(s.plain_expression().is_some());
        assert!((s.eval(2.0) - 36.0).abs() < 1e-12);
    }
}
