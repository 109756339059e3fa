//! Edge-function expression grammar.
//!
//! A deliberately small language over one variable `x`: real literals,
//! `+ - * /`, integer powers `^`, unary minus, `exp(..)` and parentheses.
//! Precedence, tightest first: `^` (right associative), unary `-`,
//! `* /`, `+ -` (left associative).
//!
//! Every tree has an exact symbolic derivative, which is what the
//! superform calculus relies on for `d'` and `d''`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Num(f64),
    X,
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Pow(Box<Expression>, i32),
    Exp(Box<Expression>),
}

pub fn parse_expression(text: &str) -> Result<Expression, ExprError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        len: text.len(),
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ExprError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(expr)
}

impl FromStr for Expression {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

// Smart constructors fold constants and drop neutral elements so that
// repeated differentiation does not blow the tree up.
impl Expression {
    pub fn num(v: f64) -> Self {
        Expression::Num(v)
    }

    pub fn x() -> Self {
        Expression::X
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expression::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(a: Expression) -> Self {
        match a {
            Expression::Num(v) => Expression::Num(-v),
            Expression::Neg(inner) => *inner,
            other => Expression::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expression, b: Expression) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(u), Some(v)) => Expression::Num(u + v),
            (Some(u), None) if u == 0.0 => b,
            (None, Some(v)) if v == 0.0 => a,
            _ => Expression::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expression, b: Expression) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(u), Some(v)) => Expression::Num(u - v),
            (Some(u), None) if u == 0.0 => Expression::neg(b),
            (None, Some(v)) if v == 0.0 => a,
            _ => Expression::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expression, b: Expression) -> Self {
        if a.is_zero() || b.is_zero() {
            return Expression::Num(0.0);
        }
        match (a.as_const(), b.as_const()) {
            (Some(u), Some(v)) => Expression::Num(u * v),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            (Some(u), None) if u == -1.0 => Expression::neg(b),
            (None, Some(v)) if v == -1.0 => Expression::neg(a),
            _ => Expression::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expression, b: Expression) -> Self {
        if a.is_zero() {
            return Expression::Num(0.0);
        }
        match (a.as_const(), b.as_const()) {
            (Some(u), Some(v)) if v != 0.0 => Expression::Num(u / v),
            _ if b.is_one() => a,
            _ => Expression::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expression, n: i32) -> Self {
        match (n, a.as_const()) {
            (0, _) => Expression::Num(1.0),
            (1, _) => a,
            (_, Some(v)) => Expression::Num(v.powi(n)),
            _ => Expression::Pow(Box::new(a), n),
        }
    }

    pub fn exp(a: Expression) -> Self {
        match a.as_const() {
            Some(v) => Expression::Num(v.exp()),
            None => Expression::Exp(Box::new(a)),
        }
    }

    /// Polynomial `c[0] + c[1] x + c[2] x^2 + ...`, skipping zero terms.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        coeffs
            .iter()
            .enumerate()
            .fold(Expression::Num(0.0), |acc, (k, &c)| {
                let term = Expression::mul(Expression::Num(c), Expression::pow(Expression::X, k as i32));
                Expression::add(acc, term)
            })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expression::Num(v) => *v,
            Expression::X => x,
            Expression::Neg(a) => -a.eval(x),
            Expression::Add(a, b) => a.eval(x) + b.eval(x),
            Expression::Sub(a, b) => a.eval(x) - b.eval(x),
            Expression::Mul(a, b) => a.eval(x) * b.eval(x),
            Expression::Div(a, b) => a.eval(x) / b.eval(x),
            Expression::Pow(a, n) => a.eval(x).powi(*n),
            Expression::Exp(a) => a.eval(x).exp(),
        }
    }

    pub fn derivative(&self) -> Expression {
        match self {
            Expression::Num(_) => Expression::Num(0.0),
            Expression::X => Expression::Num(1.0),
            Expression::Neg(a) => Expression::neg(a.derivative()),
            Expression::Add(a, b) => Expression::add(a.derivative(), b.derivative()),
            Expression::Sub(a, b) => Expression::sub(a.derivative(), b.derivative()),
            Expression::Mul(a, b) => Expression::add(
                Expression::mul(a.derivative(), (**b).clone()),
                Expression::mul((**a).clone(), b.derivative()),
            ),
            Expression::Div(a, b) => Expression::div(
                Expression::sub(
                    Expression::mul(a.derivative(), (**b).clone()),
                    Expression::mul((**a).clone(), b.derivative()),
                ),
                Expression::pow((**b).clone(), 2),
            ),
            Expression::Pow(a, n) => Expression::mul(
                Expression::mul(
                    Expression::Num(*n as f64),
                    Expression::pow((**a).clone(), n - 1),
                ),
                a.derivative(),
            ),
            Expression::Exp(a) => Expression::mul(Expression::exp((**a).clone()), a.derivative()),
        }
    }

    /// Substitute `x -> scale * x + shift`.
    pub fn compose_affine(&self, scale: f64, shift: f64) -> Expression {
        match self {
            Expression::Num(v) => Expression::Num(*v),
            Expression::X => Expression::add(
                Expression::mul(Expression::Num(scale), Expression::X),
                Expression::Num(shift),
            ),
            Expression::Neg(a) => Expression::neg(a.compose_affine(scale, shift)),
            Expression::Add(a, b) => Expression::add(
                a.compose_affine(scale, shift),
                b.compose_affine(scale, shift),
            ),
            Expression::Sub(a, b) => Expression::sub(
                a.compose_affine(scale, shift),
                b.compose_affine(scale, shift),
            ),
            Expression::Mul(a, b) => Expression::mul(
                a.compose_affine(scale, shift),
                b.compose_affine(scale, shift),
            ),
            Expression::Div(a, b) => Expression::div(
                a.compose_affine(scale, shift),
                b.compose_affine(scale, shift),
            ),
            Expression::Pow(a, n) => Expression::pow(a.compose_affine(scale, shift), *n),
            Expression::Exp(a) => Expression::exp(a.compose_affine(scale, shift)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) | Expression::Div(..) => 2,
            Expression::Neg(_) => 3,
            Expression::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            Expression::Pow(..) => 4,
            Expression::Num(_) | Expression::X | Expression::Exp(_) => 5,
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expression, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expression::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expression::X => write!(f, "x"),
            Expression::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 4)
            }
            Expression::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Expression::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            Expression::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            Expression::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "/")?;
                child(f, b, 3)
            }
            Expression::Pow(a, n) => {
                child(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expression::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part only when followed by digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v = lit.parse::<f64>().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push(Token {
                    kind: TokenKind::Num(v),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", text[start..].chars().next().unwrap_or('?')),
                })
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.len)
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek_kind() {
                Some(TokenKind::Plus) => {
                    self.next();
                    lhs = Expression::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(TokenKind::Minus) => {
                    self.next();
                    lhs = Expression::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek_kind() {
                Some(TokenKind::Star) => {
                    self.next();
                    lhs = Expression::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(TokenKind::Slash) => {
                    self.next();
                    lhs = Expression::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        if let Some(TokenKind::Minus) = self.peek_kind() {
            self.next();
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ExprError> {
        let base = self.primary()?;
        if let Some(TokenKind::Caret) = self.peek_kind() {
            self.next();
            let offset = self.here();
            let exponent = self.exponent()?;
            let n = integer_value(&exponent).ok_or_else(|| ExprError::Syntax {
                offset,
                message: "exponent must be an integer constant".into(),
            })?;
            return Ok(Expression::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expression, ExprError> {
        if let Some(TokenKind::Minus) = self.peek_kind() {
            self.next();
            return Ok(Expression::Neg(Box::new(self.exponent()?)));
        }
        self.power()
    }

    fn primary(&mut self) -> Result<Expression, ExprError> {
        let offset = self.here();
        let Some(tok) = self.next() else {
            return Err(ExprError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            });
        };
        match tok.kind {
            TokenKind::Num(v) => Ok(Expression::Num(v)),
            TokenKind::Ident(name) => match name.as_str() {
                "x" => Ok(Expression::X),
                "exp" => {
                    self.expect_lparen()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expression::Exp(Box::new(arg)))
                }
                _ => Err(ExprError::UnknownIdentifier {
                    offset: tok.offset,
                    name,
                }),
            },
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            other => Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn expect_lparen(&mut self) -> Result<(), ExprError> {
        let offset = self.here();
        match self.next() {
            Some(Token {
                kind: TokenKind::LParen,
                ..
            }) => Ok(()),
            _ => Err(ExprError::Syntax {
                offset,
                message: "expected `(`".into(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let offset = self.here();
        match self.next() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => Ok(()),
            _ => Err(ExprError::Syntax {
                offset,
                message: "expected `)`".into(),
            }),
        }
    }
}

fn integer_value(e: &Expression) -> Option<i32> {
    fn constant(e: &Expression) -> Option<f64> {
        match e {
            Expression::Num(v) => Some(*v),
            Expression::Neg(a) => constant(a).map(|v| -v),
            Expression::Pow(a, n) => constant(a).map(|v| v.powi(*n)),
            _ => None,
        }
    }
    let v = constant(e)?;
    if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
        Some(v as i32)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fubini_study_weight_at_origin() {
        let e = parse_expression("2*exp(2*x)/(1+exp(2*x))^2").unwrap();
        assert_eq!(e.eval(0.0), 0.5);
    }

    #[test]
    fn square_derivative() {
        let e = parse_expression("x^2").unwrap();
        assert_eq!(e.derivative().eval(3.0), 6.0);
    }

    #[test]
    fn unary_plus_rejected_with_offset() {
        let err = parse_expression("2*+x").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 2, .. }), "{err:?}");
    }

    #[test]
    fn precedence_and_associativity() {
        let check = |s: &str, x: f64, want: f64| {
            let got = parse_expression(s).unwrap().eval(x);
            assert!((got - want).abs() < 1e-15, "{s}: {got} vs {want}");
        };
        check("-x^2", 3.0, -9.0);
        check("2^3^2", 0.0, 512.0);
        check("8/4/2", 0.0, 1.0);
        check("1-2-3", 0.0, -4.0);
        check("2*-x", 4.0, -8.0);
        check("x^-2", 2.0, 0.25);
        check("1.5e1 + 2", 0.0, 17.0);
        check("(x+1)*(x-1)", 3.0, 8.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_expression("sin(x)"),
            Err(ExprError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("x^1.5"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("(x+1"),
            Err(ExprError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("x x"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(parse_expression("").is_err());
        assert!(parse_expression("exp x").is_err());
    }

    #[test]
    fn derivative_rules() {
        let e = parse_expression("exp(2*x)/(1+x^2)").unwrap();
        let d = e.derivative();
        let x: f64 = 0.7;
        let want = (2.0 * (2.0 * x).exp() * (1.0 + x * x) - (2.0 * x).exp() * 2.0 * x)
            / (1.0 + x * x).powi(2);
        assert!((d.eval(x) - want).abs() < 1e-13);
    }

    #[test]
    fn affine_composition() {
        let e = parse_expression("x^3 - exp(x)").unwrap();
        let r = e.compose_affine(-1.0, -2.0);
        for &y in &[-1.5, -0.25, 0.0] {
            assert!((r.eval(y) - e.eval(-y - 2.0)).abs() < 1e-13);
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expression> {
        let leaf = prop_oneof![
            (-4.0f64..4.0).prop_map(Expression::Num),
            Just(Expression::X),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expression::Neg(Box::new(a))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expression::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::Div(
                    Box::new(a),
                    Box::new(Expression::Add(
                        Box::new(Expression::Num(5.0)),
                        Box::new(Expression::Pow(Box::new(b), 2))
                    ))
                )),
                (inner.clone(), -3i32..4).prop_map(|(a, n)| Expression::Pow(Box::new(a), n)),
                inner.prop_map(|a| Expression::Exp(Box::new(Expression::Div(
                    Box::new(a),
                    Box::new(Expression::Num(8.0))
                )))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse_expression(&printed).unwrap();
            for k in 0..100 {
                let x = -2.0 + 4.0 * (k as f64) / 99.0;
                let (a, b) = (e.eval(x), back.eval(x));
                if a.is_finite() {
                    prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{printed}: {a} vs {b}");
                } else {
                    prop_assert!(!b.is_finite() || a.is_nan());
                }
            }
        }
    }
}
