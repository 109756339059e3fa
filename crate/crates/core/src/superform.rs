//! Tropical superforms of bidegree `(p, q)` on a curve.
//!
//! A form stores one coefficient per edge in that edge's canonical chart;
//! missing edges carry the zero coefficient. Reversing a chart
//! (`y = -l - x`) flips the sign of `(1,0)` and `(0,1)` coefficients and
//! leaves `(0,0)` and `(1,1)` coefficients alone.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::curve::{Side, TropicalCurve};
use crate::function::{EdgeFunction, Tail};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuperformError {
    #[error("wedge of {a} and {b} exceeds bidegree (1,1)")]
    DegreeOverflow { a: Bidegree, b: Bidegree },
    #[error("bidegree mismatch: expected {expected}, got {got}")]
    BidegreeMismatch { expected: Bidegree, got: Bidegree },
    #[error("coefficient on infinite edge `{edge}` has no tail metadata")]
    MissingTail { edge: String },
    #[error("coordinate {x} outside the chart [{lo}, 0] of edge `{edge}`")]
    OutOfRange { edge: String, x: f64, lo: f64 },
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("invalid bidegree `{0}`")]
    InvalidBidegree(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Bidegree {
    pub p: u8,
    pub q: u8,
}

impl Bidegree {
    pub const B00: Bidegree = Bidegree { p: 0, q: 0 };
    pub const B10: Bidegree = Bidegree { p: 1, q: 0 };
    pub const B01: Bidegree = Bidegree { p: 0, q: 1 };
    pub const B11: Bidegree = Bidegree { p: 1, q: 1 };
    pub const ALL: [Bidegree; 4] = [Self::B00, Self::B10, Self::B01, Self::B11];

    pub fn new(p: u8, q: u8) -> Result<Self, SuperformError> {
        if p > 1 || q > 1 {
            return Err(SuperformError::InvalidBidegree(format!("{p}{q}")));
        }
        Ok(Bidegree { p, q })
    }

    pub fn parse(s: &str) -> Result<Self, SuperformError> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')').replace(',', "");
        let b = t.as_bytes();
        if b.len() != 2 {
            return Err(SuperformError::InvalidBidegree(s.to_string()));
        }
        let digit = |c: u8| match c {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(SuperformError::InvalidBidegree(s.to_string())),
        };
        Bidegree::new(digit(b[0])?, digit(b[1])?)
    }

    pub fn degree(self) -> u8 {
        self.p + self.q
    }

    pub fn dual(self) -> Bidegree {
        Bidegree {
            p: 1 - self.p,
            q: 1 - self.q,
        }
    }

    /// Sign picked up by a coefficient under chart reversal.
    pub fn reversal_sign(self) -> f64 {
        if self.degree() == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

#[derive(Debug, Clone)]
pub struct Superform {
    pub bidegree: Bidegree,
    coeffs: BTreeMap<String, EdgeFunction>,
}

/// Result of `d'`, `d''` or the codifferential; `dimension_vanishing` marks
/// outputs that are zero only because the target bidegree does not exist.
#[derive(Debug, Clone)]
pub struct Flagged {
    pub form: Superform,
    pub dimension_vanishing: bool,
}

impl Superform {
    pub fn zero(bidegree: Bidegree) -> Self {
        Superform {
            bidegree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn new(bidegree: Bidegree, coeffs: BTreeMap<String, EdgeFunction>) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, f)| !f.is_zero()).collect();
        Superform { bidegree, coeffs }
    }

    pub fn from_fn(
        curve: &TropicalCurve,
        bidegree: Bidegree,
        mut f: impl FnMut(&crate::curve::Edge) -> EdgeFunction,
    ) -> Self {
        let coeffs = curve.edges().iter().map(|e| (e.id.clone(), f(e))).collect();
        Self::new(bidegree, coeffs)
    }

    /// The same coefficient on every edge.
    pub fn uniform(curve: &TropicalCurve, bidegree: Bidegree, f: EdgeFunction) -> Self {
        Self::from_fn(curve, bidegree, |_| f.clone())
    }

    pub fn with(mut self, edge: &str, f: EdgeFunction) -> Self {
        if f.is_zero() {
            self.coeffs.remove(edge);
        } else {
            self.coeffs.insert(edge.to_string(), f);
        }
        self
    }

    pub fn coeff(&self, edge: &str) -> EdgeFunction {
        self.coeffs.get(edge).cloned().unwrap_or_else(EdgeFunction::zero)
    }

    pub fn coefficients(&self) -> &BTreeMap<String, EdgeFunction> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn map(&self, bidegree: Bidegree, mut f: impl FnMut(&str, &EdgeFunction) -> EdgeFunction) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, v)| (k.clone(), f(k, v))).collect();
        Self::new(bidegree, coeffs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(self.bidegree, |_, f| f.scale(c))
    }

    pub fn add(&self, other: &Superform) -> Result<Superform, SuperformError> {
        if self.bidegree != other.bidegree {
            return Err(SuperformError::BidegreeMismatch {
                expected: self.bidegree,
                got: other.bidegree,
            });
        }
        let mut coeffs = self.coeffs.clone();
        for (k, f) in &other.coeffs {
            let sum = match coeffs.remove(k) {
                Some(g) => g + f.clone(),
                None => f.clone(),
            };
            coeffs.insert(k.clone(), sum);
        }
        Ok(Self::new(self.bidegree, coeffs))
    }

    pub fn sub(&self, other: &Superform) -> Result<Superform, SuperformError> {
        self.add(&other.scale(-1.0))
    }

    /// The same form expressed after reversing `edge`'s chart, matching
    /// [`TropicalCurve::reversed_edge`].
    pub fn reoriented(&self, curve: &TropicalCurve, edge: &str) -> Result<Superform, SuperformError> {
        let e = curve
            .edge(edge)
            .ok_or_else(|| SuperformError::UnknownEdge(edge.to_string()))?;
        let l = e.length.as_f64();
        let s = self.bidegree.reversal_sign();
        let f = self.coeff(edge).reparametrize(-1.0, -l).scale(s);
        Ok(self.clone().with(edge, f))
    }
}

pub fn wedge(a: &Superform, b: &Superform) -> Result<Superform, SuperformError> {
    if a.bidegree.p + b.bidegree.p > 1 || a.bidegree.q + b.bidegree.q > 1 {
        return Err(SuperformError::DegreeOverflow {
            a: a.bidegree,
            b: b.bidegree,
        });
    }
    let bidegree = Bidegree {
        p: a.bidegree.p + b.bidegree.p,
        q: a.bidegree.q + b.bidegree.q,
    };
    // d''x ∧ d'x = -d'x ∧ d''x
    let sign = if a.bidegree.q == 1 && b.bidegree.p == 1 { -1.0 } else { 1.0 };
    let mut coeffs = BTreeMap::new();
    for (k, f) in &a.coeffs {
        if let Some(g) = b.coeffs.get(k) {
            coeffs.insert(k.clone(), (f.clone() * g.clone()).scale(sign));
        }
    }
    Ok(Superform::new(bidegree, coeffs))
}

pub fn d_second(form: &Superform) -> Flagged {
    let b = form.bidegree;
    if b.q == 1 {
        return Flagged {
            form: Superform::zero(b),
            dimension_vanishing: true,
        };
    }
    let sign = if b.p == 1 { -1.0 } else { 1.0 };
    Flagged {
        form: form.map(Bidegree { p: b.p, q: 1 }, |_, f| f.derivative().scale(sign)),
        dimension_vanishing: false,
    }
}

pub fn d_first(form: &Superform) -> Flagged {
    let b = form.bidegree;
    if b.p == 1 {
        return Flagged {
            form: Superform::zero(b),
            dimension_vanishing: true,
        };
    }
    Flagged {
        form: form.map(Bidegree { p: 1, q: b.q }, |_, f| f.derivative()),
        dimension_vanishing: false,
    }
}

pub fn evaluate(form: &Superform, curve: &TropicalCurve, edge: &str, x: f64) -> Result<f64, SuperformError> {
    let e = curve
        .edge(edge)
        .ok_or_else(|| SuperformError::UnknownEdge(edge.to_string()))?;
    let (lo, hi) = e.chart();
    if x.is_nan() || x < lo || x > hi || !x.is_finite() {
        return Err(SuperformError::OutOfRange {
            edge: edge.to_string(),
            x,
            lo,
        });
    }
    Ok(form.coeff(edge).eval(x))
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexCheck {
    pub vertex: String,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfinityCheck {
    pub edge: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub pass: bool,
    pub continuity: Vec<VertexCheck>,
    pub kirchhoff: Vec<VertexCheck>,
    pub at_infinity: Vec<InfinityCheck>,
}

/// Vertex-chart values of the coefficient at every edge-end incident to `v`.
fn end_values(form: &Superform, curve: &TropicalCurve, v: &str) -> Vec<f64> {
    let s = form.bidegree.reversal_sign();
    curve
        .ends_at(v)
        .iter()
        .map(|end| {
            let e = &curve.edges()[end.edge];
            let f = form.coeff(&e.id);
            match end.side {
                Side::Head => f.eval(0.0),
                Side::Tail => s * f.eval(-e.length.as_f64()),
            }
        })
        .collect()
}

pub fn is_regular(form: &Superform, curve: &TropicalCurve, tol: f64) -> Result<RegularityReport, SuperformError> {
    let b = form.bidegree;
    let mut continuity = Vec::new();
    let mut kirchhoff = Vec::new();
    for v in curve.vertices() {
        if curve.degree(v) < 2 {
            continue;
        }
        let vals = end_values(form, curve, v);
        if b == Bidegree::B00 {
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let residual = max - min;
            continuity.push(VertexCheck {
                vertex: v.clone(),
                pass: residual <= tol,
                residual,
            });
        } else if b == Bidegree::B10 {
            let residual = vals.iter().sum::<f64>().abs();
            kirchhoff.push(VertexCheck {
                vertex: v.clone(),
                pass: residual <= tol,
                residual,
            });
        }
    }
    let mut at_infinity = Vec::new();
    for e in curve.edges().iter().filter(|e| e.is_infinite()) {
        let f = form.coeff(&e.id);
        let check = match f.tail() {
            Tail::Unspecified => return Err(SuperformError::MissingTail { edge: e.id.clone() }),
            Tail::Decaying => InfinityCheck {
                edge: e.id.clone(),
                pass: false,
                detail: "decays but is not eventually constant".into(),
            },
            Tail::Polynomial => InfinityCheck {
                edge: e.id.clone(),
                pass: false,
                detail: "non-constant polynomial near -inf".into(),
            },
            Tail::ConstantBelow { bound, value } => {
                let honored = [1.0, 10.0, 100.0].iter().all(|d| {
                    let x = bound.min(0.0) - d;
                    (f.eval(x) - value).abs() <= tol
                });
                let needs_zero = b != Bidegree::B00;
                let pass = honored && (!needs_zero || value.abs() <= tol);
                let detail = if !honored {
                    format!("declared constant {value} below {bound} not honoured")
                } else if pass {
                    format!("constant {value} below {bound}")
                } else {
                    format!("equals {value} near -inf, must vanish")
                };
                InfinityCheck {
                    edge: e.id.clone(),
                    pass,
                    detail,
                }
            }
        };
        at_infinity.push(check);
    }
    let pass = continuity.iter().all(|c| c.pass)
        && kirchhoff.iter().all(|c| c.pass)
        && at_infinity.iter().all(|c| c.pass);
    Ok(RegularityReport {
        pass,
        continuity,
        kirchhoff,
        at_infinity,
    })
}
