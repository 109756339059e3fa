//! The local right inverse `T_U` of `d''`.
//!
//! In a canonical chart every branch has the form `ψ = ±(F(x) − F(x₀))`
//! with `F` a primitive of the coefficient of `ω` and `x₀` the point where
//! `ψ` must vanish: the end `a` or `−inf` of a leg, or the vertex of a star.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::DiscreteError;
use crate::curve::{Side, TropicalCurve};
use crate::function::{EdgeFunction, Tail};
use crate::metric::{gauss_legendre, KahlerForm, QuadratureError, QuadratureRule};
use crate::superform::{Bidegree, Superform};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LocalDomain {
    /// `[−inf, a)` on an infinite edge, `a ≤ 0` in its chart.
    Leg { edge: String, a: f64 },
    /// Points within `radius` of `vertex`.
    Star { vertex: String, radius: f64 },
}

const KNOTS_PER_UNIT: f64 = 64.0;
const TABLE_DEPTH: f64 = 32.0;

/// Piecewise Gauss–Legendre primitive `F(x) = ∫_{lo}^x f` on a fixed
/// grid, extended below `lo` by adaptive quadrature.
struct Primitive {
    f: EdgeFunction,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    nodes: Arc<(Vec<f64>, Vec<f64>)>,
    rule: QuadratureRule,
    breakpoints: Vec<f64>,
    /// `∫_{−inf}^{lo} f`, when the lower tail is requested.
    below: Option<f64>,
}

impl Primitive {
    fn new(f: EdgeFunction, lo: f64, hi: f64, with_tail: bool, rule: &QuadratureRule) -> Result<Self, QuadratureError> {
        let breakpoints = f.breakpoints();
        let n = ((hi - lo) * KNOTS_PER_UNIT).ceil().max(1.0) as usize;
        let mut knots: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        knots.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let nodes = Arc::new(gauss_legendre(12));
        let mut p = Primitive {
            f,
            knots,
            cumulative: Vec::new(),
            nodes,
            rule: rule.clone(),
            breakpoints,
            below: None,
        };
        let mut acc = 0.0;
        p.cumulative.push(0.0);
        for w in p.knots.windows(2) {
            acc += p.panel(w[0], w[1]);
            p.cumulative.push(acc);
        }
        if with_tail {
            let g = p.f.clone();
            let t = match g.tail() {
                Tail::ConstantBelow { bound, value } if value == 0.0 && bound >= lo => 0.0,
                _ => rule.integrate(|x| g.eval(x), f64::NEG_INFINITY, lo, &p.breakpoints)?,
            };
            p.below = Some(t);
        }
        Ok(p)
    }

    fn panel(&self, a: f64, b: f64) -> f64 {
        let (x, w) = &*self.nodes;
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        r * x.iter().zip(w).map(|(t, w)| w * self.f.eval(m + r * t)).sum::<f64>()
    }

    fn lo(&self) -> f64 {
        self.knots[0]
    }

    /// `∫_{lo}^x f`.
    fn eval(&self, x: f64) -> f64 {
        let lo = self.lo();
        if x < lo {
            let g = self.f.clone();
            let v = self
                .rule
                .integrate_finite(|t| g.eval(t), x, lo, &self.breakpoints)
                .unwrap_or(f64::NAN);
            return -v;
        }
        let i = self.knots.partition_point(|&k| k <= x).clamp(1, self.knots.len()) - 1;
        let a = self.knots[i];
        self.cumulative[i] + if x > a { self.panel(a, x) } else { 0.0 }
    }

    /// `∫_{−inf}^x f`.
    fn from_minus_infinity(&self, x: f64) -> f64 {
        let below = self.below.expect("primitive built with its tail");
        if x >= self.lo() {
            return below + self.eval(x);
        }
        let g = self.f.clone();
        self.rule
            .integrate(|t| g.eval(t), f64::NEG_INFINITY, x, &self.breakpoints)
            .unwrap_or(f64::NAN)
    }
}

/// `(p, q)` of the input must be `(0,1)` or `(1,1)`.
fn output_degree(omega: &Superform) -> Result<Bidegree, DiscreteError> {
    match (omega.bidegree.p, omega.bidegree.q) {
        (0, 1) => Ok(Bidegree::B00),
        (1, 1) => Ok(Bidegree::B10),
        _ => Err(DiscreteError::Domain(format!(
            "T_U needs a form with q = 1, got ({}, {})",
            omega.bidegree.p, omega.bidegree.q
        ))),
    }
}

/// `ψ(x) = sign · (F(x) − F(anchor))`, with `F' = w`.
fn branch(prim: Arc<Primitive>, w: EdgeFunction, anchor: Option<f64>, sign: f64, tail: Tail) -> EdgeFunction {
    let f0 = anchor.map(|a| prim.eval(a));
    EdgeFunction::from_closure_with_derivative(
        move |x| match f0 {
            Some(f0) => sign * (prim.eval(x) - f0),
            None => sign * prim.from_minus_infinity(x),
        },
        w.scale(sign),
        tail,
    )
}

pub fn solve_dbar_local(
    curve: &TropicalCurve,
    omega: &Superform,
    domain: &LocalDomain,
    rule: &QuadratureRule,
) -> Result<Superform, DiscreteError> {
    let out = output_degree(omega)?;
    let p = out.p;
    let mut coeffs = BTreeMap::new();
    match domain {
        LocalDomain::Leg { edge, a } => {
            let e = curve
                .edge(edge)
                .ok_or_else(|| DiscreteError::Domain(format!("unknown edge {edge}")))?;
            if !e.is_infinite() || !(*a <= 0.0) {
                return Err(DiscreteError::Domain(format!(
                    "leg domains need an infinite edge and a <= 0 (edge {edge}, a = {a})"
                )));
            }
            let w = omega.coeff(edge);
            if w.is_zero() {
                return Ok(Superform::zero(out));
            }
            let lo = a.min(w.breakpoints().first().copied().unwrap_or(0.0)) - TABLE_DEPTH;
            let wrap = |source| DiscreteError::Divergent {
                edge: edge.clone(),
                source,
            };
            let prim = Arc::new(Primitive::new(w.clone(), lo, 0.0, p == 1, rule).map_err(wrap)?);
            let psi = if p == 0 {
                let tail = match w.tail() {
                    Tail::ConstantBelow { bound, value: 0.0 } => Tail::ConstantBelow {
                        bound,
                        value: prim.eval(bound) - prim.eval(*a),
                    },
                    _ => Tail::Unspecified,
                };
                branch(prim, w, Some(*a), 1.0, tail)
            } else {
                let tail = match w.tail() {
                    t @ Tail::ConstantBelow { value: 0.0, .. } => t,
                    Tail::Decaying => Tail::Decaying,
                    _ => Tail::Unspecified,
                };
                branch(prim, w, None, -1.0, tail)
            };
            coeffs.insert(edge.clone(), psi);
        }
        LocalDomain::Star { vertex, radius } => {
            if !curve.vertices().contains(vertex) {
                return Err(DiscreteError::Domain(format!("unknown vertex {vertex}")));
            }
            let mut per_edge: BTreeMap<usize, Vec<Side>> = BTreeMap::new();
            for end in curve.ends_at(vertex) {
                per_edge.entry(end.edge).or_default().push(end.side);
            }
            for (i, sides) in per_edge {
                let e = &curve.edges()[i];
                let limit = match e.length.finite() {
                    Some(l) if sides.len() == 2 => l / 2.0,
                    Some(l) => l,
                    None => f64::INFINITY,
                };
                if !(*radius > 0.0 && *radius <= limit) {
                    return Err(DiscreteError::Domain(format!(
                        "star radius {radius} does not fit edge {}",
                        e.id
                    )));
                }
                let w = omega.coeff(&e.id);
                if w.is_zero() {
                    continue;
                }
                let (lo, hi) = match e.length.finite() {
                    Some(l) => (-l, 0.0),
                    None => (-(radius + TABLE_DEPTH), 0.0),
                };
                let wrap = |source| DiscreteError::Divergent {
                    edge: e.id.clone(),
                    source,
                };
                let prim = Arc::new(Primitive::new(w.clone(), lo, hi, false, rule).map_err(wrap)?);
                let sign = if p == 0 { 1.0 } else { -1.0 };
                let make = |side: Side| {
                    let x0 = if side == Side::Head { 0.0 } else { lo };
                    branch(prim.clone(), w.clone(), Some(x0), sign, Tail::Unspecified)
                };
                let psi = if sides.len() == 2 {
                    let (head, tail) = (make(Side::Head), make(Side::Tail));
                    let l = -lo;
                    let (dh, dt) = (w.scale(sign), w.scale(sign));
                    let (h2, t2) = (head.clone(), tail.clone());
                    let d = EdgeFunction::from_closure(move |x| if x >= -l / 2.0 { dh.eval(x) } else { dt.eval(x) });
                    EdgeFunction::from_closure_with_derivative(
                        move |x| if x >= -l / 2.0 { h2.eval(x) } else { t2.eval(x) },
                        d,
                        Tail::Unspecified,
                    )
                } else {
                    make(sides[0])
                };
                coeffs.insert(e.id.clone(), psi);
            }
        }
    }
    Ok(Superform::new(out, coeffs))
}

/// `C = √(∫_{−inf}^a (a − t) g(t) dt)`, the operator bound on a leg.
pub fn operator_constant(g: &EdgeFunction, a: f64, rule: &QuadratureRule) -> Result<f64, QuadratureError> {
    let bp = g.breakpoints();
    rule.integrate(|t| (a - t) * g.eval(t), f64::NEG_INFINITY, a, &bp)
        .map(f64::sqrt)
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    /// `max |ψ(x)| / bound(x)` over the sampled grid.
    pub pointwise_ratio: f64,
    /// `‖ψ‖ / (C ‖ω‖)`.
    pub operator_ratio: f64,
    pub omega_norm: f64,
    pub constant: f64,
    pub samples: usize,
}

/// Checks both pointwise estimates and the operator bound for `ψ = T_U ω`
/// on a leg, sampling Gauss–Legendre nodes of unit panels on `[a − depth, a]`.
pub fn leg_estimates(
    omega: &Superform,
    psi: &Superform,
    edge: &str,
    a: f64,
    g: &KahlerForm,
    depth: f64,
    rule: &QuadratureRule,
) -> Result<EstimateReport, DiscreteError> {
    let p = output_degree(omega)?.p;
    let w = omega.coeff(edge);
    let f = psi.coeff(edge);
    let gw = g.weight(edge);
    let mut bp = w.breakpoints();
    bp.extend(gw.breakpoints());
    let wrap = |source| DiscreteError::Divergent {
        edge: edge.to_string(),
        source,
    };
    let omega_sq = if p == 0 {
        rule.integrate(|x| w.eval(x).powi(2), f64::NEG_INFINITY, a, &bp)
    } else {
        rule.integrate(|x| w.eval(x).powi(2) / gw.eval(x), f64::NEG_INFINITY, a, &bp)
    }
    .map_err(wrap)?;
    let omega_norm = omega_sq.sqrt();
    let psi_sq = if p == 0 {
        rule.integrate(|x| f.eval(x).powi(2) * gw.eval(x), f64::NEG_INFINITY, a, &bp)
    } else {
        rule.integrate(|x| f.eval(x).powi(2), f64::NEG_INFINITY, a, &bp)
    }
    .map_err(wrap)?;
    let constant = operator_constant(&gw, a, rule).map_err(wrap)?;

    let g_prim = Primitive::new(gw.clone(), a - depth - TABLE_DEPTH, a, true, rule).map_err(wrap)?;
    let (nodes, _) = gauss_legendre(rule.order);
    let mut ratio = 0.0f64;
    let mut samples = 0;
    let panels = depth.ceil() as usize * 4;
    for k in 0..panels {
        let hi = a - k as f64 * depth / panels as f64;
        let lo = hi - depth / panels as f64;
        for t in &nodes {
            let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
            let bound = if p == 0 {
                (a - x).sqrt() * omega_norm
            } else {
                g_prim.from_minus_infinity(x).sqrt() * omega_norm
            };
            let v = f.eval(x).abs();
            if bound > 0.0 {
                ratio = ratio.max(v / bound);
            } else if v > 0.0 {
                ratio = f64::INFINITY;
            }
            samples += 1;
        }
    }
    let denom = constant * omega_norm;
    Ok(EstimateReport {
        pointwise_ratio: ratio,
        operator_ratio: if denom > 0.0 { psi_sq.sqrt() / denom } else { 0.0 },
        omega_norm,
        constant,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::samples::*;
    use crate::metric::integrate;
    use crate::superform::{d_second, wedge};

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    #[test]
    fn zero_maps_to_zero() {
        let c = tp1();
        let leg = c.edges()[0].id.clone();
        for b in [Bidegree::B01, Bidegree::B11] {
            let psi = solve_dbar_local(&c, &Superform::zero(b), &LocalDomain::Leg { edge: leg.clone(), a: 0.0 }, &rule()).unwrap();
            assert!(psi.is_zero());
        }
    }

    #[test]
    fn indicator_example() {
        let c = tp1();
        let leg = c.edges()[0].id.clone();
        let w = EdgeFunction::one().clamp_below(-1.0, 0.0);
        let omega = Superform::zero(Bidegree::B01).with(&leg, w);
        let psi = solve_dbar_local(&c, &omega, &LocalDomain::Leg { edge: leg.clone(), a: 0.0 }, &rule()).unwrap();
        let f = psi.coeff(&leg);
        for x in [-0.9, -0.5, -0.1, 0.0] {
            assert!((f.eval(x) - x).abs() < 1e-14);
        }
        for x in [-1.0, -3.0, -50.0] {
            assert!((f.eval(x) + 1.0).abs() < 1e-13);
        }
        let g = KahlerForm::standard(&c, &rule()).unwrap();
        let est = leg_estimates(&omega, &psi, &leg, 0.0, &g, 8.0, &rule()).unwrap();
        assert!((est.omega_norm - 1.0).abs() < 1e-12);
        assert!(est.pointwise_ratio <= 1.0 + 1e-8);
        assert!(est.operator_ratio <= 1.0 + 1e-8);
    }

    #[test]
    fn fubini_study_example() {
        let c = tp1();
        let r = rule();
        let g = KahlerForm::standard(&c, &r).unwrap();
        let leg = c.edges()[0].id.clone();
        let omega = Superform::zero(Bidegree::B11).with(&leg, g.weight(&leg));
        let psi = solve_dbar_local(&c, &omega, &LocalDomain::Leg { edge: leg.clone(), a: 0.0 }, &r).unwrap();
        assert_eq!(psi.bidegree, Bidegree::B10);
        let f = psi.coeff(&leg);
        for x in [-40.0f64, -5.0, -1.0, -0.25, 0.0] {
            let e = (2.0 * x).exp();
            assert!((f.eval(x) + e / (1.0 + e)).abs() < 1e-12, "{x}");
        }
        let est = leg_estimates(&omega, &psi, &leg, 0.0, &g, 12.0, &r).unwrap();
        assert!(est.pointwise_ratio <= 1.0 + 1e-8);
        assert!(est.operator_ratio <= 1.0 + 1e-8);
        // d'' T ω = ω, coefficientwise
        let back = d_second(&psi).form;
        for x in [-3.0, -0.5] {
            assert!((back.coeff(&leg).eval(x) - g.weight(&leg).eval(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn star_branches_vanish_at_vertex() {
        let c = theta();
        let r = rule();
        for (b, v) in [(Bidegree::B01, "u"), (Bidegree::B11, "v")] {
            let omega = Superform::uniform(&c, b, EdgeFunction::polynomial(&[1.0, -2.0, 0.5]));
            let psi = solve_dbar_local(&c, &omega, &LocalDomain::Star { vertex: v.into(), radius: 0.2 }, &r).unwrap();
            for e in c.edges() {
                let x0 = if e.head == v { 0.0 } else { -e.length.as_f64() };
                assert!(psi.coeff(&e.id).eval(x0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn star_on_self_loop() {
        let c = loop_curve();
        let r = rule();
        let v = c.vertices()[0].clone();
        let omega = Superform::uniform(&c, Bidegree::B11, EdgeFunction::polynomial(&[1.0, 1.0]));
        let psi = solve_dbar_local(&c, &omega, &LocalDomain::Star { vertex: v, radius: 0.1 }, &r).unwrap();
        let e = c.edges().iter().find(|e| e.is_loop()).unwrap();
        let l = e.length.as_f64();
        let f = psi.coeff(&e.id);
        assert!(f.eval(0.0).abs() < 1e-15 && f.eval(-l).abs() < 1e-15);
        // ψ' = −w on each branch
        assert!((f.derivative().eval(-0.05) + (1.0 - 0.05)).abs() < 1e-14);
    }

    #[test]
    fn weak_identity_with_bump() {
        let c = tp1();
        let r = rule();
        let leg = c.edges()[0].id.clone();
        let w = EdgeFunction::parse("x^2 - 3*x + 1").unwrap().clamp_below(-2.0, 0.0);
        let omega = Superform::zero(Bidegree::B01).with(&leg, w);
        let psi = solve_dbar_local(&c, &omega, &LocalDomain::Leg { edge: leg.clone(), a: -0.5 }, &r).unwrap();
        let bump = EdgeFunction::parse("(x + 3)^2 * (x + 1)^2")
            .unwrap()
            .clamp_below(-3.0, 0.0)
            .clamp_above(-1.0, 0.0);
        let phi = Superform::zero(Bidegree::B10).with(&leg, bump);
        let lhs = integrate(&c, &wedge(&omega, &phi).unwrap(), &r).unwrap();
        let rhs = -integrate(&c, &wedge(&psi, &d_second(&phi).form).unwrap(), &r).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} {rhs}");
    }

    #[test]
    fn rejects_bad_domains() {
        let c = triangle();
        let r = rule();
        let omega = Superform::uniform(&c, Bidegree::B01, EdgeFunction::one());
        let e = c.edges()[0].id.clone();
        assert!(solve_dbar_local(&c, &omega, &LocalDomain::Leg { edge: e, a: 0.0 }, &r).is_err());
        let v = c.vertices()[0].clone();
        assert!(solve_dbar_local(&c, &omega, &LocalDomain::Star { vertex: v.clone(), radius: 2.0 }, &r).is_err());
        let wrong = Superform::uniform(&c, Bidegree::B10, EdgeFunction::one());
        assert!(solve_dbar_local(&c, &wrong, &LocalDomain::Star { vertex: v, radius: 0.1 }, &r).is_err());
    }
}
