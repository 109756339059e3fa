//! Uniform meshes on edge charts, with infinite edges truncated.

use serde::Serialize;

use super::DiscreteError;
use crate::curve::TropicalCurve;
use crate::function::EdgeFunction;
use crate::metric::{KahlerForm, QuadratureError, QuadratureRule};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMesh {
    pub edge: String,
    /// Strictly increasing, ending at the head `x = 0`.
    pub nodes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub edge: String,
    /// The mesh starts at `x = -cut`.
    pub cut: f64,
    pub tail_mass: f64,
    pub tail_second_moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub h: f64,
    pub trunc_eps: f64,
    pub edges: Vec<EdgeMesh>,
    pub truncations: Vec<Truncation>,
    pub warnings: Vec<String>,
}

impl Mesh {
    pub fn edge(&self, id: &str) -> Option<&EdgeMesh> {
        self.edges.iter().find(|m| m.edge == id)
    }

    pub fn truncation(&self, id: &str) -> Option<&Truncation> {
        self.truncations.iter().find(|t| t.edge == id)
    }

    pub fn node_count(&self) -> usize {
        self.edges.iter().map(|m| m.nodes.len()).sum()
    }
}

fn uniform(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![hi];
    }
    let n = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    let mut nodes: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
    nodes.push(hi);
    nodes
}

/// Mass and second moment of `g` on `(-inf, -cut]`.
pub fn tail_moments(g: &EdgeFunction, cut: f64, rule: &QuadratureRule) -> Result<(f64, f64), QuadratureError> {
    let bp = g.breakpoints();
    let hi = -cut;
    let mass = rule.integrate(|x| g.eval(x), f64::NEG_INFINITY, hi, &bp)?;
    let second = rule.integrate(|x| x * x * g.eval(x), f64::NEG_INFINITY, hi, &bp)?;
    Ok((mass, second))
}

fn find_cut(
    edge: &str,
    g: &EdgeFunction,
    eps: f64,
    rule: &QuadratureRule,
) -> Result<(Truncation, bool), DiscreteError> {
    let wrap = |source| DiscreteError::Quadrature {
        edge: edge.to_string(),
        source,
    };
    let small = |cut: f64| -> Result<Option<(f64, f64)>, DiscreteError> {
        let (m, s) = tail_moments(g, cut, rule).map_err(wrap)?;
        Ok((m <= eps && s <= eps).then_some((m, s)))
    };
    let record = |cut: f64, (m, s): (f64, f64)| Truncation {
        edge: edge.to_string(),
        cut,
        tail_mass: m,
        tail_second_moment: s,
    };
    if let Some(ms) = small(0.0)? {
        return Ok((record(0.0, ms), true));
    }
    let mut hi = 1.0f64;
    let mut best = loop {
        if let Some(ms) = small(hi)? {
            break ms;
        }
        hi *= 2.0;
        if hi > 2f64.powi(60) {
            return Err(DiscreteError::TailSearch {
                edge: edge.to_string(),
            });
        }
    };
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    while hi - lo > 1e-3 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        match small(mid)? {
            Some(ms) => {
                hi = mid;
                best = ms;
            }
            None => lo = mid,
        }
    }
    Ok((record(hi, best), false))
}

pub const MAX_ELEMENTS: f64 = 1e7;

pub fn build_mesh(
    curve: &TropicalCurve,
    g: &KahlerForm,
    h: f64,
    trunc_eps: f64,
    rule: &QuadratureRule,
) -> Result<Mesh, DiscreteError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(DiscreteError::InvalidParameter(format!("mesh size h = {h}")));
    }
    if !(trunc_eps > 0.0) {
        return Err(DiscreteError::InvalidParameter(format!(
            "truncation epsilon = {trunc_eps}"
        )));
    }
    let mut edges = Vec::new();
    let mut truncations = Vec::new();
    let mut warnings = Vec::new();
    let mut elements = 0.0;
    for e in curve.edges() {
        let lo = match e.length.finite() {
            Some(l) => -l,
            None => {
                let (t, degenerate) = find_cut(&e.id, &g.weight(&e.id), trunc_eps, rule)?;
                if degenerate {
                    warnings.push(format!(
                        "edge {}: tail already below {trunc_eps:e} at x = 0; edge meshed as a single node",
                        e.id
                    ));
                }
                let lo = -t.cut;
                truncations.push(t);
                lo
            }
        };
        elements += (-lo / h).ceil();
        if elements > MAX_ELEMENTS {
            return Err(DiscreteError::InvalidParameter(format!(
                "mesh size h = {h} needs more than {MAX_ELEMENTS:e} elements"
            )));
        }
        edges.push(EdgeMesh {
            edge: e.id.clone(),
            nodes: uniform(lo, 0.0, h),
        });
    }
    Ok(Mesh {
        h,
        trunc_eps,
        edges,
        truncations,
        warnings,
    })
}
