//! P1 assembly of stiffness, mass and Kirchhoff constraint matrices.
//!
//! Degrees of freedom are numbered with edge-interior nodes first and
//! vertex or edge-end nodes last, which keeps Cholesky fill-in local.

use std::collections::BTreeMap;

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::mesh::Mesh;
use super::DiscreteError;
use crate::curve::{Side, TropicalCurve};
use crate::function::EdgeFunction;
use crate::metric::{gauss_legendre, KahlerForm};
use crate::rational::RationalMatrix;
use crate::superform::{Bidegree, Superform};

const ELEMENT_QUADRATURE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDofs {
    pub edge: String,
    pub nodes: Vec<f64>,
    /// `None` marks a node carrying an essential zero condition.
    pub dofs: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub ndof: usize,
    pub edges: Vec<EdgeDofs>,
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub bidegree: Bidegree,
    pub k: CscMatrix<f64>,
    pub m: CscMatrix<f64>,
    /// Kirchhoff rows after redundant-row elimination.
    pub b: CscMatrix<f64>,
    /// Exact integer basis of `ker B`, one column per reduced unknown.
    pub z: CscMatrix<f64>,
    pub dofs: DofMap,
}

fn number_dofs(mesh: &Mesh, curve: &TropicalCurve, bidegree: Bidegree) -> DofMap {
    let mut next = 0usize;
    let mut edges: Vec<EdgeDofs> = mesh
        .edges
        .iter()
        .map(|em| {
            let n = em.nodes.len();
            let mut dofs = vec![None; n];
            for (i, d) in dofs.iter_mut().enumerate().take(n.saturating_sub(1)).skip(1) {
                *d = Some(next + i - 1);
            }
            next += n.saturating_sub(2);
            EdgeDofs {
                edge: em.edge.clone(),
                nodes: em.nodes.clone(),
                dofs,
            }
        })
        .collect();
    let infinite: Vec<bool> = edges
        .iter()
        .map(|ed| curve.edge(&ed.edge).unwrap().is_infinite())
        .collect();

    if bidegree == Bidegree::B00 {
        // truncation nodes are free
        for (ed, &inf) in edges.iter_mut().zip(&infinite) {
            if inf && ed.nodes.len() > 1 {
                ed.dofs[0] = Some(next);
                next += 1;
            }
        }
        let mut vertex_dof = BTreeMap::new();
        for v in curve.vertices() {
            let ends = curve.ends_at(v);
            let meshed = ends.iter().any(|end| {
                !(infinite[end.edge] && end.side == Side::Tail)
            });
            if meshed {
                vertex_dof.insert(v.clone(), next);
                next += 1;
            }
        }
        for (i, e) in curve.edges().iter().enumerate() {
            let ed = &mut edges[i];
            let last = ed.nodes.len() - 1;
            ed.dofs[last] = Some(vertex_dof[&e.head]);
            if !infinite[i] {
                ed.dofs[0] = Some(vertex_dof[&e.tail]);
            }
        }
    } else {
        for v in curve.vertices() {
            for end in curve.ends_at(v) {
                let ed = &mut edges[end.edge];
                let last = ed.nodes.len() - 1;
                let idx = match end.side {
                    Side::Head => last,
                    Side::Tail => 0,
                };
                if infinite[end.edge] && idx == 0 {
                    continue;
                }
                ed.dofs[idx] = Some(next);
                next += 1;
            }
        }
    }
    DofMap { ndof: next, edges }
}

type Triplets = Vec<(usize, usize, f64)>;

fn element_matrices(
    ed: &EdgeDofs,
    g: &EdgeFunction,
    bidegree: Bidegree,
) -> Result<(Triplets, Triplets), DiscreteError> {
    let (gx, gw) = gauss_legendre(ELEMENT_QUADRATURE);
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for i in 0..ed.nodes.len().saturating_sub(1) {
        let (a, b) = (ed.nodes[i], ed.nodes[i + 1]);
        let len = b - a;
        let (mut m00, mut m01, mut m11, mut inv) = (0.0, 0.0, 0.0, 0.0);
        for (t, w) in gx.iter().zip(&gw) {
            let s = 0.5 * (1.0 + t);
            let x = a + s * len;
            let gv = g.eval(x);
            if !(gv > 0.0) || !gv.is_finite() {
                return Err(DiscreteError::NonpositiveWeight {
                    edge: ed.edge.clone(),
                    x,
                });
            }
            let wj = 0.5 * w * len;
            m00 += wj * (1.0 - s) * (1.0 - s) * gv;
            m01 += wj * (1.0 - s) * s * gv;
            m11 += wj * s * s * gv;
            inv += wj / gv;
        }
        let (kc, mloc) = if bidegree == Bidegree::B00 {
            (1.0 / len, [[m00, m01], [m01, m11]])
        } else {
            let d = len / 6.0;
            (inv / (len * len), [[2.0 * d, d], [d, 2.0 * d]])
        };
        let kloc = [[kc, -kc], [-kc, kc]];
        let ids = [ed.dofs[i], ed.dofs[i + 1]];
        for r in 0..2 {
            for c in 0..2 {
                if let (Some(p), Some(q)) = (ids[r], ids[c]) {
                    kt.push((p, q, kloc[r][c]));
                    mt.push((p, q, mloc[r][c]));
                }
            }
        }
    }
    Ok((kt, mt))
}

fn csc(rows: usize, cols: usize, trips: impl IntoIterator<Item = (usize, usize, f64)>) -> CscMatrix<f64> {
    let mut coo = CooMatrix::new(rows, cols);
    for (i, j, v) in trips {
        coo.push(i, j, v);
    }
    CscMatrix::from(&coo)
}

fn kirchhoff(
    curve: &TropicalCurve,
    dofs: &DofMap,
    bidegree: Bidegree,
) -> (CscMatrix<f64>, CscMatrix<f64>) {
    let n = dofs.ndof;
    let mut rows: Vec<Vec<(usize, i64)>> = Vec::new();
    if bidegree == Bidegree::B10 {
        for v in curve.vertices() {
            if curve.degree(v) < 2 {
                continue;
            }
            let row: Vec<(usize, i64)> = curve
                .ends_at(v)
                .iter()
                .filter_map(|end| {
                    let ed = &dofs.edges[end.edge];
                    let (idx, s) = match end.side {
                        Side::Head => (ed.nodes.len() - 1, 1),
                        Side::Tail => (0, -1),
                    };
                    ed.dofs[idx].map(|d| (d, s))
                })
                .collect();
            if !row.is_empty() {
                rows.push(row);
            }
        }
    }
    let mut cols: Vec<usize> = rows.iter().flatten().map(|&(d, _)| d).collect();
    cols.sort_unstable();
    cols.dedup();
    let pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(k, &d)| (d, k)).collect();
    let dense: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![0i64; cols.len()];
            for &(d, s) in r {
                v[pos[&d]] += s;
            }
            v
        })
        .collect();
    let exact = RationalMatrix::from_i64(&dense, cols.len());
    let keep = exact.independent_rows();
    let mut btrips = Vec::new();
    for (r, &i) in keep.iter().enumerate() {
        for (k, &v) in dense[i].iter().enumerate() {
            if v != 0 {
                btrips.push((r, cols[k], v as f64));
            }
        }
    }
    let b = csc(keep.len(), n, btrips);

    let free: Vec<usize> = (0..n).filter(|d| !pos.contains_key(d)).collect();
    let null = exact.nullspace();
    let nred = free.len() + null.len();
    let mut trips: Vec<(usize, usize, f64)> = free.iter().enumerate().map(|(j, &d)| (d, j, 1.0)).collect();
    for (j, vec) in null.iter().enumerate() {
        for (k, x) in vec.iter().enumerate() {
            let x = x.to_f64().unwrap();
            if x != 0.0 {
                trips.push((cols[k], free.len() + j, x));
            }
        }
    }
    (b, csc(n, nred, trips))
}

pub fn assemble(
    mesh: &Mesh,
    curve: &TropicalCurve,
    g: &KahlerForm,
    bidegree: Bidegree,
) -> Result<DiscreteSystem, DiscreteError> {
    if bidegree != Bidegree::B00 && bidegree != Bidegree::B10 {
        return Err(DiscreteError::UnsupportedBidegree(bidegree));
    }
    let dofs = number_dofs(mesh, curve, bidegree);
    let parts = dofs
        .edges
        .par_iter()
        .map(|ed| element_matrices(ed, &g.weight(&ed.edge), bidegree))
        .collect::<Result<Vec<_>, _>>()?;
    let n = dofs.ndof;
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for (k, m) in parts {
        kt.extend(k);
        mt.extend(m);
    }
    let (b, z) = kirchhoff(curve, &dofs, bidegree);
    Ok(DiscreteSystem {
        bidegree,
        k: csc(n, n, kt),
        m: csc(n, n, mt),
        b,
        z,
        dofs,
    })
}

impl DiscreteSystem {
    pub fn ndof(&self) -> usize {
        self.dofs.ndof
    }

    pub fn reduced_dim(&self) -> usize {
        self.z.ncols()
    }

    /// `(ZᵀKZ, ZᵀMZ)`.
    pub fn reduced(&self) -> (CscMatrix<f64>, CscMatrix<f64>) {
        let zt = self.z.transpose();
        let kr = &zt * &(&self.k * &self.z);
        let mr = &zt * &(&self.m * &self.z);
        (kr, mr)
    }

    /// Nodal interpolant of a form's coefficients (in canonical charts).
    pub fn interpolate(&self, form: &Superform) -> DVector<f64> {
        let mut u = DVector::zeros(self.ndof());
        for ed in &self.dofs.edges {
            let f = form.coeff(&ed.edge);
            for (x, d) in ed.nodes.iter().zip(&ed.dofs) {
                if let Some(d) = d {
                    u[*d] = f.eval(*x);
                }
            }
        }
        u
    }

    /// Piecewise-linear superform with nodal values `u`.
    pub fn to_superform(&self, u: &DVector<f64>) -> Superform {
        let mut coeffs = BTreeMap::new();
        for ed in &self.dofs.edges {
            let xs = ed.nodes.clone();
            let vals: Vec<f64> = ed.dofs.iter().map(|d| d.map_or(0.0, |d| u[d])).collect();
            let f = EdgeFunction::from_closure(move |x| {
                if xs.len() == 1 || x <= xs[0] {
                    return vals[0];
                }
                let i = xs.partition_point(|&t| t <= x).min(xs.len() - 1).max(1);
                let (a, b) = (xs[i - 1], xs[i]);
                let s = ((x - a) / (b - a)).clamp(0.0, 1.0);
                vals[i - 1] * (1.0 - s) + vals[i] * s
            });
            coeffs.insert(ed.edge.clone(), f);
        }
        Superform::new(self.bidegree, coeffs)
    }
}
