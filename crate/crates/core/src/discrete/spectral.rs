//! Smallest eigenpairs of `ZᵀKZ v = λ ZᵀMZ v` by shift-invert.
//!
//! With `K + σM = LLᵀ` the operator `C = L⁻¹ M L⁻ᵀ` is symmetric with
//! eigenvalues `1/(λ + σ)`, so the smallest `λ` are the dominant ones and
//! kernel eigenvalues come out with absolute error near machine epsilon.
//! Small systems use a dense eigendecomposition of `C`; larger ones a
//! block subspace iteration on a sparse Cholesky factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::ops::serial::spsolve_csc_lower_triangular;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::CscMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::assemble::DiscreteSystem;
use super::DiscreteError;

pub const SHIFT: f64 = 1.0;
pub const GAP_RATIO: f64 = 1e3;
/// Eigenvalues above `RELIABLE_MAX * SHIFT` are not used for gap detection.
pub const RELIABLE_MAX: f64 = 1e8;
const FLOOR: f64 = 1e-14;
const DENSE_LIMIT: usize = 320;
const MAX_ITERATIONS: usize = 3000;
const RITZ_TOL: f64 = 1e-13;
const SEED: u64 = 0x7e0d_6e5e;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: Option<usize>,
    pub gap_ratio: Option<f64>,
    pub lambda_floor: f64,
    /// Largest `‖Kv − λMv‖ / (‖K‖ ‖v‖)` over the returned pairs.
    pub max_residual: f64,
    pub reduced_dim: usize,
    /// M-orthonormal eigenvectors in the full DOF space.
    #[serde(skip)]
    pub vectors: Vec<DVector<f64>>,
}

fn inf_norm(a: &CscMatrix<f64>) -> f64 {
    let mut rows = vec![0.0f64; a.nrows()];
    for (i, _, v) in a.triplet_iter() {
        rows[i] += v.abs();
    }
    rows.into_iter().fold(0.0, f64::max)
}

fn to_dense(a: &CscMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        d[(i, j)] += *v;
    }
    d
}

/// Eigenpairs of a small symmetric matrix, dominant first.
fn sym_eig_desc(t: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let t = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// `(θ, y)` dominant eigenpairs of `C`, `y` in the Cholesky coordinates.
fn dense_shift_invert(kr: &CscMatrix<f64>, mr: &CscMatrix<f64>, m: usize) -> Result<(Vec<f64>, DMatrix<f64>), DiscreteError> {
    let k = to_dense(kr);
    let mm = to_dense(mr);
    let chol = (&k + &mm * SHIFT)
        .cholesky()
        .ok_or(DiscreteError::NotPositiveDefinite)?;
    let l = chol.l();
    let lm = l.solve_lower_triangular(&mm).ok_or(DiscreteError::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&lm.transpose())
        .ok_or(DiscreteError::NotPositiveDefinite)?;
    let (theta, y) = sym_eig_desc(c);
    let v = l
        .tr_solve_lower_triangular(&y.columns(0, m).into_owned())
        .ok_or(DiscreteError::NotPositiveDefinite)?;
    Ok((theta[..m].to_vec(), v))
}

fn orthonormalize(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().qr().q()
}

fn sparse_shift_invert(kr: &CscMatrix<f64>, mr: &CscMatrix<f64>, m: usize) -> Result<(Vec<f64>, DMatrix<f64>), DiscreteError> {
    let n = kr.nrows();
    let a = kr + &(mr * SHIFT);
    let chol = CscCholesky::factor(&a).map_err(|_| DiscreteError::NotPositiveDefinite)?;
    let l = chol.l();
    let apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut y = x.clone();
        spsolve_csc_lower_triangular(Op::Transpose(l), &mut y).expect("square factor");
        let mut w = mr * &y;
        spsolve_csc_lower_triangular(Op::NoOp(l), &mut w).expect("square factor");
        w
    };
    let b = (2 * m).max(m + 8).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let x0 = DMatrix::from_fn(n, b, |_, _| rng.random::<f64>() - 0.5);
    let mut q = orthonormalize(&x0);
    for _ in 0..MAX_ITERATIONS {
        let w = apply(&q);
        let (theta, s) = sym_eig_desc(q.transpose() * &w);
        let ws = &w * &s;
        let qs = &q * &s;
        let converged = (0..m).all(|i| {
            let r = ws.column(i) - qs.column(i) * theta[i];
            r.norm() <= RITZ_TOL * theta[0].abs().max(f64::MIN_POSITIVE)
        });
        if converged {
            let mut y = qs.columns(0, m).into_owned();
            spsolve_csc_lower_triangular(Op::Transpose(l), &mut y).expect("square factor");
            return Ok((theta[..m].to_vec(), y));
        }
        q = orthonormalize(&ws);
    }
    Err(DiscreteError::NoConvergence {
        iterations: MAX_ITERATIONS,
    })
}

struct Pairs {
    values: Vec<f64>,
    reduced: DMatrix<f64>,
    residual: f64,
}

fn smallest(kr: &CscMatrix<f64>, mr: &CscMatrix<f64>, m: usize) -> Result<Pairs, DiscreteError> {
    let n = kr.nrows();
    let (theta, mut v) = if n <= DENSE_LIMIT || 3 * m >= n {
        dense_shift_invert(kr, mr, m)?
    } else {
        sparse_shift_invert(kr, mr, m)?
    };
    let knorm = inf_norm(kr).max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(m);
    let mut residual = 0.0f64;
    for i in 0..m {
        let lambda = 1.0 / theta[i] - SHIFT;
        let mut col = v.column(i).into_owned();
        let mv = mr * &col;
        let mass = col.dot(&mv);
        col /= mass.sqrt();
        let r = kr * &col - (mr * &col) * lambda;
        residual = residual.max(r.norm() / (knorm * col.norm()));
        v.set_column(i, &col);
        values.push(lambda);
    }
    Ok(Pairs {
        values,
        reduced: v,
        residual,
    })
}

fn expand(system: &DiscreteSystem, pairs: &Pairs, count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|i| {
            let v = pairs.reduced.column(i).into_owned();
            let u = &system.z * &v;
            u.column(0).into_owned()
        })
        .collect()
}

/// The `k` smallest eigenpairs, ascending.
pub fn spectrum(system: &DiscreteSystem, k: usize) -> Result<SpectralResult, DiscreteError> {
    let n = system.reduced_dim();
    if k > n {
        return Err(DiscreteError::TooManyEigenvalues { k, dim: n });
    }
    let floor = FLOOR * inf_norm(&system.k);
    if k == 0 {
        return Ok(SpectralResult {
            eigenvalues: Vec::new(),
            kernel_dim: None,
            gap_ratio: None,
            lambda_floor: floor,
            max_residual: 0.0,
            reduced_dim: n,
            vectors: Vec::new(),
        });
    }
    let (kr, mr) = system.reduced();
    let pairs = smallest(&kr, &mr, k)?;
    Ok(SpectralResult {
        vectors: expand(system, &pairs, k),
        eigenvalues: pairs.values,
        kernel_dim: None,
        gap_ratio: None,
        lambda_floor: floor,
        max_residual: pairs.residual,
        reduced_dim: n,
    })
}

/// Admissible kernel sizes `d` with their gap ratios.
fn admissible(values: &[f64], complete: bool, floor: f64, gap: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for d in 0..=values.len() {
        let next = match values.get(d) {
            Some(&v) => v,
            None if complete => f64::INFINITY,
            None => break,
        };
        if next.is_finite() && next > RELIABLE_MAX * SHIFT {
            break;
        }
        let prev = if d == 0 { 0.0 } else { values[d - 1] };
        let ratio = next / prev.max(floor);
        if ratio >= gap {
            out.push((d, ratio));
        }
    }
    out
}

/// Harmonic kernel by spectral gap detection.
pub fn kernel(system: &DiscreteSystem, gap_ratio_min: f64) -> Result<SpectralResult, DiscreteError> {
    if !(gap_ratio_min > 1.0) {
        return Err(DiscreteError::InvalidParameter(format!(
            "gap ratio {gap_ratio_min} must exceed 1"
        )));
    }
    let n = system.reduced_dim();
    let floor = FLOOR * inf_norm(&system.k);
    if n == 0 {
        return Ok(SpectralResult {
            eigenvalues: Vec::new(),
            kernel_dim: Some(0),
            gap_ratio: Some(f64::INFINITY),
            lambda_floor: floor,
            max_residual: 0.0,
            reduced_dim: 0,
            vectors: Vec::new(),
        });
    }
    let (kr, mr) = system.reduced();
    let mut m = n.min(12);
    loop {
        let pairs = smallest(&kr, &mr, m)?;
        let found = admissible(&pairs.values, m == n, floor, gap_ratio_min);
        match found.as_slice() {
            [(d, ratio)] => {
                return Ok(SpectralResult {
                    vectors: expand(system, &pairs, *d),
                    kernel_dim: Some(*d),
                    gap_ratio: Some(*ratio),
                    eigenvalues: pairs.values,
                    lambda_floor: floor,
                    max_residual: pairs.residual,
                    reduced_dim: n,
                });
            }
            [] if m < n && pairs.values[m - 1] <= floor * gap_ratio_min => {
                m = (2 * m).min(n);
            }
            _ => {
                return Err(DiscreteError::AmbiguousKernel {
                    eigenvalues: pairs.values,
                    candidates: found.iter().map(|&(d, _)| d).collect(),
                })
            }
        }
    }
}

fn m_orthonormal(m: &CscMatrix<f64>, vs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&(m * &w).column(0).into_owned());
                w -= q * c;
            }
        }
        let norm = w.dot(&(m * &w).column(0).into_owned()).sqrt();
        if norm > 1e-300 {
            out.push(w / norm);
        }
    }
    out
}

/// Principal angles (radians, ascending) between two spans in the mass
/// inner product; dimension mismatch contributes right angles.
pub fn principal_angles(system: &DiscreteSystem, a: &[DVector<f64>], b: &[DVector<f64>]) -> Vec<f64> {
    let qa = m_orthonormal(&system.m, a);
    let qb = m_orthonormal(&system.m, b);
    let (small, large) = if qa.len() <= qb.len() { (&qa, &qb) } else { (&qb, &qa) };
    let mut angles = Vec::new();
    if !small.is_empty() {
        let residuals: Vec<DVector<f64>> = small
            .iter()
            .map(|v| {
                let mut r = v.clone();
                for q in large.iter() {
                    let c = q.dot(&(&system.m * v).column(0).into_owned());
                    r -= q * c;
                }
                r
            })
            .collect();
        let k = residuals.len();
        let gram = DMatrix::from_fn(k, k, |i, j| {
            residuals[i].dot(&(&system.m * &residuals[j]).column(0).into_owned())
        });
        let (vals, _) = sym_eig_desc(gram);
        angles.extend(vals.iter().map(|s2| s2.max(0.0).sqrt().min(1.0).asin()));
    }
    angles.extend(std::iter::repeat_n(std::f64::consts::FRAC_PI_2, large.len() - small.len()));
    angles.sort_by(f64::total_cmp);
    angles
}
