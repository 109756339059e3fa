//! Finite elements for the Laplace–Beltrami operator on `(0,0)` and `(1,0)`
//! forms, spectral extraction of harmonic kernels, and the local right
//! inverse `T_U` of `d''`.

mod assemble;
mod local_inverse;
mod mesh;
mod spectral;

pub use assemble::{assemble, DiscreteSystem, DofMap, EdgeDofs};
pub use local_inverse::{
    leg_estimates, operator_constant, solve_dbar_local, EstimateReport, LocalDomain,
};
pub use mesh::{build_mesh, tail_moments, EdgeMesh, Mesh, Truncation, MAX_ELEMENTS};
pub use spectral::{kernel, principal_angles, spectrum, SpectralResult, GAP_RATIO, RELIABLE_MAX, SHIFT};

use thiserror::Error;

use crate::metric::QuadratureError;
use crate::superform::Bidegree;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscreteError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge {edge}: no truncation point found below 2^60")]
    TailSearch { edge: String },
    #[error("edge {edge}: {source}")]
    Quadrature {
        edge: String,
        #[source]
        source: QuadratureError,
    },
    #[error("bidegree ({}, {}) is not discretised; use the Hodge star", .0.p, .0.q)]
    UnsupportedBidegree(Bidegree),
    #[error("Kähler weight is not positive on edge {edge} at x = {x}")]
    NonpositiveWeight { edge: String, x: f64 },
    #[error("shifted stiffness matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("ambiguous kernel: admissible gaps at {candidates:?} among eigenvalues {eigenvalues:?}")]
    AmbiguousKernel {
        eigenvalues: Vec<f64>,
        candidates: Vec<usize>,
    },
    #[error("eigensolver did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("requested {k} eigenvalues but the reduced dimension is {dim}")]
    TooManyEigenvalues { k: usize, dim: usize },
    #[error("{0}")]
    Domain(String),
    #[error("divergent antiderivative on edge {edge}: {source}")]
    Divergent {
        edge: String,
        #[source]
        source: QuadratureError,
    },
}
