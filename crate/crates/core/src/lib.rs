//! Hodge theory of tropical curves.
//!
//! Metric-graph curves, the superform calculus (`d''`, `d'`, wedge,
//! Hodge star, integration), exact harmonic bases, finite-element
//! Laplace–Beltrami spectra with Kirchhoff vertex conditions, and
//! executable checks of the identities that tie them together.

pub mod checks;
pub mod cli;
pub mod curve;
pub mod discrete;
pub mod expr;
pub mod function;
pub mod harmonic;
pub mod metric;
pub mod rational;
pub mod superform;
pub mod theta;

pub use curve::{genus, incidence_matrix, parse_curve, validate, TropicalCurve};
pub use function::EdgeFunction;
pub use metric::{KahlerForm, QuadratureRule};
pub use superform::{Bidegree, Superform};
