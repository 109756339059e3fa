//! Executable verification suites and the report they produce.
//!
//! Each suite returns report entries; a failing or erroring check becomes
//! a failed entry and never stops the run.

pub mod forms;
mod hodge;
mod local;
mod report;
mod stokes;
mod star;
mod verify;

pub use hodge::{check_hodge_theorem, TRUNCATION_EPS};
pub use local::check_local_inverse;
pub use report::{CheckEntry, CheckReport, Status};
pub use star::{check_star_identities, check_top_degree_laplacian, star_family};
pub use stokes::{bilinear_defect, check_integration_by_parts, check_stokes};
pub use verify::{theta_checks, verify, VerifyOptions};

use thiserror::Error;

use crate::superform::{Bidegree, SuperformError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChecksError {
    #[error("input form {index} is not regular: {detail}")]
    NotRegular { index: usize, detail: String },
    #[error("input form {index} has bidegree {got:?}, expected {expected:?}")]
    Bidegree { index: usize, expected: Bidegree, got: Bidegree },
    #[error(transparent)]
    Superform(#[from] SuperformError),
}
