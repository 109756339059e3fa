//! Check report entries and their JSON form.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    /// `null` in JSON when the check could not be evaluated.
    pub residual: Option<f64>,
    pub tol: f64,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckEntry {
    /// Passes iff `residual <= tol`; a NaN residual fails.
    pub fn new(id: impl Into<String>, anchor: impl Into<String>, residual: f64, tol: f64) -> Self {
        let status = if residual <= tol { Status::Pass } else { Status::Fail };
        CheckEntry {
            id: id.into(),
            anchor: anchor.into(),
            status,
            residual: residual.is_finite().then_some(residual),
            tol,
            seconds: 0.0,
            detail: None,
        }
    }

    /// A check whose computation failed; never aborts the suite.
    pub fn failed(id: impl Into<String>, anchor: impl Into<String>, tol: f64, detail: impl Into<String>) -> Self {
        CheckEntry {
            id: id.into(),
            anchor: anchor.into(),
            status: Status::Fail,
            residual: None,
            tol,
            seconds: 0.0,
            detail: Some(detail.into()),
        }
    }

    pub fn ambiguous(id: impl Into<String>, anchor: impl Into<String>, tol: f64, detail: impl Into<String>) -> Self {
        CheckEntry {
            status: Status::Ambiguous,
            ..Self::failed(id, anchor, tol, detail)
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub checks: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckEntry::passed)
    }

    pub fn get(&self, id: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
