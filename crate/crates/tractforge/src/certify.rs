//! Certification line items shared by the symbolic (tower-scale) checkers.
//!
//! A `CertLine` records one named inequality or consistency check together
//! with a pass flag and a human-readable detail string. Reports that bundle
//! many lines (datum validation, growth certification) wrap `Vec<CertLine>`.

use serde::{Deserialize, Serialize};

/// One named check with its outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertLine {
    /// Short identifier of the check, e.g. `"spacing_nu0_R"`.
    pub name: String,
    /// Wiggle index the check applies to, when per-index.
    pub j: Option<u32>,
    pub pass: bool,
    /// On failure this names the first inequality that could not be
    /// certified; on success it summarises what was established.
    pub detail: String,
}

impl CertLine {
    pub fn new(name: &str, j: Option<u32>, pass: bool, detail: impl Into<String>) -> Self {
        CertLine { name: name.to_string(), j, pass, detail: detail.into() }
    }
}
