use serde::Serialize;

use crate::val::Verdict;

/// A named three-valued check with a short human-readable detail.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
    /// Whether the check counts towards the run's verdict; the rest are reported only.
    pub asserted: bool,
}

impl Certificate {
    pub fn new(name: impl Into<String>, verdict: Verdict, detail: impl Into<String>) -> Certificate {
        Certificate { name: name.into(), verdict, detail: detail.into(), asserted: true }
    }

    pub fn advisory(mut self) -> Certificate {
        self.asserted = false;
        self
    }

    pub fn from_bool(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Certificate {
        Certificate::new(name, Verdict::from_bool(ok), detail)
    }
}

/// Conjunction over the asserted certificates.
pub fn overall(certs: &[Certificate]) -> Verdict {
    Verdict::all(certs.iter().filter(|c| c.asserted).map(|c| c.verdict))
}
