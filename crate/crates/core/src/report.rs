//! Pass/fail reports produced by the verifiers.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub clauses: Vec<Clause>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.clauses
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.clauses.push(Clause {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    /// Appends `other`'s clauses with `prefix.` prepended to their names.
    pub fn extend_prefixed(&mut self, prefix: &str, other: VerificationReport) {
        for c in other.clauses {
            self.clauses.push(Clause {
                name: format!("{prefix}.{}", c.name),
                ..c
            });
        }
    }
}
