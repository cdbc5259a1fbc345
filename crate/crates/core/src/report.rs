//! Verification reports shared by every check in the crate.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pass(&mut self, name: impl Into<String>) {
        self.checks.push(Check { name: name.into(), status: Status::Pass, witness: None });
    }

    pub fn fail(&mut self, name: impl Into<String>, witness: impl Into<String>) {
        self.checks.push(Check { name: name.into(), status: Status::Fail, witness: Some(witness.into()) });
    }

    /// Records a pass, or a failure carrying the first witness found.
    pub fn record(&mut self, name: impl Into<String>, first_witness: Option<String>) {
        match first_witness {
            None => self.pass(name),
            Some(w) => self.fail(name, w),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn failed(&self, name: &str) -> Option<&Check> {
        self.failures().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// One line: `N checks, M failed`.
    pub fn summary(&self) -> String {
        let failed = self.failures().count();
        format!("{} checks, {} failed", self.checks.len(), failed)
    }
}
