//! Solver diagnostics serialized alongside profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

/// Named pass/fail checks, ordered by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CheckSet(BTreeMap<String, CheckStatus>);

impl CheckSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, name: &str, ok: bool) {
        self.0
            .insert(name.to_string(), if ok { CheckStatus::Pass } else { CheckStatus::Fail });
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.0.get(name).map(|s| *s == CheckStatus::Pass)
    }

    pub fn all_pass(&self) -> bool {
        self.0.values().all(|s| *s == CheckStatus::Pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.0
            .iter()
            .filter(|(_, s)| **s == CheckStatus::Fail)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn extend(&mut self, other: CheckSet) {
        self.0.extend(other.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, CheckStatus)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub checks: CheckSet,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
}

impl SolveReport {
    /// Converged with every check passing.
    pub fn success(&self) -> bool {
        self.converged && self.checks.all_pass()
    }
}
