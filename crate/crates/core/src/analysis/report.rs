use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Violation,
    /// The run ended before the property could be decided.
    BudgetExhausted,
}

/// Where a report came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One checked inequality `observed ≤ bound` (up to `tol`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub bound: f64,
    pub observed: f64,
    pub margin: f64,
    pub pass: bool,
    pub tol: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl EstimateReport {
    pub fn new(id: impl Into<String>, bound: f64, observed: f64, tol: f64) -> Self {
        let margin = bound - observed;
        let pass = margin >= -tol;
        Self {
            id: id.into(),
            bound,
            observed,
            margin,
            pass,
            tol,
            status: if pass { Status::Pass } else { Status::Violation },
            details: BTreeMap::new(),
            provenance: Provenance::default(),
        }
    }

    /// Report whose outcome could not be decided within the budget.
    pub fn exhausted(id: impl Into<String>, bound: f64, observed: f64) -> Self {
        let mut r = Self::new(id, bound, observed, 0.0);
        r.pass = false;
        r.status = Status::BudgetExhausted;
        r
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.details.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Marks the report failed without changing its numbers.
    pub fn fail(mut self, reason: &str) -> Self {
        self.pass = false;
        if self.status == Status::Pass {
            self.status = Status::Violation;
        }
        self.with("failure", reason)
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "{:<14} {} observed={:.6e} bound={:.6e} margin={:.3e}",
            self.id,
            match self.status {
                Status::Pass => "PASS",
                Status::Violation => "FAIL",
                Status::BudgetExhausted => "BUDGET",
            },
            self.observed,
            self.bound,
            self.margin
        )
    }
}

/// Reports keyed by id, the on-disk JSON shape.
pub fn reports_to_json(reports: &[EstimateReport]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for r in reports {
        map.insert(r.id.clone(), serde_json::to_value(r).unwrap_or(serde_json::Value::Null));
    }
    serde_json::Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_margin_within_tolerance() {
        assert!(EstimateReport::new("a", 1.0, 1.0 + 1e-9, 1e-8).pass);
        assert!(!EstimateReport::new("a", 1.0, 1.1, 1e-8).pass);
        let e = EstimateReport::exhausted("b", 1.0, 0.0);
        assert!(!e.pass && e.status == Status::BudgetExhausted);
    }

    #[test]
    fn json_is_keyed_by_id() {
        let v = reports_to_json(&[EstimateReport::new("energy", 2.0, 1.0, 0.0).with("nodes", 10)]);
        assert_eq!(v["energy"]["margin"], 1.0);
        assert_eq!(v["energy"]["pass"], true);
        assert_eq!(v["energy"]["details"]["nodes"], 10);
    }
}
