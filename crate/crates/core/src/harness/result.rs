use std::collections::BTreeMap;

use serde::Serialize;

use super::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn exact(mean: f64) -> Self {
        Self { mean, std: 0.0 }
    }
}

/// One protocol line of a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolRow {
    pub protocol: String,
    pub convention: Option<String>,
    /// Global E_R per input pair.
    pub er_global_per_pair: MeanStd,
    /// `None` for deterministic protocols.
    pub success_probability: Option<MeanStd>,
    pub effective_rate: f64,
    /// False when a numeric E_R evaluation hit its iteration cap.
    pub converged: bool,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Reproduced,
    Discrepancy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Claim {
    Value(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyEntry {
    pub id: String,
    pub description: String,
    pub claimed: Claim,
    pub computed: f64,
    pub abs_gap: Option<f64>,
    pub rel_gap: Option<f64>,
    pub tolerance: Option<f64>,
    pub convention: Option<String>,
    pub status: Status,
}

impl DiscrepancyEntry {
    /// Numeric claim, reproduced when `|computed − claimed| ≤ tolerance`.
    pub fn numeric(
        id: impl Into<String>,
        description: impl Into<String>,
        claimed: f64,
        computed: f64,
        tolerance: f64,
        convention: Option<&str>,
    ) -> Self {
        let gap = (computed - claimed).abs();
        Self {
            id: id.into(),
            description: description.into(),
            claimed: Claim::Value(claimed),
            computed,
            abs_gap: Some(gap),
            rel_gap: (claimed != 0.0).then(|| gap / claimed.abs()),
            tolerance: Some(tolerance),
            convention: convention.map(str::to_string),
            status: if gap <= tolerance {
                Status::Reproduced
            } else {
                Status::Discrepancy
            },
        }
    }

    /// Qualitative claim checked by a predicate on the computed value.
    pub fn qualitative(
        id: impl Into<String>,
        description: impl Into<String>,
        claimed: impl Into<String>,
        computed: f64,
        holds: bool,
        convention: Option<&str>,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            claimed: Claim::Text(claimed.into()),
            computed,
            abs_gap: None,
            rel_gap: None,
            tolerance: None,
            convention: convention.map(str::to_string),
            status: if holds { Status::Reproduced } else { Status::Discrepancy },
        }
    }
}

/// Named pass/fail outcome of one self-check oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub label: String,
    pub file: String,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub library_version: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ProtocolRow>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub discrepancies: Vec<DiscrepancyEntry>,
    pub checks: Vec<CheckOutcome>,
    pub details: BTreeMap<String, serde_json::Value>,
    /// Kept out of the serialized result so reruns compare byte for byte.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ExperimentResult {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment.name().to_string(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            rows: Vec::new(),
            trajectories: Vec::new(),
            discrepancies: Vec::new(),
            checks: Vec::new(),
            details: BTreeMap::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn detail(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.into(), v);
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
