//! Machine-readable results, one JSON object per line.

use choiceset_core::ChoiceInstance;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::schema::ModelFile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    /// SHA-256 of the model and choice set, see [`instance_digest`].
    pub digest: String,
    pub method: String,
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub epsilon: Option<f64>,
    /// Chosen alternatives, in universe order.
    pub set: Vec<String>,
    /// `D(set)` or the strict-favorite count, scored from scratch.
    pub value: f64,
    /// Promotion by approximation: the relaxed count the search optimized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_favorite_count: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_materialized: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee_applicable: Option<bool>,
    pub time_ms: f64,
    pub seed: Option<u64>,
}

impl RunRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

/// Hex SHA-256 over the model's parameters (annotations stripped) and the
/// choice set.
pub fn instance_digest(model: &ModelFile, inst: &ChoiceInstance) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&model.canonical()).expect("model files always serialize"));
    h.update(b"\nC=");
    let names = inst.names(inst.choice_set());
    h.update(names.join(";"));
    hex::encode(h.finalize())
}
