use std::path::Path;

use bvr_core::lhs::SamplePlan;
use bvr_core::sim::ScenarioTemplate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub id: u64,
    pub seed: u64,
    /// Log file name relative to the manifest; absent when the run failed.
    pub file: Option<String>,
    pub sha256: Option<String>,
    pub error: Option<String>,
}

/// Index of a simulation batch. Contains nothing time- or host-dependent,
/// so identical inputs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub plan: SamplePlan,
    pub template: ScenarioTemplate,
    pub runs: Vec<RunEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, Failure> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
