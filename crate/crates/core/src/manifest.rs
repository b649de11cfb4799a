// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run manifests: everything needed to replay a result file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ProbeError, Result};
use crate::metrics::FoldPlan;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub dataset: String,
    pub k: usize,
    pub strategy: String,
    pub seed: u64,
    pub n: usize,
    /// SHA-256 of the fold ids, one `u32` little-endian per sample.
    pub assignment_sha256: String,
}

impl PlanSummary {
    pub fn new(dataset: &str, plan: &FoldPlan) -> Self {
        let mut h = Sha256::new();
        for &f in &plan.assignment {
            h.update((f as u32).to_le_bytes());
        }
        Self {
            dataset: dataset.to_string(),
            k: plan.k,
            strategy: plan.strategy.to_string(),
            seed: plan.seed,
            n: plan.n(),
            assignment_sha256: hex(&h.finalize()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputDigest>,
    pub fold_plans: Vec<PlanSummary>,
    pub outputs: Vec<String>,
    pub toolkit_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>) -> Self {
        Self {
            command_line,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            fold_plans: Vec::new(),
            outputs: Vec::new(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let (sha256, bytes) = digest_file(path)?;
        if !self
            .inputs
            .iter()
            .any(|i| i.path == path.display().to_string())
        {
            self.inputs.push(InputDigest {
                path: path.display().to_string(),
                sha256,
                bytes,
            });
        }
        Ok(self)
    }

    pub fn plan(&mut self, dataset: &str, plan: &FoldPlan) -> &mut Self {
        self.fold_plans.push(PlanSummary::new(dataset, plan));
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Path of the manifest accompanying result file `out`.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".manifest.json");
        out.with_file_name(name)
    }

    pub fn write_for(&self, out: &Path) -> Result<PathBuf> {
        let path = Self::path_for(out);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| ProbeError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ProbeError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn digest_file(path: &Path) -> Result<(String, u64)> {
    let mut file = File::open(path).map_err(|e| ProbeError::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    let mut total = 0u64;
    loop {
        let k = file.read(&mut buf).map_err(|e| ProbeError::io(path, e))?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
        total += k as u64;
    }
    Ok((hex(&h.finalize()), total))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
