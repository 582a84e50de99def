use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{estimate_matrix, CalibrationMatrix, CountsRecord, Distribution, DEFAULT_CULL};
use crate::error::{Error, Result};
use crate::strategies::{mitigate_with_patches, PatchCalibration};
use crate::topology::{ErrMap, PatchPlan};

pub const STORE_VERSION: u32 = 1;

/// How the stored patches were chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StorePlan {
    CouplingMap { plan: PatchPlan },
    ErrMap { err_map: ErrMap, plan: PatchPlan },
}

impl StorePlan {
    pub fn patch_plan(&self) -> &PatchPlan {
        match self {
            StorePlan::CouplingMap { plan } | StorePlan::ErrMap { plan, .. } => plan,
        }
    }
}

/// A persisted patch calibration that can be applied to any later circuit
/// on the same device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStore {
    pub version: u32,
    pub device: String,
    pub timestamp: String,
    pub num_qubits: usize,
    pub plan: StorePlan,
    pub records: Vec<CountsRecord>,
    pub matrices: Vec<CalibrationMatrix>,
    pub cull: f64,
}

impl CalibrationStore {
    pub fn new(
        device: impl Into<String>,
        timestamp: impl Into<String>,
        num_qubits: usize,
        plan: StorePlan,
        calibration: PatchCalibration,
    ) -> Result<Self> {
        let device = device.into();
        let timestamp = timestamp.into();
        let records = calibration
            .records
            .into_iter()
            .map(|r| CountsRecord { device: device.clone(), timestamp: timestamp.clone(), ..r })
            .collect();
        let store = CalibrationStore {
            version: STORE_VERSION,
            device,
            timestamp,
            num_qubits,
            plan,
            records,
            matrices: calibration.matrices,
            cull: DEFAULT_CULL,
        };
        store.validate()?;
        Ok(store)
    }

    /// Estimate one matrix per patch of `plan` from ingested counts.
    pub fn from_records(
        device: impl Into<String>,
        timestamp: impl Into<String>,
        num_qubits: usize,
        plan: StorePlan,
        records: Vec<CountsRecord>,
    ) -> Result<Self> {
        let mut by_support: BTreeMap<Vec<usize>, Vec<CountsRecord>> = BTreeMap::new();
        for r in &records {
            by_support.entry(r.support.clone()).or_default().push(r.clone());
        }
        let matrices = plan
            .patch_plan()
            .patches()
            .map(|p| {
                let recs = by_support
                    .get(p)
                    .ok_or_else(|| Error::SupportMismatch(format!("no counts for patch {p:?}")))?;
                estimate_matrix(recs)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(device, timestamp, num_qubits, plan, PatchCalibration { matrices, records })
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != STORE_VERSION {
            return Err(Error::SchemaVersion { found: self.version, expected: STORE_VERSION });
        }
        let planned: Vec<&Vec<usize>> = self.plan.patch_plan().patches().collect();
        let stored: Vec<&[usize]> = self.matrices.iter().map(|m| m.support()).collect();
        if planned.len() != stored.len() || planned.iter().zip(&stored).any(|(a, b)| a.as_slice() != *b) {
            return Err(Error::SupportMismatch("matrices do not follow the patch plan".into()));
        }
        let supports: BTreeSet<&[usize]> = stored.iter().copied().collect();
        for r in &self.records {
            r.validate()?;
            if !supports.contains(r.support.as_slice()) {
                return Err(Error::SupportMismatch(format!("record on {:?} matches no patch", r.support)));
            }
        }
        if let Some(&q) = stored.iter().flat_map(|s| s.iter()).find(|&&q| q >= self.num_qubits) {
            return Err(Error::IndexOutOfRange { index: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse a store, checking the schema version before anything else.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| Error::invalid("store has no version"))?;
        if found != u64::from(STORE_VERSION) {
            return Err(Error::SchemaVersion { found: found as u32, expected: STORE_VERSION });
        }
        let store: CalibrationStore = serde_json::from_value(value)?;
        store.validate()?;
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Mitigate `raw`, a distribution over `measured` (ascending).
    pub fn mitigate(&self, raw: &Distribution, measured: &[usize]) -> Result<Distribution> {
        mitigate_with_patches(&self.matrices, measured, self.num_qubits, raw, self.cull)
    }
}
