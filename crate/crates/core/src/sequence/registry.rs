// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Append-only JSON registry of verified sequences.
//!
//! The file is rewritten through a temporary sibling and an atomic rename,
//! so readers never observe a partial registry.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{symbolic_average, Direction, Phase, PulseSequence, SequenceKind};
use crate::error::{Result, SpinError};

pub const REGISTRY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// sha256 of the canonical sequence JSON.
    pub sequence_hash: String,
    /// sha256 of the canonical symbolic-average JSON.
    pub average_hash: String,
    pub c_y: f64,
    pub c_z: f64,
    pub zeeman_residual: f64,
    pub closes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryRecord {
    pub version: u32,
    pub kind: SequenceKind,
    pub delta: f64,
    pub tau: f64,
    pub direction: Direction,
    pub phases: Vec<Phase>,
    pub delays: Vec<f64>,
    pub cycle_time: f64,
    pub verification: Verification,
}

pub(crate) fn sha256_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Value keeps object keys sorted, which makes the text canonical.
    let canonical = serde_json::to_value(value).and_then(|v| serde_json::to_string(&v)).map_err(|e| SpinError::Registry(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

impl RegistryRecord {
    /// Record for an ideal sequence, verified symbolically.
    pub fn from_sequence(seq: &PulseSequence) -> Result<Self> {
        let avg = symbolic_average(seq)?;
        Ok(Self {
            version: REGISTRY_VERSION,
            kind: seq.kind,
            delta: seq.delta,
            tau: seq.tau,
            direction: seq.direction,
            phases: seq.phases(),
            delays: seq.delays(),
            cycle_time: seq.cycle_time,
            verification: Verification {
                sequence_hash: sha256_json(seq)?,
                average_hash: sha256_json(&avg)?,
                c_y: avg.c_y,
                c_z: avg.c_z,
                zeeman_residual: avg.zeeman.iter().map(|z| z.abs()).fold(0.0, f64::max),
                closes: avg.closes,
            },
        })
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RegistryFile {
    version: u32,
    records: Vec<RegistryRecord>,
}

#[derive(Debug)]
pub struct SequenceRegistry {
    path: PathBuf,
    records: Vec<RegistryRecord>,
}

impl SequenceRegistry {
    /// Open `path`, or start empty when it does not exist yet.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let records = if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| SpinError::Registry(format!("{}: {e}", path.display())))?;
            let file: RegistryFile = serde_json::from_str(&text).map_err(|e| SpinError::Registry(e.to_string()))?;
            if file.version > REGISTRY_VERSION {
                return Err(SpinError::Registry(format!("unsupported registry version {}", file.version)));
            }
            file.records
        } else {
            Vec::new()
        };
        Ok(Self { path, records })
    }

    pub fn records(&self) -> &[RegistryRecord] {
        &self.records
    }

    pub fn find(&self, kind: SequenceKind, direction: Direction, delta: f64, tau: f64) -> Option<&RegistryRecord> {
        self.records
            .iter()
            .find(|r| r.kind == kind && r.direction == direction && r.delta == delta && r.tau == tau)
    }

    /// Append a record and publish atomically. Returns `false` when an
    /// identical sequence is already registered.
    pub fn append(&mut self, record: RegistryRecord) -> Result<bool> {
        if self.records.iter().any(|r| r.verification.sequence_hash == record.verification.sequence_hash) {
            return Ok(false);
        }
        self.records.push(record);
        self.publish()?;
        Ok(true)
    }

    fn publish(&self) -> Result<()> {
        let dir = match self.path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(|e| SpinError::Registry(e.to_string()))?;
        let file = RegistryFile { version: REGISTRY_VERSION, records: self.records.clone() };
        let text = serde_json::to_string_pretty(&file).map_err(|e| SpinError::Registry(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| SpinError::Registry(e.to_string()))?;
        tmp.write_all(text.as_bytes()).map_err(|e| SpinError::Registry(e.to_string()))?;
        tmp.persist(&self.path).map_err(|e| SpinError::Registry(e.to_string()))?;
        Ok(())
    }
}
