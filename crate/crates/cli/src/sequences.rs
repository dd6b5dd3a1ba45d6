// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Registry listing, phase-pattern search and registration.

use std::path::Path;

use spinscale_core::sequence::{
    build_sequence, delay_pattern_8p, first_order_symmetric_hits, search_phase_patterns, AffineTarget, Direction, PhasePattern,
    RegistryRecord, SequenceRegistry, SequenceSpec,
};

use crate::error::{from_validation, CliResult};

pub fn list(registry: &Path) -> CliResult<Vec<RegistryRecord>> {
    Ok(SequenceRegistry::open(registry)?.records().to_vec())
}

/// Valid 8-pulse phase patterns for `direction`; `first_order` keeps only
/// patterns whose 16-pulse extension also cancels the first-order terms.
pub fn search(direction: Direction, first_order: bool) -> CliResult<Vec<PhasePattern>> {
    if first_order {
        return Ok(first_order_symmetric_hits()?);
    }
    let delays = delay_pattern_8p(direction).map_err(|e| from_validation("direction", e))?;
    Ok(search_phase_patterns(&delays, AffineTarget::for_direction(direction)))
}

/// Build, verify and append; returns the record and whether it was new.
pub fn register(registry: &Path, spec: &SequenceSpec) -> CliResult<(RegistryRecord, bool)> {
    let seq = build_sequence(spec).map_err(|e| from_validation("sequence", e))?;
    let record = RegistryRecord::from_sequence(&seq)?;
    let mut reg = SequenceRegistry::open(registry)?;
    let added = reg.append(record.clone())?;
    Ok((record, added))
}

pub fn pattern_label(p: &PhasePattern) -> String {
    p.iter().map(|ph| ph.label()).collect::<Vec<_>>().join(" ")
}
