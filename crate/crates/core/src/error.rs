// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Largest spin count handled with dense matrices.
pub const MAX_SPINS: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("capacity exceeded: {n_spins} spins requested, dense backend supports at most {max}")]
    Capacity { n_spins: usize, max: usize },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("degenerate geometry: spins {0} and {1} coincide")]
    DegenerateGeometry(usize, usize),

    #[error("missing couplings: system has no coupling matrix")]
    MissingCouplings,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    /// Sequence parameter outside its allowed range. The message is
    /// surfaced verbatim by the runner.
    #[error("{0}")]
    SequenceBound(String),

    #[error("negative delay {value:e} s at element {index} (minimum separation {min:e} s)")]
    NegativeDelay { index: usize, value: f64, min: f64 },

    #[error("no phase pattern satisfies the requested average Hamiltonian")]
    NoPhasePattern,

    #[error("symbolic frame undefined: flip angle {0} rad is not a multiple of pi/2")]
    SymbolicFrameUndefined(f64),

    #[error("finite-width pulses: use cycle_propagator comparison instead")]
    FiniteWidthPulses,

    #[error("time {time:e} s is not a multiple of the cycle time {cycle:e} s")]
    NotStroboscopic { time: f64, cycle: f64 },

    #[error("aliasing: Q = {q_steps} cannot encode detected coherence order {max_order}")]
    Aliasing { q_steps: usize, max_order: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no overlap between self-time ranges")]
    NoOverlap,

    #[error("fit failed ({model}): {reason}")]
    FitFailed { model: String, reason: String },

    #[error("degenerate abscissa: all x values are equal")]
    DegenerateAbscissa,

    #[error("registry: {0}")]
    Registry(String),
}

pub type Result<T> = std::result::Result<T, SpinError>;

pub(crate) fn check_capacity(n_spins: usize) -> Result<()> {
    if n_spins > MAX_SPINS {
        return Err(SpinError::Capacity { n_spins, max: MAX_SPINS });
    }
    Ok(())
}
