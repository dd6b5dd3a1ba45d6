// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Hilbert-space bookkeeping for spin-1/2 clusters: operators, normalized
//! trace correlators and cached propagation.
//!
//! Only the traceless deviation of the high-temperature state is tracked;
//! the identity part never evolves and never contributes signal.

pub mod linalg;
mod operator;
mod propagator;
mod system;

pub use operator::{
    apply_single, basis, collective_for, collective_operator, correlator, correlator_norm, global_rotation,
    hermitian_deviation, single_spin_operator, tensor_power, trace_product, Axis, OperatorMatrix, C64,
};
pub use propagator::{evolve, exp_pade, unitarity_defect, Propagator};
pub use system::{couplings_from_geometry, CouplingRule, SpinSystem};
