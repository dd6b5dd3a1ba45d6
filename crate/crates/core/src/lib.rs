// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Desk-scale simulation of scaled dipolar spin dynamics.
//!
//! Pulse sequences engineer `+-delta H_d^y` on small dipolar clusters; the
//! crate propagates them exactly, extracts magnetization decays, Loschmidt
//! echoes and multiple-quantum spectra, and fits the standard decay models.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod hamiltonians;
pub mod protocols;
pub mod sequence;
pub mod spin;

pub use error::{Result, SpinError, MAX_SPINS};
