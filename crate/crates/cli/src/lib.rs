// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Configuration-driven experiment runner on top of `spinscale-core`.

pub mod analyze;
pub mod config;
pub mod error;
pub mod io;
pub mod plotdata;
pub mod run;
pub mod sequences;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use run::{run, ResultRecord, RunOptions};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SPINSCALE_WORKERS";
