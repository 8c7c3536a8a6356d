//! Command-line plumbing: configuration, snapshots and the run commands.

pub mod commands;
pub mod config;
pub mod snapshot;

pub use commands::{exit_code, initial_pair, run_command, RunSummary};
pub use config::{parse_config, Command, InitialKind, RunConfig};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotHeader};
