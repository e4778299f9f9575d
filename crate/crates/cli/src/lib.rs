//! Scenario runner for the `qsl` command-line tool.
//!
//! [`parse_config`] turns a TOML scenario into a [`ScenarioConfig`],
//! [`run_scenario`] writes its CSV output and a JSON-lines sidecar, and
//! [`verify_all`] runs the cross-oracle verification suite.

pub mod config;
pub mod error;
pub mod run;
pub mod verify;

pub use config::{parse_config, Mode, Scenario, ScenarioConfig};
pub use error::{CliError, ConfigError};
pub use run::{run_scenario, RunSummary};
pub use verify::{verify_all, verify_all_with, VerifyEntry, VerifyOptions, VerifyReport};
