//! Campaign drivers and plumbing behind the `lhs` binary.

pub mod campaign;
pub mod config;
pub mod error;
pub mod output;
pub mod stats;

pub use config::{CampaignConfig, CampaignKind, ConfigFile, SetChoice};
pub use error::{CliError, Result, EXIT_BAD_INPUT, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_SOLVER};
