//! Campaign driver for `activo-core`: TOML configuration, repeated trials,
//! per-iteration checkpoints and summary statistics.

pub mod campaign;
pub mod config;
pub mod error;
pub mod history_csv;
pub mod summary;
pub mod trial;

pub use campaign::{resume_campaign, resume_checkpoint, run_campaign, CampaignOptions, CampaignOutcome};
pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::{exit_code, CliError};
pub use summary::{summarize_dir, Summary};
