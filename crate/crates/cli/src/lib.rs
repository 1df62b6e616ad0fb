//! Configuration parsing and the batch pipeline behind the `hetero` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Status};
