//! Configuration files, result tables and command implementations for the
//! `corridor-tilt` binary.

pub mod commands;
pub mod config;
pub mod table;

pub use config::{
    case_study_preset, parse_config, parse_with_overrides, serialize_config, ConfigError,
    ScenarioConfig,
};
