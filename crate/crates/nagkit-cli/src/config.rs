//! Configuration resolution: flags beat `NAGKIT_*` environment variables
//! (clap folds those two), which beat the TOML config file, which beats
//! built-in defaults. The defaults mirror the reference inference setup:
//! beam 10, length penalty 0, temperature 1.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Optional knobs a TOML config file may set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub copies: Option<usize>,
    pub beam_size: Option<usize>,
    pub length_penalty: Option<f64>,
    pub temperature: Option<f64>,
    pub max_len: Option<usize>,
    pub h_mode: Option<String>,
    pub d_max: Option<u16>,
    pub vocab_max_gap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| {
            CliError::Usage(format!("malformed config file {}: {e}", path.display()))
        })
    }
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_COPIES: usize = 1;
pub const DEFAULT_BEAM_SIZE: usize = 10;
pub const DEFAULT_LENGTH_PENALTY: f64 = 0.0;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_MAX_LEN: usize = 512;
pub const DEFAULT_VOCAB_MAX_GAP: usize = 16;

/// First of flag/env value, config-file value, default.
pub fn resolve<T: Clone>(flag_or_env: Option<T>, file: Option<T>, default: T) -> T {
    flag_or_env.or(file).unwrap_or(default)
}
