//! Versioned JSON checkpoints for encoder parameters.
//!
//! The file is a single JSON object `{version, config, params}` where every
//! array carries its shape, so a checkpoint is self-describing and stable
//! across releases that keep `CHECKPOINT_VERSION`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::EncoderParams;
use super::{EncoderConfig, EncoderError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: EncoderConfig,
    params: EncoderParams,
}

pub fn save_checkpoint(path: &Path, config: &EncoderConfig, params: &EncoderParams) -> Result<()> {
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        params: params.clone(),
    };
    let body = serde_json::to_string(&ck)
        .map_err(|e| EncoderError::Checkpoint(format!("serialize: {}", e)))?;
    fs::write(path, body)
        .map_err(|e| EncoderError::Checkpoint(format!("write {}: {}", path.display(), e)))
}

pub fn load_checkpoint(path: &Path) -> Result<(EncoderConfig, EncoderParams)> {
    let body = fs::read_to_string(path)
        .map_err(|e| EncoderError::Checkpoint(format!("read {}: {}", path.display(), e)))?;
    let ck: Checkpoint = serde_json::from_str(&body)
        .map_err(|e| EncoderError::Checkpoint(format!("parse {}: {}", path.display(), e)))?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(EncoderError::Checkpoint(format!(
            "version {} unsupported (expected {})",
            ck.version, CHECKPOINT_VERSION
        )));
    }
    ck.config.validate()?;
    Ok((ck.config, ck.params))
}
