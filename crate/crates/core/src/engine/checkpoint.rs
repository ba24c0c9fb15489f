//! Versioned JSON container for trained engines.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Engine;
use crate::error::{Error, Result};

pub const ENGINE_FORMAT: &str = "formsense-engine";
pub const ENGINE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    engine: Engine,
}

pub fn save_engine(engine: &Engine, path: impl AsRef<Path>) -> Result<()> {
    let c = Container {
        format: ENGINE_FORMAT.into(),
        version: ENGINE_VERSION,
        engine: engine.clone(),
    };
    let text = serde_json::to_string(&c).map_err(|e| Error::Checkpoint(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_engine(path: impl AsRef<Path>) -> Result<Engine> {
    let text = fs::read_to_string(path)?;
    let c: Container = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if c.format != ENGINE_FORMAT {
        return Err(Error::Checkpoint(format!("not an engine checkpoint: `{}`", c.format)));
    }
    if c.version != ENGINE_VERSION {
        return Err(Error::Checkpoint(format!("unsupported engine version {}", c.version)));
    }
    Ok(c.engine)
}
