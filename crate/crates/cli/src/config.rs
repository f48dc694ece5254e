//! Input path resolution against the config directory and the bundled defaults.

use std::path::{Path, PathBuf};

use cryomux::chain::io::parse_json;
use cryomux::{Error, Result};
use serde::de::DeserializeOwned;

const BUNDLED: [(&str, &str); 3] = [
    ("chain.json", include_str!("../data/chain.json")),
    ("sweep.json", include_str!("../data/sweep.json")),
    ("loss_budget.json", include_str!("../data/loss_budget.json")),
];

pub struct Context {
    dir: Option<PathBuf>,
}

impl Context {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    /// Reads `path` as given, then relative to the config directory, then from the
    /// bundled copies when the bare file name matches one.
    pub fn read_text(&self, path: &Path) -> Result<String> {
        if path.exists() {
            return read(path);
        }
        if path.is_relative() {
            if let Some(dir) = &self.dir {
                let p = dir.join(path);
                if p.exists() {
                    return read(&p);
                }
            }
            if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| Path::new(name) == path) {
                log::info!("using bundled {}", path.display());
                return Ok((*text).to_string());
            }
        }
        Err(Error::Io(format!("{}: file not found", path.display())))
    }

    pub fn load_json<T: DeserializeOwned>(&self, path: &Path) -> Result<T> {
        let text = self.read_text(path)?;
        parse_json(&text).map_err(|e| with_file(e, path))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Prefixes a parse error message with the file it came from.
pub fn with_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        other => other,
    }
}
