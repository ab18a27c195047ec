//! Report envelope written by every command: the invoking command line, the
//! seed, the fully resolved configuration, and the command's results. A
//! report therefore reproduces itself — rerunning the embedded command on
//! the embedded config yields byte-identical output.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    /// The command line that produced this report.
    pub command: String,
    /// Seed after command-line overrides.
    pub seed: u64,
    /// Configuration after defaults and overrides were applied.
    pub config: RunConfig,
    pub results: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: impl Into<String>, seed: u64, config: RunConfig, results: T) -> Self {
        Report { command: command.into(), seed, config, results }
    }

    /// Pretty JSON with a trailing newline. Field order follows the struct
    /// definitions and maps are sorted, so equal inputs give equal bytes.
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::data(format!("report serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string()?)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }
}

/// Read any JSON value written by [`Report::write`] (or a bare payload).
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let raw =
        fs::read_to_string(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&raw).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}
