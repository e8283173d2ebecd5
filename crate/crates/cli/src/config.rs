//! Flat key=value run configuration.
//!
//! One `key = value` pair per line; blank lines and `#` comments are
//! skipped. Keys are the long flag names without the leading dashes,
//! so every file entry has a command-line twin and flags win on
//! conflict. Keys the active subcommand does not accept are errors,
//! as are duplicates: a typo must never silently fall back to a
//! default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

pub struct FileConfig {
    path: PathBuf,
    values: BTreeMap<String, String>,
}

impl FileConfig {
    /// Stand-in when no `--config` was given; merges resolve to the
    /// flag value or the built-in default.
    pub fn empty() -> Self {
        FileConfig {
            path: PathBuf::new(),
            values: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let position = format!("{}:{}", path.display(), index + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{position}: expected `key = value`, got `{line}`"
                )));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Usage(format!("{position}: empty key")));
            }
            let value = value.trim().to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Usage(format!("{position}: duplicate key `{key}`")));
            }
        }
        Ok(FileConfig {
            path: path.to_path_buf(),
            values,
        })
    }

    /// Consumes `key` and resolves it against the flag value: a present
    /// flag wins, otherwise the file entry is parsed as `T`.
    pub fn merge<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file_value = self.values.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match file_value {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                CliError::Usage(format!(
                    "{}: key `{key}`: invalid value `{raw}`: {e}",
                    self.path.display()
                ))
            }),
        }
    }

    /// Every key must have been merged by now; leftovers are unknown to
    /// the active subcommand.
    pub fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.values.keys().next() {
            return Err(CliError::Usage(format!(
                "{}: unknown key `{key}`",
                self.path.display()
            )));
        }
        Ok(())
    }
}
