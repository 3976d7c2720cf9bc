use std::fs;
use std::path::{Path, PathBuf};

use pathparam::io::Table;
use serde::Serialize;

use crate::Format;

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<pathparam::Error> for Failure {
    fn from(e: pathparam::Error) -> Self {
        if e.is_data_error() {
            Failure::data(e.to_string())
        } else {
            Failure::numerical(e.to_string())
        }
    }
}

/// Files rendered in memory and written only once the whole command has
/// succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    pub messages: Vec<String>,
}

impl Outputs {
    pub fn say(&mut self, line: impl Into<String>) {
        self.messages.push(line.into());
    }

    pub fn table(&mut self, stem: &str, table: &Table, format: Format) -> Result<(), Failure> {
        let bytes = match format {
            Format::Csv => {
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                buf
            }
            Format::Json => table.to_json()?.into_bytes(),
        };
        self.files.push((format!("{stem}.{}", format.extension()), bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::numerical(e.to_string()))?;
        text.push('\n');
        self.files.push((name.to_string(), text.into_bytes()));
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    /// Writes every file next to its target and renames them into place;
    /// on failure the staged files are removed.
    pub fn commit(&self, dir: &Path) -> Result<(), Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                let _ = fs::remove_file(&tmp);
                cleanup(&staged);
                return Err(Failure::data(format!("cannot write {}: {e}", target.display())));
            }
            staged.push((tmp, target));
        }
        for (i, (tmp, target)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, target) {
                cleanup(&staged[i..]);
                return Err(Failure::data(format!("cannot write {}: {e}", target.display())));
            }
        }
        Ok(())
    }
}
