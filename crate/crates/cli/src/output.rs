use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::table::Table;
use crate::{CliError, CliResult, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: String,
    pub seed: u64,
    pub output_directory: String,
    pub tool_version: String,
    pub wall_clock_s: f64,
    pub exit_code: i32,
}

/// Files produced by a command, held in memory until [`Output::flush`].
pub struct Output {
    dir: PathBuf,
    stamp: bool,
    files: Vec<(String, Vec<u8>)>,
}

/// Pretty JSON with object keys in sorted order and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

impl Output {
    pub fn new(dir: PathBuf, stamp: bool) -> Self {
        Self {
            dir,
            stamp,
            files: Vec::new(),
        }
    }

    /// Timestamp line for figures, present only when requested.
    pub fn stamp(&self) -> Option<String> {
        self.stamp.then(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            format!("generated at unix time {secs}")
        })
    }

    pub fn text(&mut self, name: &str, content: String) {
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), content.into_bytes()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let s = to_sorted_json(value)?;
        self.text(name, s);
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.json`.
    pub fn table(&mut self, stem: &str, table: &Table, format: Format) -> CliResult<()> {
        match format {
            Format::Csv => {
                let s = table.to_csv()?;
                self.text(&format!("{stem}.csv"), s);
                Ok(())
            }
            Format::Json => self.json(&format!("{stem}.json"), &table.to_records()),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every pending file through a temporary name and a rename.
    pub fn flush(&mut self) -> CliResult<()> {
        let io = |e: std::io::Error, p: &PathBuf| CliError::Input(format!("{}: {e}", p.display()));
        fs::create_dir_all(&self.dir).map_err(|e| io(e, &self.dir))?;
        for (name, bytes) in self.files.drain(..) {
            let path = self.dir.join(&name);
            let tmp = self.dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, &bytes).map_err(|e| io(e, &tmp))?;
            fs::rename(&tmp, &path).map_err(|e| io(e, &path))?;
        }
        Ok(())
    }
}
