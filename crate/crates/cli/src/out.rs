//! Deterministic file emission.
//!
//! Report JSON and CSV files are byte-stable functions of (config, seed):
//! sorted maps, shortest round-trip float formatting, no timestamps.  Wall
//! clocks live only in the `run_meta.json` sidecar.

use poisson_dn::{CoreError, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root)
            .map_err(|e| CoreError::Config(format!("{}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Pretty-printed JSON document plus a trailing newline.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CoreError::Config(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// UTF-8 CSV with a header row; rows are preformatted (period decimal
    /// separators come from Rust's float formatting).
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let mut text = String::with_capacity(header.len() + 16 * rows.len());
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Timestamp sidecar — the only emitted file that is not a pure
    /// function of (config, seed).
    pub fn write_meta(&self, command: &str, config: &Path, elapsed: Duration) -> Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            command: &'a str,
            config: String,
            epoch_seconds: u64,
            elapsed_seconds: f64,
        }
        let meta = Meta {
            command,
            config: config.display().to_string(),
            epoch_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_seconds: elapsed.as_secs_f64(),
        };
        self.write_json("run_meta.json", &meta)?;
        Ok(())
    }
}

/// Shortest round-trip decimal rendering of a float (CSV cells).
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
