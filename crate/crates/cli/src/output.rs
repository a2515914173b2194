//! Result emission: files are accumulated in memory and written together
//! once a run has fully succeeded, so failed runs leave no partial
//! output. All CSV numbers carry 17 significant digits; reruns with the
//! same configuration are byte-identical.

use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// 17-significant-digit formatting used in every CSV cell.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        OutputSet::default()
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Io(format!("serializing {name}: {e}")))?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn add_csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) {
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// Every run directory carries a manifest echoing the exact resolved
/// configuration and seed; no timestamps, so reruns stay byte-identical.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
}

pub fn manifest<'a>(command: &'a str, config: &'a RunConfig) -> Manifest<'a> {
    Manifest {
        artifact: "spherical-chaos",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: config.seed,
        config,
    }
}
