//! Output files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub config: &'a serde_json::Value,
    pub elapsed_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

/// Collects outputs of one invocation and writes the manifest at the end.
pub struct Sink {
    out: Option<PathBuf>,
    written: Vec<OutputFile>,
    started: Instant,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Sink {
            out,
            written: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Main result: to `--out` when given, stdout otherwise.
    pub fn primary(&mut self, bytes: &[u8]) -> Result<()> {
        match self.out.clone() {
            Some(path) => self.file(&path, bytes),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    pub fn file(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(OutputFile {
            path: path.to_path_buf(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes `<out>.manifest.json` when `--out` was given.
    pub fn finish(self, command: &str, seed: Option<u64>, config: &serde_json::Value) -> Result<()> {
        let Some(out) = &self.out else {
            return Ok(());
        };
        let manifest = RunManifest {
            tool: "girthlab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            config,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.written,
        };
        let mut path = out.clone().into_os_string();
        path.push(".manifest.json");
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).with_context(|| format!("cannot write {}", Path::new(&path).display()))?;
        Ok(())
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(value)? + "\n").into_bytes())
}

/// CSV with a header; values written with 17 significant digits.
pub fn csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out.into_bytes()
}
