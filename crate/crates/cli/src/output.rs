//! Artifact writers. CSV files start with `# key: value` comment lines,
//! then one header row. Wigner grids are CSV matrices (rows index `p`,
//! columns index `x`) with a JSON sidecar holding both axes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use paraqnd_core::fock::wigner::WignerGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Output directory that records every file written through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    /// Numeric table; each row must match `header` in length.
    pub fn write_csv<I>(&mut self, rel: &str, comments: &[(&str, String)], header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut buf = comment_block(comments);
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(csv_err)?;
            for row in rows {
                debug_assert_eq!(row.len(), header.len());
                w.write_record(row.iter().map(|v| fmt_num(*v))).map_err(csv_err)?;
            }
            w.flush()?;
        }
        self.write_bytes(rel, &buf)
    }

    /// `<stem>.csv` with `W(x_j, p_i)` in row `i`, column `j`, and
    /// `<stem>.axes.json` with the axes.
    pub fn write_wigner(&mut self, stem: &str, grid: &WignerGrid, comments: &[(&str, String)]) -> Result<(), CliError> {
        let mut all = vec![
            ("quantity", "Wigner function W(x, p) of a normalised state; the window may crop it".to_string()),
            ("layout", "row i is p = p[i], column j is x = x[j]; axes in the sidecar".to_string()),
        ];
        all.extend(comments.iter().cloned());
        let mut buf = comment_block(&all);
        {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
            for j in 0..grid.ps.len() {
                w.write_record((0..grid.xs.len()).map(|i| fmt_num(grid.values[[i, j]])))
                    .map_err(csv_err)?;
            }
            w.flush()?;
        }
        self.write_bytes(&format!("{stem}.csv"), &buf)?;
        let axes = WignerAxes {
            x: grid.xs.clone(),
            p: grid.ps.clone(),
            rows: "p".into(),
            columns: "x".into(),
            window_integral: grid.normalization(),
            min_value: grid.min_value(),
        };
        self.write_json(&format!("{stem}.axes.json"), &axes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerAxes {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub rows: String,
    pub columns: String,
    /// Integral of `W` over the window; below 1 when the window crops the state.
    pub window_integral: f64,
    pub min_value: f64,
}

fn comment_block(comments: &[(&str, String)]) -> Vec<u8> {
    let mut s = String::new();
    for (k, v) in comments {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s.into_bytes()
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}
