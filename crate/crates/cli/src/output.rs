//! Deterministic CSV emission.
//!
//! Every table is a pure function of (config, seed), so equal inputs must
//! produce equal bytes. Three conventions make that byte-testable:
//!
//! * the file starts with one metadata comment line
//!
//!   ```text
//!   # schema_version=1 seed=42 grid_hash=8f3a1c0d9b2e4f56
//!   ```
//!
//!   where the grid hash digests the command name and the canonical JSON
//!   form of the fully resolved config,
//! * floats are printed with 17 significant digits (the shortest count that
//!   pins every f64 bit pattern), `nan` for NaN,
//! * line endings are LF and the encoding is UTF-8, on every platform.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

/// One CSV cell.
#[derive(Clone, Debug)]
pub enum Field {
    /// Unsigned integer, printed in full.
    UInt(u64),
    /// Floating-point value, printed with 17 significant digits.
    Float(f64),
    /// Literal string; must not contain commas or line breaks.
    Str(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::UInt(v) => v.to_string(),
            Field::Float(v) => format_float(*v),
            Field::Str(s) => {
                debug_assert!(
                    !s.contains(',') && !s.contains('\n'),
                    "string cells must not need CSV escaping: {s:?}"
                );
                s.clone()
            }
        }
    }
}

/// Formats one float with 17 significant digits; `nan` for NaN so the token
/// is stable across platforms (the sign of a NaN is not meaningful).
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// First 16 hex characters of SHA-256 over the command name and the
/// canonical config JSON; recorded in every output so a table can be traced
/// back to the exact grid that produced it.
pub fn grid_hash(command: &str, canonical_json: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical_json.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// A complete CSV table: metadata, header, and rows.
#[derive(Clone, Debug)]
pub struct Table {
    pub schema_version: u32,
    pub seed: u64,
    pub grid_hash: String,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    /// Renders the table to its exact byte content.
    pub fn render(&self) -> String {
        let mut text = format!(
            "# schema_version={} seed={} grid_hash={}\n",
            self.schema_version, self.seed, self.grid_hash
        );
        text.push_str(&self.columns.join(","));
        text.push('\n');
        for row in &self.rows {
            assert_eq!(
                row.len(),
                self.columns.len(),
                "row width must match the header: {row:?}"
            );
            let cells: Vec<String> = row.iter().map(Field::render).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        text
    }

    /// Writes the rendered table into `dir/file_name`, creating the
    /// directory if needed, and returns the full path.
    pub fn write(&self, dir: &Path, file_name: &str) -> anyhow::Result<PathBuf> {
        write_text(dir, file_name, &self.render())
    }
}

/// Writes a text artifact (a table or a plot script) under `dir`.
pub fn write_text(dir: &Path, file_name: &str, content: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(file_name);
    fs::write(&path, content.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
