//! Output documents, renderers and atomic file writes.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::commands::{EntangleReport, GhzReport, GrowReport};
use super::CliError;
use crate::budget::BudgetReport;

/// Bumped whenever a field of the JSON documents changes meaning or name.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that redirects relative output paths.
pub const OUTPUT_DIR_ENV: &str = "BLOCKADE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl Format {
    pub fn parse(raw: &str) -> Result<Self, CliError> {
        match raw {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(CliError::Config(format!("unknown format `{raw}` (expected csv, json or text)"))),
        }
    }

    /// Guess from a file extension, falling back to JSON.
    pub fn infer(path: Option<&Path>) -> Self {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("txt") => Format::Text,
            _ => Format::Json,
        }
    }
}

/// A table cell. Serialized untagged so rows read as plain JSON arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Null,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Null => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    /// Command evaluated at each row.
    pub over: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Growth trials that ran into the step cap, summed over rows.
    pub cap_hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "result", rename_all = "lowercase")]
pub enum Body {
    Entangle(EntangleReport),
    Ghz(GhzReport),
    Budget(Box<BudgetReport>),
    Grow(GrowReport),
    Sweep(Table),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub body: Body,
}

fn csv_text(table: &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).map_err(|e| CliError::Io(e.to_string()))?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_string)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn aligned(table: &Table) -> String {
    let cells: Vec<Vec<String>> =
        std::iter::once(table.columns.clone()).chain(table.rows.iter().map(|r| r.iter().map(Cell::to_string).collect())).collect();
    if table.rows.len() == 1 {
        let w = table.columns.iter().map(String::len).max().unwrap_or(0);
        return table.columns.iter().zip(&cells[1]).map(|(c, v)| format!("{c:<w$}  {v}\n")).collect();
    }
    let widths: Vec<usize> = (0..table.columns.len()).map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    cells
        .iter()
        .map(|r| {
            let line: Vec<String> = r.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
            format!("{}\n", line.join("  "))
        })
        .collect()
}

/// Renders a document. `table` is the flat view used for CSV and text.
pub fn render(doc: &Document, table: &Table, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => csv_text(table),
        Format::Text => Ok(match &doc.body {
            Body::Budget(r) => r.to_text(),
            _ => aligned(table),
        }),
    }
}

/// Resolves `path` against the output-directory override when relative.
pub fn resolve_output(path: &Path, override_dir: Option<&Path>) -> PathBuf {
    match override_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}
