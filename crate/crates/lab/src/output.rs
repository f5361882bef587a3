//! Schema-versioned CSV and text artifacts, written atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};

pub const TOOL: &str = concat!("cqed-lab ", env!("CARGO_PKG_VERSION"));

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e6)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `#` metadata lines, a header row, data rows and `#` footer lines.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    pub meta: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Vec<(String, f64)>,
}

impl CsvTable {
    pub fn new(schema: &str, seed: u64, derived: &[(String, f64)], echo: &[String], columns: Vec<&'static str>) -> Self {
        let mut meta = vec![format!("schema: {schema}"), format!("tool: {TOOL}"), format!("seed: {seed}")];
        meta.extend(derived.iter().map(|(k, v)| format!("derived: {k} = {}", fmt_f64(*v))));
        meta.extend(echo.iter().map(|l| format!("config: {l}")));
        Self { meta, columns, rows: Vec::new(), footer: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn footer(&mut self, key: impl Into<String>, value: f64) {
        self.footer.push((key.into(), value));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for m in &self.meta {
            writeln!(s, "# {m}").unwrap();
        }
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        for (k, v) in &self.footer {
            writeln!(s, "# {k} = {}", fmt_f64(*v)).unwrap();
        }
        s
    }
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so an interrupted run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<PathBuf> {
    let io = |source| LabError::Io { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(path.to_path_buf())
}
