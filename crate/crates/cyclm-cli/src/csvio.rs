//! CSV emission and ingestion with a pinned, reproducible format:
//! '.' decimal separator, '\n' line endings, a header row, and reals
//! printed with 17 significant digits (scientific notation), which
//! round-trips every finite f64 exactly.

use std::path::Path;

use crate::CliError;

/// 17 significant digits: one leading digit plus 16 after the point.
/// This is enough for exact f64 round-trips and, unlike shortest-form
/// printing, always produces the same width and shape.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Incremental CSV builder; `row` panics on an arity mismatch because that
/// is a programming error in the caller, not a data error.
pub struct Csv {
    text: String,
    cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text, cols: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.cols, "CSV row arity mismatch");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))
}

/// Read a CSV with exactly the expected header; returns column-major floats.
/// Accepts '\r\n' input line endings, but the header names must match.
pub fn read_csv_columns(path: &Path, expected_header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::runtime(format!("{}: empty file", path.display())))?;
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != expected_header {
        return Err(CliError::runtime(format!(
            "{}: expected header {:?}, got {:?}",
            path.display(),
            expected_header.join(","),
            header
        )));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); expected_header.len()];
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected_header.len() {
            return Err(CliError::runtime(format!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                i + 2,
                cells.len(),
                expected_header.len()
            )));
        }
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::runtime(format!(
                    "{}: row {} column {:?}: {cell:?} is not a number",
                    path.display(),
                    i + 2,
                    expected_header[c]
                ))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}
