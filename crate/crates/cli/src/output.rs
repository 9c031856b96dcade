//! CSV rendering, downsampling and the column manifest.

use std::fmt::Write as _;

/// A table of equally long columns written as one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvFile {
    pub file_name: String,
    /// Column name and unit.
    pub columns: Vec<(String, &'static str)>,
    pub data: Vec<Vec<f64>>,
}

impl CsvFile {
    pub fn new(file_name: impl Into<String>) -> Self {
        CsvFile { file_name: file_name.into(), columns: Vec::new(), data: Vec::new() }
    }

    pub fn column(mut self, name: impl Into<String>, unit: &'static str, values: Vec<f64>) -> Self {
        self.columns.push((name.into(), unit));
        self.data.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    /// Header row, then one row per sample in 17-digit scientific notation.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.rows() {
            for (k, col) in self.data.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{:.16e}", col[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn manifest_line(&self) -> String {
        let cols: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect();
        format!("{}: {}", self.file_name, cols.join(", "))
    }
}

/// Indices of the first sample at or after each multiple of `step` past the
/// first time, plus the final sample.
pub fn sample_indices(t: &[f64], step: f64) -> Vec<usize> {
    let Some(&t0) = t.first() else { return Vec::new() };
    let mut out = vec![0];
    let mut next = 1.0;
    for (i, &x) in t.iter().enumerate().skip(1) {
        if x - t0 >= next * step - 1e-9 * step {
            out.push(i);
            next = ((x - t0) / step + 1e-9).floor() + 1.0;
        }
    }
    if *out.last().expect("non-empty") != t.len() - 1 {
        out.push(t.len() - 1);
    }
    out
}

pub fn pick(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

/// `manifest.txt` listing every file with its columns and units, sorted by name.
pub fn manifest(mut lines: Vec<String>) -> String {
    lines.sort();
    let mut out = String::from("# file: column [unit], ...\n");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}
