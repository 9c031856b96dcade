//! Invariant checks with measured residuals.

use std::fmt::Write as _;

/// Bound on `|S|²` above its pure-state value of 1/4.
pub const SPIN_LENGTH_TOL: f64 = 1e-10;
/// Bound on the components that vanish by symmetry in the antiferromagnet.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub inclusive: bool,
}

impl Check {
    /// Passes when `value < limit`.
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, inclusive: false }
    }

    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, inclusive: true }
    }

    pub fn passed(&self) -> bool {
        if self.inclusive {
            self.value <= self.limit
        } else {
            self.value < self.limit
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: AuditReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect()
    }

    /// One line per check: verdict, name, residual and bound.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let op = if c.inclusive { "<=" } else { "<" };
            let _ = writeln!(out, "{verdict} {} = {:.3e} ({op} {:.1e})", c.name, c.value, c.limit);
        }
        out
    }
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Checks every invariant that applies to a set of named columns.
///
/// Time must be finite and strictly increasing. Spin triples named
/// `S*{suffix}` must satisfy `|S|² <= 1/4 + 1e-10`, and `Mx`, `My`, `Lz`
/// must stay below `1e-8`.
pub fn audit_columns(names: &[String], columns: &[Vec<f64>]) -> Result<AuditReport, String> {
    let find = |n: &str| names.iter().position(|x| x == n);
    let t = find("t_fs").ok_or("missing t_fs column")?;
    let mut report = AuditReport::default();
    let non_finite = columns.iter().flatten().filter(|v| !v.is_finite()).count();
    report.push(Check::at_most("non_finite_values", non_finite as f64, 0.0));
    let backwards = columns[t].windows(2).filter(|w| !(w[1] > w[0])).count();
    report.push(Check::at_most("non_increasing_time_steps", backwards as f64, 0.0));
    for name in names {
        let Some(suffix) = name.strip_prefix("Sx") else { continue };
        let (Some(y), Some(z)) = (find(&format!("Sy{suffix}")), find(&format!("Sz{suffix}"))) else {
            return Err(format!("incomplete spin triple for column {name}"));
        };
        let x = find(name).expect("present");
        let excess = (0..columns[x].len())
            .map(|i| columns[x][i].powi(2) + columns[y][i].powi(2) + columns[z][i].powi(2) - 0.25)
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(Check::at_most(format!("spin_length_excess{suffix}"), excess.max(0.0), SPIN_LENGTH_TOL));
    }
    for name in ["Mx", "My", "Lz"] {
        if let Some(k) = find(name) {
            report.push(Check::below(format!("max_abs_{name}"), max_abs(&columns[k]), SYMMETRY_TOL));
        }
    }
    Ok(report)
}

/// Parses a CSV written by `run` and audits its columns.
pub fn audit_csv(text: &str) -> Result<AuditReport, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let names: Vec<String> =
        reader.headers().map_err(|e| e.to_string())?.iter().map(|s| s.trim().to_string()).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != names.len() {
            return Err(format!("row {} has {} fields, expected {}", row + 2, record.len(), names.len()));
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field.trim().parse().map_err(|_| format!("row {}: '{field}' is not a number", row + 2))?;
            col.push(v);
        }
    }
    if columns.first().is_none_or(|c| c.is_empty()) {
        return Err("no data rows".to_string());
    }
    audit_columns(&names, &columns)
}
