//! CSV artifacts with fixed 12-significant-digit rendering.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Renders `x` like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One output file: a header and rows of finite numbers whose first column
/// strictly increases.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvArtifact {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvArtifact {
    pub fn new(name: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), CliError> {
        if row.len() != self.header.len() {
            return Err(CliError::Artifact(format!(
                "{}: row has {} columns, header has {}",
                self.name,
                row.len(),
                self.header.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Artifact(format!("{}: non-finite value {v} at {}", self.name, row[0])));
        }
        if let Some(last) = self.rows.last() {
            if row[0] <= last[0] {
                return Err(CliError::Artifact(format!(
                    "{}: first column not increasing ({} after {})",
                    self.name, row[0], last[0]
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_g12(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(&self.name);
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}
