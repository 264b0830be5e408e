//! Result tables and their CSV form.
//!
//! CSV dialect: comma separated, `.` decimal, header `name[unit]`, `\n` line
//! ends, every value in scientific notation with 12 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use motionsim_core::FitResult;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// `1` for dimensionless columns.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self { name: name.to_string(), unit: unit.to_string() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub schema: String,
    pub config_sha256: String,
    pub engine_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub fits: BTreeMap<String, FitResult>,
    /// Derived single numbers (fitted frequencies, fidelities, ...).
    pub scalars: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return config_err("a result table needs at least one column");
        }
        if let Some(c) = columns.iter().find(|c| c.unit.is_empty()) {
            return config_err(format!("column {} has no unit", c.name));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
            return config_err(format!("row of length {} in a {}-column table", r.len(), columns.len()));
        }
        Ok(Self { columns, rows, metadata: Metadata::default() })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.metadata.scalars.get(name).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = self.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, &v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{}", format_value(v)).expect("writing to a String");
            }
            s.push('\n');
        }
        s
    }
}

/// 12 significant digits, scientific notation; `-0` is written as `0`.
pub fn format_value(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}
