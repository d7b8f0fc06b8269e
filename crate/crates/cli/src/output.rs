//! Table rendering with an embedded replay config.
//!
//! CSV is the primary interchange: one table per file, a config comment
//! line, a header row, LF line endings, floats with 17 significant
//! digits so values survive a round trip through text.  The JSON form
//! carries the identical content as one object.

use crate::config::{ExperimentConfig, FormatTag};
use crate::error::{CliError, Result};

/// Prefix of the comment line carrying the replay config in CSV output.
pub const CONFIG_PREFIX: &str = "# config = ";

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Unsigned integer, serialized exactly.
    U(u64),
    /// Float, serialized with 17 significant digits.
    F(f64),
    /// Short token (route names, validity flags).  Must not contain
    /// commas, quotes, or line breaks; [`Table::push`] enforces this.
    S(String),
    /// No value (e.g. an evaluation time that does not exist).
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            Cell::F(v) => fmt_float(*v),
            Cell::S(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::U(v) => serde_json::json!(v),
            Cell::F(v) => serde_json::json!(v),
            Cell::S(s) => serde_json::json!(s),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A result table: column names plus rows of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Column names, plain lowercase tokens.
    pub columns: Vec<&'static str>,
    /// Data rows; every row has exactly `columns.len()` cells.
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// An empty table over the given columns.
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    /// Appends a row, checking arity and cell wellformedness.
    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Config(format!(
                "internal: row of {} cells in a {}-column table",
                row.len(),
                self.columns.len()
            )));
        }
        for cell in &row {
            if let Cell::S(s) = cell {
                if s.contains([',', '"', '\n', '\r']) {
                    return Err(CliError::Config(format!(
                        "internal: cell {s:?} needs quoting, which this format does not use"
                    )));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Serializes the table with the config embedded, per the config's
    /// format tag.
    pub fn render(&self, config: &ExperimentConfig) -> Result<String> {
        match config.format {
            FormatTag::Csv => self.render_csv(config),
            FormatTag::Json => self.render_json(config),
        }
    }

    fn render_csv(&self, config: &ExperimentConfig) -> Result<String> {
        let mut out = String::new();
        out.push_str(CONFIG_PREFIX);
        out.push_str(&config.to_json()?);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }

    fn render_json(&self, config: &ExperimentConfig) -> Result<String> {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect())
            .collect();
        let doc = serde_json::json!({
            "config": config,
            "columns": self.columns,
            "rows": rows,
        });
        let mut out = serde_json::to_string_pretty(&doc)?;
        out.push('\n');
        Ok(out)
    }
}

/// Recovers the embedded config from rendered output, either format.
pub fn extract_config(output: &str) -> Result<ExperimentConfig> {
    let trimmed = output.trim_start();
    if trimmed.starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(trimmed)?;
        let cfg = doc
            .get("config")
            .ok_or_else(|| CliError::Config("no config key in JSON output".into()))?;
        return Ok(serde_json::from_value(cfg.clone())?);
    }
    for line in output.lines() {
        if let Some(json) = line.strip_prefix(CONFIG_PREFIX) {
            return ExperimentConfig::from_json(json);
        }
    }
    Err(CliError::Config("no embedded config line in output".into()))
}
