//! Deterministic table emission. Two runs of the same config produce
//! byte-identical output: metadata is sorted, floats use a fixed `%.12e`
//! rendering in CSV, and nothing time- or path-dependent enters the table.

use std::collections::BTreeMap;

use crate::config::OutputFormat;

/// One table cell: numeric for measured values, text for labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// A rectangular result table with a metadata echo of the config that
/// produced it.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl RunResult {
    pub fn new(columns: Vec<String>, metadata: BTreeMap<String, String>) -> Self {
        Self { columns, rows: Vec::new(), metadata }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "ragged result row");
        self.rows.push(row);
    }
}

/// Fixed scientific notation with 12 fractional digits and a signed
/// two-digit exponent (`1.234567890123e+02`). Negative zero is folded into
/// zero so algebraically-zero outputs are stable bytes.
pub fn fmt_sci(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("{:e} always carries an exponent");
    let e: i32 = exp.parse().expect("exponent is an integer");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn cell_csv(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => fmt_sci(*x),
        Cell::Text(s) => {
            debug_assert!(
                !s.contains(',') && !s.contains('\n'),
                "text cells must not need CSV quoting"
            );
            s.clone()
        }
    }
}

/// Render the table in the requested format.
pub fn emit(result: &RunResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => emit_csv(result),
        OutputFormat::Json => emit_json(result),
    }
}

/// CSV: `# key = value` metadata lines, a header row, then one `%.12e` row
/// per sample, with `\n` endings throughout.
fn emit_csv(result: &RunResult) -> String {
    let mut out = String::new();
    for (key, value) in &result.metadata {
        out.push_str("# ");
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(value);
        out.push('\n');
    }
    out.push_str(&result.columns.join(","));
    out.push('\n');
    for row in &result.rows {
        let line: Vec<String> = row.iter().map(cell_csv).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// JSON object with `columns`, `metadata`, and `rows`; key order is sorted,
/// so repeated runs serialize identically.
fn emit_json(result: &RunResult) -> String {
    let columns: Vec<serde_json::Value> = result
        .columns
        .iter()
        .map(|c| serde_json::Value::String(c.clone()))
        .collect();
    let metadata: serde_json::Map<String, serde_json::Value> = result
        .metadata
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let rows: Vec<serde_json::Value> = result
        .rows
        .iter()
        .map(|row| {
            serde_json::Value::Array(
                row.iter()
                    .map(|cell| match cell {
                        Cell::Num(x) => serde_json::Number::from_f64(*x)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null),
                        Cell::Text(s) => serde_json::Value::String(s.clone()),
                    })
                    .collect(),
            )
        })
        .collect();
    let mut object = serde_json::Map::new();
    object.insert("columns".into(), serde_json::Value::Array(columns));
    object.insert("metadata".into(), serde_json::Value::Object(metadata));
    object.insert("rows".into(), serde_json::Value::Array(rows));
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(object))
        .expect("tables serialize");
    text.push('\n');
    text
}
