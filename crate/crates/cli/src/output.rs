//! Deterministic CSV and JSON rendering.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use dipole_core::observables::DensityGrid;
use dipole_core::Float;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One table cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    /// Arbitrary-precision value printed with the given significant digits.
    Big(Float, usize),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_f64(*v),
            Cell::Text(s) => s.clone(),
            Cell::Big(v, digits) => format_big(v, *digits),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) => json!(v),
            Cell::Text(s) => json!(s),
            // Beyond double precision a JSON number would silently round.
            Cell::Big(v, digits) if *digits <= 17 => json!(v.to_f64()),
            Cell::Big(v, digits) => json!(format_big(v, *digits)),
        }
    }
}

/// 17 significant digits: enough to round-trip a double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_big(v: &Float, digits: usize) -> String {
    v.to_string_radix(10, Some(digits.max(1)))
}

pub struct Table {
    pub metadata: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(metadata: Map<String, Value>, columns: Vec<&'static str>) -> Self {
        Table { metadata, columns, rows: Vec::new() }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let values: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                pretty(&json!({ "metadata": self.metadata, "values": values }))
            }
        }
    }
}

pub fn render_grid(grid: &DensityGrid, metadata: Map<String, Value>, format: Format) -> String {
    match format {
        Format::Json => pretty(&json!({ "metadata": metadata, "values": grid.values })),
        Format::Csv => {
            let mut out = String::from("x,y,density\n");
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        format_f64(grid.x(ix)),
                        format_f64(grid.y(iy)),
                        format_f64(grid.value(ix, iy))
                    ));
                }
            }
            out
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

/// Writes to `path`, or stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_tables() {
        let mut meta = Map::new();
        meta.insert("command".into(), json!("solve"));
        let mut t = Table::new(meta, vec!["index", "epsilon"]);
        t.rows.push(vec![Cell::Int(1), Cell::Num(-0.5)]);
        assert_eq!(t.render(Format::Csv), "index,epsilon\n1,-5.0000000000000000e-1\n");
        let v: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v["values"][0]["epsilon"], json!(-0.5));
        assert_eq!(v["metadata"]["command"], json!("solve"));
    }

    #[test]
    fn big_values_keep_digits() {
        let x = Float::with_val(256, 1) / 3u32;
        let c = Cell::Big(x, 30);
        assert_eq!(c.csv(), "3.33333333333333333333333333333e-1");
        assert!(c.json().is_string());
    }
}
