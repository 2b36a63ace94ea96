//! Rendering of command results as text, JSON or CSV.

use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::error::CliError;

/// Version written as `# schema=N` at the top of CSV files and as `"schema"`
/// in JSON documents.
pub const SCHEMA: u32 = 1;

const CSV_DIGITS: usize = 9;
const TEXT_DIGITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Str(String),
    Bool(bool),
    Null,
}

impl Cell {
    fn render(&self, digits: usize) -> String {
        match self {
            Cell::Num(v) => format_sig(*v, digits),
            Cell::Int(v) => v.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Str(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Line {
    Row(Vec<Cell>),
    /// Emitted as `# text` in CSV and text output, skipped in JSON.
    Comment(String),
}

/// Result of one command.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: &'static str,
    pub header: Vec<&'static str>,
    pub lines: Vec<Line>,
    /// Comment lines written right after the schema line of a CSV file.
    pub preamble: Vec<String>,
    /// Replaces the rows in JSON output.
    pub json_records: Option<Vec<Value>>,
    /// Replaces the table in text output.
    pub text: Option<String>,
    /// Text output is the bare value of the single cell.
    pub scalar: bool,
    /// Set when the output is complete but the command should exit nonzero.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, header: &[&'static str]) -> Self {
        Self {
            command,
            header: header.to_vec(),
            ..Self::default()
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.lines.push(Line::Row(cells));
    }

    fn rows(&self) -> impl Iterator<Item = &Vec<Cell>> {
        self.lines.iter().filter_map(|l| match l {
            Line::Row(r) => Some(r),
            Line::Comment(_) => None,
        })
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Text => Ok(self.render_text()),
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_text(&self) -> String {
        if let Some(t) = &self.text {
            return t.clone();
        }
        if self.scalar {
            if let Some(c) = self.rows().next().and_then(|r| r.last()) {
                let s = c.render(TEXT_DIGITS);
                return format!("{}\n", if s.is_empty() { "none" } else { &s });
            }
        }
        let cells: Vec<Vec<String>> = self
            .rows()
            .map(|r| r.iter().map(|c| c.render(TEXT_DIGITS)).collect())
            .collect();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &cells {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let join = |items: Vec<&str>| -> String {
            let mut s = items
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ");
            s.truncate(s.trim_end().len());
            s.push('\n');
            s
        };
        let mut out = join(self.header.clone());
        let mut rows = cells.iter();
        for line in &self.lines {
            match line {
                Line::Comment(c) => out.push_str(&format!("# {c}\n")),
                Line::Row(_) => {
                    let r = rows.next().expect("one rendered row per row line");
                    out.push_str(&join(r.iter().map(String::as_str).collect()));
                }
            }
        }
        out
    }

    fn render_json(&self) -> Result<String, CliError> {
        let records = match &self.json_records {
            Some(r) => r.clone(),
            None => self
                .rows()
                .map(|r| {
                    let mut m = Map::new();
                    for (k, c) in self.header.iter().zip(r) {
                        m.insert(k.to_string(), c.to_json());
                    }
                    Value::Object(m)
                })
                .collect(),
        };
        let doc = json!({
            "schema": SCHEMA,
            "command": self.command,
            "records": records,
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    fn render_csv(&self) -> Result<String, CliError> {
        let mut out = format!("# schema={SCHEMA}\n");
        for p in &self.preamble {
            out.push_str(&format!("# {p}\n"));
        }
        out.push_str(&csv_line(self.header.iter().map(|h| h.to_string()))?);
        for line in &self.lines {
            match line {
                Line::Comment(c) => out.push_str(&format!("# {c}\n")),
                Line::Row(r) => out.push_str(&csv_line(r.iter().map(|c| c.render(CSV_DIGITS)))?),
            }
        }
        Ok(out)
    }
}

fn csv_line(fields: impl Iterator<Item = String>) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields)?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("fields are UTF-8"))
}

/// `digits` significant digits, fixed notation for decimal exponents in
/// `[-5, digits)` and scientific otherwise, trailing zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
