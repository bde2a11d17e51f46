use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Tsv,
}

/// One line of the long-form table: a named quantity, an optional support
/// point and a value.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub quantity: &'static str,
    pub x: Option<usize>,
    pub value: String,
}

impl Row {
    pub fn at(quantity: &'static str, x: usize, value: impl ToString) -> Self {
        Self { quantity, x: Some(x), value: value.to_string() }
    }

    pub fn scalar(quantity: &'static str, value: impl ToString) -> Self {
        Self { quantity, x: None, value: value.to_string() }
    }
}

/// A command's result: the JSON document and the same content as rows.
pub struct Report {
    pub json: Value,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(json: &impl Serialize, rows: Vec<Row>) -> Self {
        Self {
            json: serde_json::to_value(json).expect("report serializes"),
            rows,
        }
    }

    pub fn render(&self, format: Format) -> String {
        let sep = match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("report serializes");
                s.push('\n');
                return s;
            }
            Format::Csv => ',',
            Format::Tsv => '\t',
        };
        let mut out = format!("quantity{sep}x{sep}value\n");
        for r in &self.rows {
            let x = r.x.map(|x| x.to_string()).unwrap_or_default();
            writeln!(out, "{}{sep}{x}{sep}{}", r.quantity, r.value).unwrap();
        }
        out
    }
}
