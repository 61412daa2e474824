//! CSV tables with a fixed column order and JSON mirrors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Self::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Self::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Self::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Self::Text(x)
    }
}

/// Seventeen significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(x) => format_float(*x),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(s) => escape(s),
                    Cell::Bool(b) => b.to_string(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// A command's result in both output shapes.
#[derive(Clone, Debug)]
pub struct Report {
    pub name: &'static str,
    pub table: Table,
    pub json: serde_json::Value,
}

impl Report {
    pub fn new(name: &'static str, table: Table, json: &impl Serialize) -> Result<Self, CliError> {
        let json = serde_json::to_value(json).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { name, table, json })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("values are finite or null");
                s.push('\n');
                s
            }
        }
    }

    /// Write `<dir>/<name>.<ext>`, or to stdout without a directory.
    pub fn emit(&self, format: Format, dir: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
        let text = self.render(format);
        match dir {
            Some(d) => {
                std::fs::create_dir_all(d)?;
                let path = d.join(format!("{}.{}", self.name, format.extension()));
                std::fs::write(&path, text)?;
                Ok(Some(path))
            }
            None => {
                print!("{text}");
                Ok(None)
            }
        }
    }
}
