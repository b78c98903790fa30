//! Plot-ready CSV: `#` metadata lines, one header row, then data rows.
//! Floats use Rust's shortest round-trip exponent form.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct Csv {
    meta: Vec<String>,
    header: String,
    rows: String,
    columns: usize,
}

impl Csv {
    pub fn new(command: &str, config_hash: &str, header: &[&str]) -> Self {
        Self {
            meta: vec![
                format!("polarosc {} command={command}", env!("CARGO_PKG_VERSION")),
                format!("config_sha256={config_hash}"),
            ],
            header: header.join(","),
            rows: String::new(),
            columns: header.len(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl Display) -> Self {
        self.meta.push(format!("{key}={value}"));
        self
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.rows.push_str(&line.join(","));
        self.rows.push('\n');
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            out.push_str("# ");
            out.push_str(m);
            out.push('\n');
        }
        out.push_str(&self.header);
        out.push('\n');
        out.push_str(&self.rows);
        out
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = dir.join(name);
        std::fs::write(&path, self.render()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:e}"),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(v) => v.clone(),
        }
    }
}
