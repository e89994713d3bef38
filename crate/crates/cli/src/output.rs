//! Deterministic JSON and CSV artifacts.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::CliError;

/// Pretty JSON with every float at 17 significant digits.
struct Scientific<'a>(PrettyFormatter<'a>);

impl Formatter for Scientific<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", float(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `{:.16e}`: 17 significant digits, which round-trips every `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Scientific(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| CliError::Output(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// A named CSV table; cells are preformatted strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("table_{}.csv", self.name)
    }

    /// CSV text preceded by a comment line naming the manifest hash.
    pub fn render(&self, manifest_sha256: &str) -> Result<String, CliError> {
        let mut out = format!("# manifest_sha256={manifest_sha256}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let err = |e: csv::Error| CliError::Output(e.to_string());
            w.write_record(&self.header).map_err(err)?;
            for row in &self.rows {
                w.write_record(row).map_err(err)?;
            }
            w.flush().map_err(|e| CliError::Output(e.to_string()))?;
        }
        String::from_utf8(out).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn write(&self, dir: &Path, manifest_sha256: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(self.file_name());
        write_file(&path, self.render(manifest_sha256)?.as_bytes())?;
        Ok(path)
    }
}

/// Optional float cell; empty when absent.
pub fn cell(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}
