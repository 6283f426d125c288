//! Artifact writers. Every file goes through [`Sink`] so the list of written
//! paths is returned in creation order.

use crate::config::{Format, OutputConfig};
use serde::Serialize;
use std::io;
use std::path::PathBuf;

pub struct Sink<'a> {
    out: &'a OutputConfig,
    written: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    pub fn new(out: &'a OutputConfig) -> io::Result<Self> {
        std::fs::create_dir_all(&out.directory)?;
        Ok(Self { out, written: Vec::new() })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.out.wants(f)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.directory.join(name);
        self.written.push(p.clone());
        p
    }

    /// Writes `rows` under `header` if CSV output is enabled.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()
    }

    /// Pretty-printed JSON if JSON output is enabled.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(self.path(name), text)
    }

    pub fn svg(&mut self, name: &str, doc: &str) -> io::Result<()> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        std::fs::write(self.path(name), doc)
    }

    /// Raw binary, written regardless of the format list.
    pub fn bytes(&mut self, name: &str, data: &[u8]) -> io::Result<()> {
        std::fs::write(self.path(name), data)
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
