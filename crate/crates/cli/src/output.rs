use std::io::Write;

use crate::error::CliError;

/// 17 significant digits, enough to read back the same double.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Prepends a constant column, used to label sweep blocks.
    pub fn labelled(mut self, name: &str, value: &str) -> Self {
        self.header.insert(0, name.to_string());
        for r in &mut self.rows {
            r.insert(0, value.to_string());
        }
        self
    }

    /// Writes CSV; a reader that stops early (closed pipe) is not an error.
    pub fn write(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let result = std::iter::once(&self.header)
            .chain(&self.rows)
            .try_for_each(|r| w.write_record(r))
            .and_then(|_| w.flush().map_err(csv::Error::from));
        match result {
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe) => Ok(()),
            other => Ok(other?),
        }
    }
}
