use std::io::Write;
use std::path::Path;

use crate::errors::CliError;

/// All floats are serialized with nine significant digits in scientific
/// notation, which round-trips the values used by the tolerance checks and
/// keeps repeated runs byte-identical.
pub fn num(v: f64) -> String {
    format!("{:.9e}", v)
}

pub struct CsvFile {
    lines: Vec<String>,
}

impl CsvFile {
    /// `schema` names the layout, e.g. "uavtour.solve.v1"; consumers can
    /// dispatch on it without guessing from headers.
    pub fn new(schema: &str, header: &str) -> Self {
        Self {
            lines: vec![format!("# schema: {schema}"), header.to_string()],
        }
    }

    pub fn row(&mut self, cols: &[String]) {
        self.lines.push(cols.join(","));
    }

    pub fn write_to(&self, out: Option<&Path>) -> Result<(), CliError> {
        let body = self.lines.join("\n") + "\n";
        match out {
            Some(path) => std::fs::write(path, body)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            None => {
                std::io::stdout()
                    .write_all(body.as_bytes())
                    .map_err(|e| CliError::Io(e.to_string()))?;
                Ok(())
            }
        }
    }
}
