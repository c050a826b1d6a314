//! CSV tables with a provenance header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Scientific notation with 15 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Set when a row failed; rows before it are still written.
    pub error: Option<String>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            error: None,
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn render(&self, provenance: &[String]) -> String {
        let mut out = String::new();
        for line in provenance {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "# error: {e}");
        }
        out
    }

    pub fn write(&self, dir: &Path, provenance: &[String]) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.render(provenance))?;
        Ok(path)
    }

    /// Values of a column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_layout() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![num(1.0), num(-2.5e-3)]);
        let s = t.render(&["config_sha256=abc".into()]);
        assert_eq!(s, "# config_sha256=abc\na,b\n1.00000000000000e0,-2.50000000000000e-3\n");
        assert_eq!(t.column("b").unwrap(), vec!["-2.50000000000000e-3"]);
    }
}
