use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Output file `name` under `prefix`: joined if `prefix` is a directory
/// (existing, or ending in a separator), otherwise `<prefix>_<name>`.
pub fn out_path(prefix: Option<&str>, name: &str) -> PathBuf {
    match prefix {
        None | Some("") => PathBuf::from(name),
        Some(p) if p.ends_with(std::path::MAIN_SEPARATOR) || p.ends_with('/') || Path::new(p).is_dir() => {
            Path::new(p).join(name)
        }
        Some(p) => PathBuf::from(format!("{p}_{name}")),
    }
}

/// Shortest round-trip representation; identical input gives identical text.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// A CSV table with one `#` provenance line above the header.
#[derive(Debug, Clone)]
pub struct Table {
    pub comment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(comment: String, header: Vec<String>) -> Self {
        Self {
            comment,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = format!("# {}\n", self.comment.replace('\n', " ")).into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&self.header).map_err(io)?;
            for r in &self.rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(buf)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_bytes()?)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_rules() {
        assert_eq!(out_path(None, "a.csv"), PathBuf::from("a.csv"));
        assert_eq!(out_path(Some("runs/"), "a.csv"), PathBuf::from("runs/a.csv"));
        assert_eq!(out_path(Some("runs/x"), "a.csv"), PathBuf::from("runs/x_a.csv"));
    }

    #[test]
    fn comment_precedes_header() {
        let mut t = Table::new("seed=1".into(), vec!["a".into(), "b".into()]);
        t.push(vec![num(1.5), num(0.0)]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "# seed=1\na,b\r\n1.5e0,0e0\r\n");
    }
}
