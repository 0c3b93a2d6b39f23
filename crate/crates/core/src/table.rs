//! CSV tables with `#` comment headers and fixed significant digits.
//!
//! Rows are formatted only after every value is known, and files are written
//! through a temporary sibling and a rename, so a failed run never leaves a
//! partial file behind.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Significant digits of every numeric cell.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    /// Empty field.
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_owned())
    }
}

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits in
/// scientific notation (`nan`, `inf`, `-inf` for non-finite values).
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
    }
}

fn escape(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(t) => escape(t),
            Cell::Missing => String::new(),
        }
    }
}

/// A header row, data rows and leading comment lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            comments: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Adds a `# ` line; embedded newlines become separate comment lines.
    pub fn comment(&mut self, line: impl AsRef<str>) {
        self.comments
            .extend(line.as_ref().lines().map(str::to_owned));
    }

    /// Inserts comment lines ahead of the existing ones.
    pub fn prepend_comments<S: Into<String>>(&mut self, lines: impl IntoIterator<Item = S>) {
        let mut front: Vec<String> = lines.into_iter().map(Into::into).collect();
        front.append(&mut self.comments);
        self.comments = front;
    }

    /// Appends a row, which must match the header width.
    pub fn push(&mut self, row: Vec<Cell>) -> io::Result<()> {
        if row.len() != self.header.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!(
                    "row has {} fields, header has {}",
                    row.len(),
                    self.header.len()
                ),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let header: Vec<String> = self.header.iter().map(|h| escape(h)).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Writes the CSV to `path` through a temporary file in the same
    /// directory and an atomic rename.
    pub fn write_atomic(&self, path: &Path) -> io::Result<()> {
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = path
            .file_name()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no file name"))?;
        let tmp = dir.join(format!(
            ".{}.{}.tmp",
            name.to_string_lossy(),
            std::process::id()
        ));
        std::fs::write(&tmp, self.to_csv())?;
        std::fs::rename(&tmp, path).inspect_err(|_| {
            let _ = std::fs::remove_file(&tmp);
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig(0.4928720123456789), "4.92872012346e-1");
        assert_eq!(format_sig(1.0), "1.00000000000e0");
        assert_eq!(format_sig(-2.5e-300), "-2.50000000000e-300");
        assert_eq!(format_sig(f64::NAN), "nan");
    }

    #[test]
    fn layout() {
        let mut t = Table::new(["a", "b,c", "d"]);
        t.comment("version 1\nseed 7");
        t.push(vec![1.5.into(), Cell::Missing, "x\"y".into()])
            .unwrap();
        t.push(vec![Cell::Int(3), None.into(), Some(2.0).into()])
            .unwrap();
        assert!(t.push(vec![Cell::Missing]).is_err());
        assert_eq!(
            t.to_csv(),
            "# version 1\n# seed 7\na,\"b,c\",d\n1.50000000000e0,,\"x\"\"y\"\n3,,2.00000000000e0\n"
        );
    }

    #[test]
    fn atomic_write() {
        let dir = std::env::temp_dir().join(format!("qranging-table-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        let mut t = Table::new(["x"]);
        t.push(vec![1.0.into()]).unwrap();
        t.write_atomic(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), t.to_csv());
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
