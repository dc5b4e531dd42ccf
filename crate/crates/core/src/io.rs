//! Text formats shared by the output writers.

use std::fmt::Write as _;
use std::path::Path;

/// C-style `%.12e`: `1.234500000000e-05`, `-3.000000000000e+00`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Rows of already-formatted cells joined with commas, header first.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)
}

/// Parsed numeric CSV with the header kept for column lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl NumericTable {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(ParseError {
            line: 1,
            message: "empty file".into(),
        })?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != header.len() {
                return Err(ParseError {
                    line: i + 1,
                    message: format!("expected {} columns, found {}", header.len(), cells.len()),
                });
            }
            let row = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>().map_err(|_| ParseError {
                        line: i + 1,
                        message: format!("`{c}` is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_matches_printf() {
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(1.0), "1.000000000000e+00");
        assert_eq!(sci(-12345.678), "-1.234567800000e+04");
        assert_eq!(sci(1.5e-7), "1.500000000000e-07");
        assert_eq!(sci(2.0e123), "2.000000000000e+123");
        assert_eq!(sci(f64::NAN), "nan");
    }

    #[test]
    fn table_parse_reports_line_numbers() {
        let t = NumericTable::parse("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(t.column("b").unwrap(), vec![2.0, 4.0]);
        let err = NumericTable::parse("a,b\n1,2\n3,x\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = NumericTable::parse("a,b\n1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(NumericTable::parse("").is_err());
    }
}
