//! CSV emission: header row, comma-separated fields, `.` decimal
//! separator, floats at full precision (17 significant digits), LF line
//! endings. Fields never contain commas or quotes, so no quoting is
//! needed.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Field {
    Int(u64),
    Float(f64),
    Str(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => format_full(*v),
            Field::Str(s) => s.clone(),
        }
    }
}

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn format_full(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{:.16e}", x)
}

/// Write records under a header. An empty record set yields a header-only
/// file.
pub fn emit_csv(path: &Path, header: &[&str], rows: &[Vec<Field>]) -> Result<(), CliError> {
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::Io(format!(
                "row width {} does not match header width {} for {}",
                row.len(),
                header.len(),
                path.display()
            )));
        }
    }
    let mut body = String::new();
    body.push_str(&header.join(","));
    body.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Field::render).collect();
        body.push_str(&cells.join(","));
        body.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_for_empty_records() {
        let dir = std::env::temp_dir().join("mixsim-csv-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        emit_csv(&path, &["a", "b"], &[]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n");
    }

    #[test]
    fn full_precision_round_trips() {
        let x = 0.1 + 0.2;
        let s = format_full(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert!(s.contains('.'), "decimal separator must be '.'");
    }

    #[test]
    fn row_width_mismatch_is_detected() {
        let dir = std::env::temp_dir().join("mixsim-csv-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        let err = emit_csv(&path, &["a"], &[vec![Field::Int(1), Field::Int(2)]]);
        assert!(err.is_err());
    }
}
