//! Numeric text helpers shared by the CSV and checkpoint formats.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// 17 significant digits, enough for an exact f64 round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64_row(text: &str, sep: char) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let split: Box<dyn Iterator<Item = &str>> = if sep == ' ' {
        Box::new(text.split_whitespace())
    } else {
        Box::new(text.split(sep))
    };
    split
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{tok}`"))
        })
        .collect()
}

/// Writes a header row and numeric rows, LF line endings.
pub fn write_csv<'a>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a numeric CSV whose header must equal `header`.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let got: Vec<&str> = first.split(',').map(str::trim).collect();
    if got != header {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{first}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_f64_row(line, ',').map_err(|m| Error::parse(path, i + 1, m))?;
        if row.len() != header.len() {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {} columns, found {}", header.len(), row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = fmt_f64(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b.csv");
        let rows = [vec![1.0, -2.5e-300], vec![std::f64::consts::PI, 0.0]];
        write_csv(&path, &["x", "y"], rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(read_csv(&path, &["x", "y"]).unwrap(), rows.to_vec());
        let err = read_csv(&path, &["x", "z"]).unwrap_err();
        assert!(err.to_string().contains(":1:"));
    }

    #[test]
    fn bad_cell_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "x,y\n1,2\n3,oops\n").unwrap();
        let err = read_csv(&path, &["x", "y"]).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
    }
}
