//! Plain CSV and JSON helpers shared by the export functions.

use std::fmt::Write as _;

/// Renders a CSV table. Floats are written with Rust's shortest round-trip
/// formatting, so output is stable across platforms.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn fmt_f64(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:e}").unwrap();
    s
}

/// Parses a numeric CSV with a header row. Blank lines and lines starting
/// with `#` are skipped. Returns the header and the rows.
pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| "empty CSV".to_string())?;
    let header: Vec<String> = header.split(',').map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: expected {} columns, found {}", lineno + 1, header.len(), row.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
