//! Canonical text formatting for emitted records: CSV rows use 6 decimal
//! places for derived quantities, while stored design/rate fields print with
//! 17 significant digits so parsing recovers the exact double.

/// A real with 17 significant digits, enough to round-trip any f64.
pub fn real17(x: f64) -> String {
    format!("{x:.16e}")
}

/// A derived probability or expectation, printed at presentation precision.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Joins rows into a final newline-terminated CSV document.
pub fn csv_document<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
