//! CSV and JSON rendering.

use anyhow::Result;
use serde::Serialize;

/// Twelve significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn csv<I, R>(header: &[String], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// `prefix_1, .., prefix_r`
pub fn numbered(prefix: &str, r: usize) -> impl Iterator<Item = String> + '_ {
    (1..=r).map(move |i| format!("{prefix}_{i}"))
}
