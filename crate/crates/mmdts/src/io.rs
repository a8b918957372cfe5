//! File formats: series CSV with `# key=value` metadata headers, and JSON
//! writers for reports. Outputs are byte-deterministic for fixed inputs.

use crate::error::{MmdError, Result};
use crate::innovations::{InnovationDist, SeedPath};
use crate::models::Series;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Write a series as CSV: `# key=value` metadata lines, a `value` header,
/// then one observation per line. The root seed is always recorded.
pub fn write_series_csv(path: &Path, series: &Series, meta: &BTreeMap<String, String>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# seed={}", series.seed.label());
    let _ = writeln!(out, "# dist={}", series.dist.name());
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("value\n");
    for v in &series.values {
        // {:?} prints the shortest representation that round-trips.
        let _ = writeln!(out, "{v:?}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a series CSV written by `write_series_csv` (or any single-column
/// CSV with an optional `value` header and `#` comment lines).
pub fn read_series_csv(path: &Path) -> Result<(Series, BTreeMap<String, String>)> {
    let text = fs::read_to_string(path)?;
    let mut meta = BTreeMap::new();
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line == "value" {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| MmdError::Parse(format!("bad series value: {line:?}")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(MmdError::EmptyInput(format!("{} has no data rows", path.display())));
    }
    let seed = meta
        .get("seed")
        .and_then(|s| s.split('/').next())
        .and_then(|s| s.parse().ok())
        .map(SeedPath::new)
        .unwrap_or_else(|| SeedPath::new(0));
    let dist = meta
        .get("dist")
        .and_then(|s| InnovationDist::parse(s))
        .unwrap_or(InnovationDist::Gaussian);
    Ok((Series { values, seed, dist }, meta))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| MmdError::Parse(format!("json encode: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn series_csv_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let series = Series {
            values: vec![1.5, -0.25, 3.0e-7, 0.1 + 0.2],
            seed: SeedPath::new(42),
            dist: InnovationDist::ScaledT3,
        };
        let mut meta = BTreeMap::new();
        meta.insert("model".to_string(), "arma".to_string());
        write_series_csv(&path, &series, &meta).unwrap();
        let (back, meta_back) = read_series_csv(&path).unwrap();
        assert_eq!(back.values, series.values);
        assert_eq!(back.dist, InnovationDist::ScaledT3);
        assert_eq!(back.seed, SeedPath::new(42));
        assert_eq!(meta_back.get("model").unwrap(), "arma");
        assert!(meta_back.contains_key("seed"));
    }

    #[test]
    fn empty_csv_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "# seed=1\nvalue\n").unwrap();
        assert!(read_series_csv(&path).is_err());
    }

    #[test]
    fn json_writer_is_byte_stable() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let value = vec![("x", 1.0f64), ("y", f64::NEG_INFINITY)];
        write_json(&a, &value).unwrap();
        write_json(&b, &value).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}
