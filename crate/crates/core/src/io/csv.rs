//! Plot-ready CSV files. The first line of every file is a `#` comment with
//! the code version and the full run parameters.

use std::fs;
use std::path::Path;

use crate::error::Result;

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// `# <code version> <label> <parameters>` on one line.
pub fn provenance_line(label: &str, params: &serde_json::Value) -> String {
    format!("# {CODE_VERSION} {label} {params}")
}

/// Writes `rows` under `header`, preceded by the provenance comment.
pub fn write_csv<R, I>(path: &Path, provenance: &str, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut body = csv::Writer::from_writer(Vec::new());
    body.write_record(header)?;
    for row in rows {
        body.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    let body = body.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    let mut out = Vec::with_capacity(provenance.len() + 1 + body.len());
    out.extend_from_slice(provenance.trim_end().as_bytes());
    out.push(b'\n');
    out.extend_from_slice(&body);
    fs::write(path, out)?;
    Ok(())
}

/// Reads back a file written by [`write_csv`]: the provenance line and the
/// records, header included.
pub fn read_csv(path: &Path) -> Result<(String, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(rest.as_bytes());
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((first.to_string(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_provenance_and_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let prov = provenance_line("test", &serde_json::json!({"sigma": 0.2}));
        let rows = vec![vec!["0.2".to_string(), "a,b".into()], vec!["0.3".into(), "c".into()]];
        write_csv(&path, &prov, &["sigma", "label"], rows.clone()).unwrap();
        let (p, got) = read_csv(&path).unwrap();
        assert_eq!(p, prov);
        assert!(p.starts_with("# twodisk-core "));
        assert_eq!(got[0], vec!["sigma", "label"]);
        assert_eq!(&got[1..], &rows[..]);
    }
}
