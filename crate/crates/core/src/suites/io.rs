use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Dataset, Manifest, QARecord, SuiteError};

/// The dataset as JSON Lines, manifest first, with a trailing newline.
pub fn dataset_to_string(ds: &Dataset) -> String {
    let mut out = serde_json::to_string(&ds.manifest).expect("manifest serializes");
    out.push('\n');
    for r in &ds.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), SuiteError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(dataset_to_string(ds).as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Parses and checks a dataset. Blank lines are skipped; line numbers in
/// errors count from 1.
pub fn parse_dataset(text: &str) -> Result<Dataset, SuiteError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (line, first) = lines.next().ok_or(SuiteError::Parse {
        line: 1,
        message: "empty file, expected a manifest".into(),
    })?;
    let manifest: Manifest = serde_json::from_str(first).map_err(|e| SuiteError::Parse {
        line,
        message: format!("manifest: {e}"),
    })?;
    let records = lines
        .map(|(line, l)| {
            serde_json::from_str::<QARecord>(l).map_err(|e| SuiteError::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ds = Dataset { manifest, records };
    ds.check_manifest()?;
    Ok(ds)
}

pub fn read_dataset(path: &Path) -> Result<Dataset, SuiteError> {
    parse_dataset(&fs::read_to_string(path)?)
}
