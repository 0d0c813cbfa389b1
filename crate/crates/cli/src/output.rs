//! Atomic artifact writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::record::ResultRecord;
use crate::CliError;

/// Writes `contents` to a sibling temporary file and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn to_json(rec: &ResultRecord) -> String {
    let mut s = serde_json::to_string_pretty(rec).expect("records serialize");
    s.push('\n');
    s
}

/// `<id>.json`, plus `<id>.csv` when the record has a table and
/// `<id>.region.json` when it carries a region.
pub fn write_record(rec: &ResultRecord, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    let json = out_dir.join(format!("{}.json", rec.id));
    write_atomic(&json, &to_json(rec))?;
    written.push(json);
    if let Some(t) = &rec.table {
        let csv = out_dir.join(format!("{}.csv", rec.id));
        write_atomic(&csv, &t.to_csv(&rec.units))?;
        written.push(csv);
    }
    if let Some(a) = &rec.artifact {
        let path = out_dir.join(format!("{}.region.json", rec.id));
        let mut text = a.clone();
        text.push('\n');
        write_atomic(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}
