//! Shared output plumbing for the batch commands.

use std::path::Path;

use serde::Serialize;

use featurecast::Result;

use crate::records::FailureRecord;

/// Creates the output directory (and parents) if needed.
pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline, written atomically enough
/// for single-process batch runs.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Always written, so a missing file is distinguishable from a clean run.
pub fn write_failures(dir: &Path, failures: &[FailureRecord]) -> Result<()> {
    write_json(&dir.join("failures.json"), &failures)
}

/// Splits per-series results into ordered successes and contained failures.
pub fn partition<T>(
    results: Vec<std::result::Result<T, FailureRecord>>,
) -> (Vec<T>, Vec<FailureRecord>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(f) => failed.push(f),
        }
    }
    (ok, failed)
}
