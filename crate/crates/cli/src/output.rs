//! File and formatting helpers shared by the subcommands.

use std::fs;
use std::path::Path;

/// Write a file via a temporary sibling and an atomic rename, so failed
/// runs never leave partial output behind.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, content).map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
    fs::rename(tmp, path).map_err(|e| format!("cannot rename {} into place: {e}", tmp.display()))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

/// Keep free-text fields single-line and comma-free inside CSV output.
pub fn csv_safe(text: &str) -> String {
    text.replace(['\n', '\r'], " ").replace(',', ";")
}

/// File stem used as a default label.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into())
}
