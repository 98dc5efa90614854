//! Output files are written next to their destination and renamed into
//! place, so a failed run leaves nothing half-written.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    write_all_atomic(&[(path.to_path_buf(), contents.to_string())])
}

/// Stages every file first; nothing is renamed unless all of them were
/// written.
pub fn write_all_atomic(files: &[(PathBuf, String)]) -> std::io::Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| e.error)?;
    }
    Ok(())
}
