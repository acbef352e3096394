use std::io::Write;
use std::path::Path;

use qmdp_core::Result;
use tempfile::Builder;

/// Writes `contents` to a temporary file beside `path`, then renames it into
/// place so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}
