use std::io::{BufWriter, Write};
use std::path::Path;

use morphguard::{Error, Result};
use tempfile::NamedTempFile;

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let wrap = |e: Error| e.in_file(path);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| wrap(e.into()))?;
    {
        let mut writer = BufWriter::new(tmp.as_file());
        fill(&mut writer).map_err(wrap)?;
        writer.flush().map_err(|e| wrap(e.into()))?;
    }
    tmp.as_file().sync_all().map_err(|e| wrap(e.into()))?;
    tmp.persist(path).map_err(|e| wrap(e.error.into()))?;
    Ok(())
}

/// Writes `text` to `path` atomically, or to stdout when `path` is None.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, |w| Ok(w.write_all(text.as_bytes())?)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}
