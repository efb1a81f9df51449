use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliError;
use crate::OUT_ENV;

/// Output directory: explicit flag, then manifest setting, then
/// `$METORES_OUT/<name>`, then `runs/<name>`.
pub fn resolve_out(flag: Option<&Path>, manifest: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag.or(manifest) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(name),
        _ => PathBuf::from("runs").join(name),
    }
}

/// Appends a timestamped line to `dir/run.log`. Timestamps live only here so
/// every other output stays byte-identical across repeats.
pub fn log(dir: &Path, message: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut f = OpenOptions::new().create(true).append(true).open(dir.join("run.log"))?;
    writeln!(f, "{secs} {message}")?;
    Ok(())
}

/// Writes `bytes` to `path` and echoes the path on stdout.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    println!("wrote {}", path.display());
    Ok(())
}
