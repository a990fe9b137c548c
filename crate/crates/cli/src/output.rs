//! Small file helpers shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use frscat::io::{read_pnm, PnmImage};
use frscat::{Path as ScatterPath, RealImage};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()).at(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(e.to_string()).at(path))
}

pub fn read_image(path: &Path) -> CliResult<PnmImage> {
    read_pnm(path).map_err(|e| CliError::from(e).at(path))
}

/// Grayscale view of a PGM/PPM, scaled to `[0, 1]`.
pub fn read_gray(path: &Path) -> CliResult<RealImage> {
    Ok(read_image(path)?.to_multi_image().to_gray())
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::from(e).at(path))
}

/// Splits `A:B` into two paths.
pub fn parse_pair(raw: &str) -> Result<(PathBuf, PathBuf), String> {
    match raw.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.into(), b.into())),
        _ => Err(format!("expected FIRST:SECOND, got {raw:?}")),
    }
}

/// File-name friendly path label; the empty path is `root`.
pub fn path_label(p: &ScatterPath) -> String {
    if p.order() == 0 {
        "root".into()
    } else {
        p.to_string()
    }
}

/// Resolves `file` relative to the directory holding `base`.
pub fn relative_to(base: &Path, file: &str) -> PathBuf {
    base.parent().unwrap_or(Path::new(".")).join(file)
}
