//! File formats and dataset layout.

pub mod calib_file;
pub mod dataset;
pub mod raster;
pub mod sim_config;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use calib_file::{read_calibration, write_calibration, CalibrationFile, CalibrationFormat, Provenance};
pub use dataset::{dataset_hash, write_dataset, DatasetManifest, RigConfig};
pub use raster::{read_depth_frame, write_depth_frame};
pub use sim_config::{generate_dataset, SimConfigFile};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
