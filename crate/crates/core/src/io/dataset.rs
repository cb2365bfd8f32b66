//! Dataset layout on disk.
//!
//! ```text
//! dataset/
//!   manifest.json        {"format": "depthcal-dataset", "version": 1,
//!                         "rig": "rig.json", "observations": "observations.jsonl",
//!                         "metadata": {...}}
//!   rig.json             intrinsics + extrinsics (reference → camera)
//!   observations.jsonl   {"timestamp": s, "depth": "frames/…png",
//!                         "nx": …, "ny": …, "nz": …, "d": …} per line
//!   frames/*.png         16-bit depth in millimeters
//! ```
//!
//! Plane observations are expressed in the reference sensor's frame. Every
//! record is pre-associated with its depth frame; timestamps must increase
//! strictly.

use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::Observation;
use crate::error::{Error, Result};
use crate::error_model::DepthFrame;
use crate::geometry::{CameraIntrinsics, PlaneHessian, RigidTransform, Vec3};
use crate::io::raster::read_depth_frame;
use crate::io::atomic_write;

pub const DATASET_FORMAT: &str = "depthcal-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Text stored in rig files to document the transform direction.
pub const FRAME_CONVENTION: &str =
    "extrinsics map reference-sensor coordinates into depth-camera coordinates: x_cam = R * x_ref + t";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl From<&CameraIntrinsics> for IntrinsicsRecord {
    fn from(k: &CameraIntrinsics) -> Self {
        Self {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
        }
    }
}

impl IntrinsicsRecord {
    pub fn to_intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
    }
}

/// Extrinsics as either a row-major 3×3 rotation or a `[w, x, y, z]`
/// quaternion, plus a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicsRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quaternion: Option<[f64; 4]>,
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for ExtrinsicsRecord {
    fn from(t: &RigidTransform) -> Self {
        let r = t.rotation();
        let tr = t.translation();
        Self {
            rotation: Some([0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]])),
            quaternion: None,
            translation: [tr.x, tr.y, tr.z],
        }
    }
}

impl ExtrinsicsRecord {
    pub fn to_transform(&self) -> Result<RigidTransform> {
        let t = Vec3::from(self.translation);
        match (self.rotation, self.quaternion) {
            (Some(r), None) => {
                RigidTransform::new(Matrix3::from_fn(|i, j| r[i][j]), t)
            }
            (None, Some(q)) => RigidTransform::from_quaternion(q, t),
            _ => Err(Error::InvalidTransform(
                "give exactly one of `rotation` or `quaternion`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    #[serde(default = "default_convention")]
    pub frame_convention: String,
    pub intrinsics: IntrinsicsRecord,
    pub extrinsics: ExtrinsicsRecord,
}

fn default_convention() -> String {
    FRAME_CONVENTION.into()
}

impl RigConfig {
    pub fn new(intrinsics: &CameraIntrinsics, extrinsics: &RigidTransform) -> Self {
        Self {
            frame_convention: FRAME_CONVENTION.into(),
            intrinsics: intrinsics.into(),
            extrinsics: extrinsics.into(),
        }
    }
}

/// One line of `observations.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRecord {
    pub timestamp: f64,
    /// Depth image path, relative to the manifest's directory.
    pub depth: String,
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
    pub d: f64,
}

impl PlaneRecord {
    pub fn plane(&self) -> Result<PlaneHessian> {
        PlaneHessian::new(Vec3::new(self.nx, self.ny, self.nz), self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub format: String,
    pub version: u32,
    pub rig: String,
    pub observations: String,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

/// A loaded and validated dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: RigidTransform,
    pub records: Vec<PlaneRecord>,
    pub metadata: serde_json::Value,
}

fn manifest_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.into(),
        reason: reason.into(),
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| manifest_err(path, e.to_string()))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes to JSON");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

impl DatasetManifest {
    /// Reads the manifest, rig and observation records and checks that every
    /// referenced frame exists and timestamps increase.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let manifest: ManifestFile = read_json(path)?;
        if manifest.format != DATASET_FORMAT || manifest.version != DATASET_VERSION {
            return Err(manifest_err(
                path,
                format!("unknown format {} v{}", manifest.format, manifest.version),
            ));
        }
        let rig_path = root.join(&manifest.rig);
        let rig: RigConfig = read_json(&rig_path)?;
        let intrinsics = rig.intrinsics.to_intrinsics()?;
        let extrinsics = rig.extrinsics.to_transform()?;

        let obs_path = root.join(&manifest.observations);
        let text = std::fs::read_to_string(&obs_path).map_err(|e| Error::io(&obs_path, e))?;
        let mut records: Vec<PlaneRecord> = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: PlaneRecord = serde_json::from_str(line).map_err(|e| {
                manifest_err(&obs_path, format!("line {}: {e}", line_no + 1))
            })?;
            rec.plane().map_err(|e| {
                manifest_err(&obs_path, format!("line {}: {e}", line_no + 1))
            })?;
            if let Some(prev) = records.last() {
                if !(rec.timestamp > prev.timestamp) {
                    return Err(manifest_err(
                        &obs_path,
                        format!(
                            "line {}: timestamp {} does not increase (previous {})",
                            line_no + 1,
                            rec.timestamp,
                            prev.timestamp
                        ),
                    ));
                }
            }
            if !root.join(&rec.depth).is_file() {
                return Err(manifest_err(
                    &obs_path,
                    format!("line {}: missing depth file {}", line_no + 1, rec.depth),
                ));
            }
            records.push(rec);
        }
        Ok(Self {
            root,
            intrinsics,
            extrinsics,
            records,
            metadata: manifest.metadata,
        })
    }

    /// Decodes every frame, checking its size against the intrinsics.
    pub fn load_observations(&self) -> Result<Vec<Observation>> {
        self.records
            .iter()
            .map(|rec| {
                let path = self.root.join(&rec.depth);
                let frame = read_depth_frame(&path)?;
                frame.check_intrinsics(&self.intrinsics).map_err(|e| {
                    manifest_err(&path, e.to_string())
                })?;
                Ok(Observation {
                    frame,
                    plane: rec.plane()?,
                })
            })
            .collect()
    }
}

/// Writes a dataset directory with frames at `frames/frame_NNNNN.png`.
pub fn write_dataset(
    dir: &Path,
    intrinsics: &CameraIntrinsics,
    extrinsics: &RigidTransform,
    observations: &[(f64, DepthFrame, PlaneHessian)],
    metadata: serde_json::Value,
) -> Result<PathBuf> {
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let mut lines = String::new();
    for (i, (timestamp, frame, plane)) in observations.iter().enumerate() {
        let rel = format!("frames/frame_{i:05}.png");
        crate::io::raster::write_depth_frame(dir.join(&rel), frame)?;
        let n = plane.normal();
        let rec = PlaneRecord {
            timestamp: *timestamp,
            depth: rel,
            nx: n.x,
            ny: n.y,
            nz: n.z,
            d: plane.distance(),
        };
        lines.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        lines.push('\n');
    }
    atomic_write(&dir.join("observations.jsonl"), lines.as_bytes())?;
    write_json(&dir.join("rig.json"), &RigConfig::new(intrinsics, extrinsics))?;
    let manifest = ManifestFile {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        rig: "rig.json".into(),
        observations: "observations.jsonl".into(),
        metadata,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

/// SHA-256 over the rig and the sorted per-observation digests, so record
/// order does not change the hash.
pub fn dataset_hash(
    intrinsics: &CameraIntrinsics,
    extrinsics: &RigidTransform,
    observations: &[Observation],
) -> String {
    let mut digests: Vec<Vec<u8>> = observations
        .iter()
        .map(|o| {
            let mut h = Sha256::new();
            h.update(o.frame.width().to_le_bytes());
            h.update(o.frame.height().to_le_bytes());
            for z in o.frame.depths() {
                h.update(z.to_le_bytes());
            }
            let n = o.plane.normal();
            for v in [n.x, n.y, n.z, o.plane.distance()] {
                h.update(v.to_le_bytes());
            }
            h.finalize().to_vec()
        })
        .collect();
    digests.sort();
    let mut h = Sha256::new();
    for v in [intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy] {
        h.update(v.to_le_bytes());
    }
    h.update(intrinsics.width.to_le_bytes());
    h.update(intrinsics.height.to_le_bytes());
    for v in extrinsics.rotation().iter() {
        h.update(v.to_le_bytes());
    }
    for v in extrinsics.translation().iter() {
        h.update(v.to_le_bytes());
    }
    for d in &digests {
        h.update(d);
    }
    hex::encode(h.finalize())
}
