//! Simulation config files and dataset generation.
//!
//! ```json
//! {
//!   "intrinsics": {"fx": 140, "fy": 140, "cx": 79.5, "cy": 59.5, "width": 160, "height": 120},
//!   "extrinsics": {"rotation": [[1,0,0],[0,1,0],[0,0,1]], "translation": [0, 0, 0]},
//!   "walls": {"count": 50, "min": 0.5, "max": 4.5, "max_yaw_deg": 0},
//!   "noise": {"a": 0.0007, "b": 0, "c": 0.002},
//!   "quantization": {"mode": "off"},
//!   "seed": 7
//! }
//! ```
//!
//! `walls` may instead list explicit reference-frame planes
//! `[{"nx": 0, "ny": 0, "nz": 1, "d": 2.0}, ...]`. `bias_field` defaults to
//! [`BiasFieldSpec::bowl`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::error_model::DEFAULT_SIGMA_FLOOR;
use crate::geometry::{
    reference_depth, transform_plane, CameraIntrinsics, PlaneHessian, RigidTransform, Vec3,
};
use crate::io::calib_file::{write_calibration, CalibrationFile, CalibrationFormat, Provenance};
use crate::io::dataset::{
    dataset_hash, read_json, write_dataset, DatasetManifest, ExtrinsicsRecord, IntrinsicsRecord,
};
use crate::simulator::{
    evenly_spaced, random_yaws, simulate_sequence, walls_facing_camera, BiasFieldSpec,
    GroundTruthBiasField, NoiseCoefficients, Quantization, SimConfig, RNG_ALGORITHM,
};

/// File name of the ground-truth calibration inside a generated dataset.
pub const GROUND_TRUTH_FILE: &str = "ground_truth.dcal";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallPlane {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WallSpec {
    Planes(Vec<WallPlane>),
    /// Camera-facing walls evenly spaced in camera-frame distance, each
    /// turned by a random yaw up to `max_yaw_deg`.
    Sweep {
        count: usize,
        min: f64,
        max: f64,
        #[serde(default)]
        max_yaw_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfigFile {
    pub intrinsics: IntrinsicsRecord,
    pub extrinsics: ExtrinsicsRecord,
    pub walls: WallSpec,
    #[serde(default)]
    pub noise: NoiseCoefficients,
    #[serde(default)]
    pub quantization: Quantization,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_frame_interval")]
    pub frame_interval: f64,
    #[serde(default = "BiasFieldSpec::bowl")]
    pub bias_field: BiasFieldSpec,
}

fn default_frame_interval() -> f64 {
    0.1
}

impl SimConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    /// Resolves walls and the ground-truth field; `seed` overrides the file.
    pub fn build(&self, seed: Option<u64>) -> Result<(SimConfig, GroundTruthBiasField)> {
        let intrinsics = self.intrinsics.to_intrinsics()?;
        let extrinsics = self.extrinsics.to_transform()?;
        let seed = seed.unwrap_or(self.seed);
        let walls = match &self.walls {
            WallSpec::Planes(planes) => planes
                .iter()
                .map(|p| PlaneHessian::new(Vec3::new(p.nx, p.ny, p.nz), p.d))
                .collect::<Result<Vec<_>>>()?,
            WallSpec::Sweep {
                count,
                min,
                max,
                max_yaw_deg,
            } => walls_facing_camera(
                &extrinsics,
                &evenly_spaced(*count, *min, *max),
                &random_yaws(*count, max_yaw_deg.to_radians(), seed),
            )?,
        };
        let range = depth_range(&walls, &extrinsics, &intrinsics);
        let truth = GroundTruthBiasField::from_spec(&self.bias_field, &intrinsics, range)?;
        let config = SimConfig {
            intrinsics,
            walls,
            extrinsics,
            noise: self.noise,
            quantization: self.quantization,
            seed,
            frame_interval: self.frame_interval,
        };
        Ok((config, truth))
    }
}

/// Span of true depths seen over all walls.
fn depth_range(
    walls: &[PlaneHessian],
    extrinsics: &RigidTransform,
    intrinsics: &CameraIntrinsics,
) -> (f64, f64) {
    let corners = [
        (0.0, 0.0),
        (intrinsics.width as f64 - 1.0, 0.0),
        (0.0, intrinsics.height as f64 - 1.0),
        (intrinsics.width as f64 - 1.0, intrinsics.height as f64 - 1.0),
        (intrinsics.cx, intrinsics.cy),
    ];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for wall in walls {
        let cam = transform_plane(wall, extrinsics);
        for (u, v) in corners {
            let ray = Vec3::new((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy, 1.0);
            if let Ok(z) = reference_depth(&cam, &ray) {
                lo = lo.min(z);
                hi = hi.max(z);
            }
        }
    }
    if lo <= hi {
        (lo, hi)
    } else {
        (0.0, 0.0)
    }
}

/// Simulates every wall and writes the dataset plus its ground truth into
/// `out_dir`. Returns the manifest path.
pub fn generate_dataset(
    config: &SimConfig,
    truth: &GroundTruthBiasField,
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    let frames = simulate_sequence(config, truth)?;
    let records: Vec<_> = frames
        .into_iter()
        .enumerate()
        .map(|(i, (frame, plane))| (i as f64 * config.frame_interval, frame, plane))
        .collect();
    let metadata = serde_json::json!({
        "generator": "depthcal simulate",
        "rng": RNG_ALGORITHM,
        "seed": config.seed,
        "noise": config.noise,
        "quantization": config.quantization,
        "ground_truth": GROUND_TRUTH_FILE,
    });
    let manifest_path = write_dataset(
        out_dir,
        &config.intrinsics,
        &config.extrinsics,
        &records,
        metadata,
    )?;

    // hash what a reader will decode, after millimeter rounding
    let manifest = DatasetManifest::load(&manifest_path)?;
    let observations = manifest.load_observations()?;
    let hash = dataset_hash(&manifest.intrinsics, &manifest.extrinsics, &observations);
    let truth_file = CalibrationFile {
        bias_map: truth.to_bias_map(),
        noise: config.noise.to_model(DEFAULT_SIGMA_FLOOR)?,
        provenance: Provenance::new(
            "ground_truth",
            hash,
            serde_json::json!({"seed": config.seed, "rng": RNG_ALGORITHM}),
        ),
    };
    write_calibration(
        out_dir.join(GROUND_TRUTH_FILE),
        &truth_file,
        CalibrationFormat::Binary,
    )?;
    Ok(manifest_path)
}
