//! Per-pixel depth bias calibration for structured-light depth cameras.
//!
//! A depth camera and a reference range sensor (for instance a 2D laser
//! scanner) observe a planar wall at many distances. Intersecting each pixel's
//! ray with the wall plane gives a reference depth; the difference to the
//! measured depth is modeled as Gaussian with a per-pixel quadratic mean
//! `μ(z) = a z² + b z + c` and a global quadratic deviation `σ(z)`, both in
//! the measured depth `z`. Compensation subtracts `μ(z)`.
//!
//! ```no_run
//! use depthcal::{calibrate, CalibrationConfig, DatasetManifest};
//!
//! let manifest = DatasetManifest::load("dataset/manifest.json")?;
//! let observations = manifest.load_observations()?;
//! let cal = calibrate(
//!     &observations,
//!     &manifest.extrinsics,
//!     &manifest.intrinsics,
//!     &CalibrationConfig::default(),
//! )?;
//! println!("{} calibrated pixels", cal.bias_map.valid_count());
//! # Ok::<(), depthcal::Error>(())
//! ```

pub mod calibration;
pub mod cli;
pub mod error;
pub mod error_model;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod scan;
pub mod simulator;

pub use calibration::{
    accumulate_pairs, bin_residuals, calibrate, fit_pixel_bias, fit_sigma_quadratic, pooled_sigma,
    Calibration, CalibrationConfig, DepthPair, Observation, PairStore, PoolingDivisor,
};
pub use error::{Error, Result};
pub use error_model::{
    bias_mean, compensate_frame, noise_sigma, BiasMap, DepthFrame, NoiseModel, PixelBias,
    INVALID_DEPTH,
};
pub use evaluation::{
    bucket_records, evaluate_global, evaluate_local, fit_plane_tls, rms_perpendicular, PointCloud,
};
pub use geometry::{
    backproject_ray, reference_depth, transform_plane, CameraIntrinsics, PixelCoord,
    PlaneHessian, RigidTransform, Vec3,
};
pub use io::{
    read_calibration, read_depth_frame, write_calibration, write_depth_frame, CalibrationFile,
    CalibrationFormat, DatasetManifest,
};
pub use scan::{extract_plane_from_scan, LaserScan2D, RansacConfig};
pub use simulator::{
    simulate_frame, simulate_sequence, BiasFieldSpec, GroundTruthBiasField, NoiseCoefficients,
    Quantization, SimConfig,
};
