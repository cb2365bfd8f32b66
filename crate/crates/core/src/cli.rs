//! Library side of the `depthcal` command-line tool.
//!
//! Each subcommand is a plain function taking an options struct, so the
//! pipeline can be driven the same way from tests and from the binary.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::calibration::{calibrate, CalibrationConfig, CalibrationReport};
use crate::error::{Error, Result};
use crate::error_model::compensate_frame;
use crate::evaluation::{
    bucket_records, evaluate_global, evaluate_local, wall_inlier_mask, write_csv, BucketRow,
    FramePair, DEFAULT_BUCKET_WIDTH, DEFAULT_INLIER_GATE,
};
use crate::geometry::transform_plane;
use crate::io::calib_file::{read_calibration, write_calibration, CalibrationFile, CalibrationFormat, Provenance};
use crate::io::dataset::{dataset_hash, write_json, DatasetManifest};
use crate::io::raster::{read_depth_frame, write_depth_frame};
use crate::io::sim_config::{generate_dataset, SimConfigFile};

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub config: PathBuf,
    pub output: PathBuf,
    /// Overrides the seed in the config file.
    pub seed: Option<u64>,
}

/// Writes a synthetic dataset and its ground truth; returns the manifest path.
pub fn cli_simulate(opts: &SimulateOptions) -> Result<PathBuf> {
    let file = SimConfigFile::load(&opts.config)?;
    let (config, truth) = file.build(opts.seed)?;
    generate_dataset(&config, &truth, &opts.output)
}

#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    pub manifest: PathBuf,
    pub output: PathBuf,
    pub format: CalibrationFormat,
    pub config: CalibrationConfig,
    /// Defaults to the output path with a `.report.json` extension.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrateSummary {
    pub dataset_hash: String,
    pub report: CalibrationReport,
}

pub fn default_report_path(output: &Path) -> PathBuf {
    output.with_extension("report.json")
}

/// Fits the bias map and noise model of a dataset and writes the
/// calibration file plus a JSON report.
pub fn cli_calibrate(opts: &CalibrateOptions) -> Result<CalibrateSummary> {
    let manifest = DatasetManifest::load(&opts.manifest)?;
    let observations = manifest.load_observations()?;
    let calibration = calibrate(
        &observations,
        &manifest.extrinsics,
        &manifest.intrinsics,
        &opts.config,
    )?;
    let hash = dataset_hash(&manifest.intrinsics, &manifest.extrinsics, &observations);
    let config = serde_json::to_value(&opts.config).expect("config serializes");
    let file = CalibrationFile {
        bias_map: calibration.bias_map,
        noise: calibration.noise,
        provenance: Provenance::new("calibration", hash.clone(), config),
    };
    write_calibration(&opts.output, &file, opts.format)?;
    let summary = CalibrateSummary {
        dataset_hash: hash,
        report: calibration.report,
    };
    let report_path = opts
        .report
        .clone()
        .unwrap_or_else(|| default_report_path(&opts.output));
    write_json(&report_path, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct ApplyOptions {
    pub calibration: PathBuf,
    /// Depth images, or directories whose `.png`/`.pgm` files are all used.
    pub inputs: Vec<PathBuf>,
    /// A file when a single `.png` is produced, a directory otherwise.
    pub output: PathBuf,
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| Error::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::InvalidConfig("no input depth images".into()));
    }
    Ok(files)
}

/// Compensates depth images; returns the written paths.
pub fn cli_apply(opts: &ApplyOptions) -> Result<Vec<PathBuf>> {
    let calibration = read_calibration(&opts.calibration)?;
    let files = expand_inputs(&opts.inputs)?;
    let single_file = files.len() == 1
        && opts
            .output
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let mut written = Vec::with_capacity(files.len());
    for input in &files {
        let frame = read_depth_frame(input)?;
        let out = compensate_frame(&frame, &calibration.bias_map)?;
        let target = if single_file {
            opts.output.clone()
        } else {
            let stem = input.file_stem().unwrap_or_default();
            opts.output.join(stem).with_extension("png")
        };
        write_depth_frame(&target, &out)?;
        written.push(target);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Local,
    Global,
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(EvalMode::Local),
            "global" => Ok(EvalMode::Global),
            other => Err(Error::InvalidConfig(format!(
                "evaluation mode must be local or global, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub calibration: PathBuf,
    pub manifest: PathBuf,
    pub mode: EvalMode,
    pub output: PathBuf,
    pub bucket_width: f64,
    /// Gate on `|z − z*|` selecting wall pixels.
    pub inlier_gate: f64,
}

impl EvaluateOptions {
    pub fn new(calibration: PathBuf, manifest: PathBuf, mode: EvalMode, output: PathBuf) -> Self {
        Self {
            calibration,
            manifest,
            mode,
            output,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            inlier_gate: DEFAULT_INLIER_GATE,
        }
    }
}

/// Raw versus calibrated error curves of a dataset, written as CSV.
pub fn cli_evaluate(opts: &EvaluateOptions) -> Result<Vec<BucketRow>> {
    if !(opts.bucket_width > 0.0) {
        return Err(Error::InvalidConfig("bucket width must be positive".into()));
    }
    let calibration = read_calibration(&opts.calibration)?;
    let manifest = DatasetManifest::load(&opts.manifest)?;
    let k = manifest.intrinsics;
    let observations = manifest.load_observations()?;
    let bias_map = &calibration.bias_map;
    if bias_map.dims() != (k.width, k.height) {
        return Err(Error::DimensionMismatch {
            expected: (k.width, k.height),
            actual: bias_map.dims(),
        });
    }

    let mut planes = Vec::with_capacity(observations.len());
    let mut calibrated = Vec::with_capacity(observations.len());
    let mut masks = Vec::with_capacity(observations.len());
    for obs in &observations {
        let plane = transform_plane(&obs.plane, &manifest.extrinsics);
        let cal = compensate_frame(&obs.frame, bias_map)?;
        let mut mask = wall_inlier_mask(&obs.frame, &plane, &k, opts.inlier_gate)?;
        for (i, m) in mask.iter_mut().enumerate() {
            *m &= bias_map.valid()[i] && cal.is_valid(i);
        }
        planes.push(plane);
        calibrated.push(cal);
        masks.push(mask);
    }
    // frames with fewer than three wall points carry no plane
    let keep: Vec<usize> = (0..observations.len())
        .filter(|&i| masks[i].iter().filter(|&&m| m).count() >= 3)
        .collect();
    let pairs: Vec<FramePair<'_>> = keep
        .iter()
        .map(|&i| FramePair {
            raw: &observations[i].frame,
            calibrated: &calibrated[i],
            mask: &masks[i],
        })
        .collect();
    let records = match opts.mode {
        EvalMode::Local => evaluate_local(&pairs, &k)?,
        EvalMode::Global => {
            let kept: Vec<_> = keep.iter().map(|&i| planes[i]).collect();
            evaluate_global(&pairs, &kept, &k)?
        }
    };
    let rows = bucket_records(&records, opts.bucket_width);
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv).expect("writing to memory");
    crate::io::atomic_write(&opts.output, &csv)?;
    Ok(rows)
}
