//! Plane-based accuracy metrics.
//!
//! *Local distortion* is the RMS perpendicular distance of a wall's points to
//! the plane best fitting them, which measures shape errors only. *Global
//! error* is the RMS distance to the plane reported by the reference sensor,
//! which also catches offsets.

use std::io::Write;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::error_model::DepthFrame;
use crate::geometry::{
    backproject_ray, reference_depth, sorted_symmetric_eigen, CameraIntrinsics, PixelCoord,
    PlaneHessian, Vec3,
};

/// Default gate on `|z − z*|` defining the wall pixels.
pub const DEFAULT_INLIER_GATE: f64 = 0.2;

/// Default width of the distance buckets, meters.
pub const DEFAULT_BUCKET_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    /// Source pixel (row-major index) of every point, when known.
    pub pixels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            pixels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Back-projects the valid pixels of `frame` selected by `mask`.
    pub fn from_frame(
        frame: &DepthFrame,
        intrinsics: &CameraIntrinsics,
        mask: Option<&[bool]>,
    ) -> Result<Self> {
        frame.check_intrinsics(intrinsics)?;
        if let Some(m) = mask {
            if m.len() != frame.depths().len() {
                return Err(Error::InvalidConfig(format!(
                    "mask has {} entries for {} pixels",
                    m.len(),
                    frame.depths().len()
                )));
            }
        }
        let mut points = Vec::new();
        let mut pixels = Vec::new();
        for (i, &z) in frame.depths().iter().enumerate() {
            if !frame.is_valid(i) || mask.is_some_and(|m| !m[i]) {
                continue;
            }
            let px = PixelCoord::from_index(i, intrinsics.width);
            points.push(backproject_ray(intrinsics, px) * z);
            pixels.push(i);
        }
        Ok(Self {
            points,
            pixels: Some(pixels),
        })
    }
}

/// Total-least-squares plane: normal along the smallest-eigenvalue direction
/// of the scatter matrix, passing through the centroid.
pub fn fit_plane_tls(cloud: &PointCloud) -> Result<PlaneHessian> {
    let n = cloud.points.len();
    if n < 3 {
        return Err(Error::DegenerateCloud(format!("{n} points, need at least 3")));
    }
    let centroid = cloud.points.iter().sum::<Vec3>() / n as f64;
    let mut scatter = Matrix3::zeros();
    for p in &cloud.points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let (vals, vecs) = sorted_symmetric_eigen(scatter);
    // a collinear cloud has a two-dimensional null space
    if !(vals[1] > 1e-12 * vals[2].max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateCloud("points are collinear".into()));
    }
    let normal = vecs[0];
    PlaneHessian::normalized(normal, normal.dot(&centroid))
}

/// Root mean square of `n·x − d` over the cloud.
pub fn rms_perpendicular(cloud: &PointCloud, plane: &PlaneHessian) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let ss: f64 = cloud
        .points
        .iter()
        .map(|p| plane.signed_distance(p).powi(2))
        .sum();
    Ok((ss / cloud.len() as f64).sqrt())
}

/// Mean of `n·x − d` over the cloud.
pub fn mean_signed_distance(cloud: &PointCloud, plane: &PlaneHessian) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let s: f64 = cloud.points.iter().map(|p| plane.signed_distance(p)).sum();
    Ok(s / cloud.len() as f64)
}

/// Pixels whose raw depth lies within `gate` of the reference depth.
pub fn wall_inlier_mask(
    frame: &DepthFrame,
    plane_cam: &PlaneHessian,
    intrinsics: &CameraIntrinsics,
    gate: f64,
) -> Result<Vec<bool>> {
    frame.check_intrinsics(intrinsics)?;
    Ok(intrinsics
        .ray_table()
        .iter()
        .zip(frame.depths())
        .map(|(ray, &z)| {
            z > 0.0
                && reference_depth(plane_cam, ray)
                    .map(|zr| (z - zr).abs() < gate)
                    .unwrap_or(false)
        })
        .collect())
}

/// Raw and compensated versions of one frame plus its wall mask.
#[derive(Debug, Clone, Copy)]
pub struct FramePair<'a> {
    pub raw: &'a DepthFrame,
    pub calibrated: &'a DepthFrame,
    pub mask: &'a [bool],
}

/// Per-frame metric values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub nominal_distance: f64,
    pub rms_raw: f64,
    pub rms_calibrated: f64,
    pub point_count: usize,
    /// Mean signed distance of the raw cloud to the evaluation plane.
    pub offset_raw: f64,
    /// Mean signed distance of the calibrated cloud to the evaluation plane.
    pub offset_calibrated: f64,
}

/// Shape error of raw and calibrated clouds, each against its own TLS plane.
pub fn evaluate_local(
    frames: &[FramePair<'_>],
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<EvalRecord>> {
    frames
        .par_iter()
        .map(|f| {
            let raw = PointCloud::from_frame(f.raw, intrinsics, Some(f.mask))?;
            let cal = PointCloud::from_frame(f.calibrated, intrinsics, Some(f.mask))?;
            let raw_plane = fit_plane_tls(&raw)?;
            let cal_plane = fit_plane_tls(&cal)?;
            Ok(EvalRecord {
                nominal_distance: cal_plane.distance(),
                rms_raw: rms_perpendicular(&raw, &raw_plane)?,
                rms_calibrated: rms_perpendicular(&cal, &cal_plane)?,
                point_count: cal.len(),
                offset_raw: mean_signed_distance(&raw, &raw_plane)?,
                offset_calibrated: mean_signed_distance(&cal, &cal_plane)?,
            })
        })
        .collect()
}

/// Error of raw and calibrated clouds against the reference planes
/// (camera frame, one per frame).
pub fn evaluate_global(
    frames: &[FramePair<'_>],
    reference_planes: &[PlaneHessian],
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<EvalRecord>> {
    if frames.len() != reference_planes.len() {
        return Err(Error::InvalidConfig(format!(
            "{} frames but {} reference planes",
            frames.len(),
            reference_planes.len()
        )));
    }
    frames
        .par_iter()
        .zip(reference_planes.par_iter())
        .map(|(f, plane)| {
            let raw = PointCloud::from_frame(f.raw, intrinsics, Some(f.mask))?;
            let cal = PointCloud::from_frame(f.calibrated, intrinsics, Some(f.mask))?;
            Ok(EvalRecord {
                nominal_distance: plane.distance(),
                rms_raw: rms_perpendicular(&raw, plane)?,
                rms_calibrated: rms_perpendicular(&cal, plane)?,
                point_count: cal.len(),
                offset_raw: mean_signed_distance(&raw, plane)?,
                offset_calibrated: mean_signed_distance(&cal, plane)?,
            })
        })
        .collect()
}

/// Records aggregated over a distance bucket. RMS values are pooled over all
/// points of the bucket's records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketRow {
    pub distance: f64,
    pub rms_raw: f64,
    pub rms_calibrated: f64,
    pub point_count: usize,
    pub offset_raw: f64,
    pub offset_calibrated: f64,
    /// Indices lie in `[lower, upper)`.
    pub lower: f64,
    pub upper: f64,
}

/// Groups records into buckets `[i·w, (i+1)·w)` by nominal distance and
/// reports the bucket center.
pub fn bucket_records(records: &[EvalRecord], width: f64) -> Vec<BucketRow> {
    let mut groups: std::collections::BTreeMap<i64, Vec<&EvalRecord>> = Default::default();
    for r in records {
        groups
            .entry((r.nominal_distance / width).floor() as i64)
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .filter_map(|(i, recs)| {
            let n: usize = recs.iter().map(|r| r.point_count).sum();
            if n == 0 {
                return None;
            }
            let pooled = |f: fn(&EvalRecord) -> f64| {
                (recs
                    .iter()
                    .map(|r| r.point_count as f64 * f(r).powi(2))
                    .sum::<f64>()
                    / n as f64)
                    .sqrt()
            };
            let mean = |f: fn(&EvalRecord) -> f64| {
                recs.iter().map(|r| r.point_count as f64 * f(r)).sum::<f64>() / n as f64
            };
            let lower = i as f64 * width;
            Some(BucketRow {
                distance: lower + 0.5 * width,
                rms_raw: pooled(|r| r.rms_raw),
                rms_calibrated: pooled(|r| r.rms_calibrated),
                point_count: n,
                offset_raw: mean(|r| r.offset_raw),
                offset_calibrated: mean(|r| r.offset_calibrated),
                lower,
                upper: lower + width,
            })
        })
        .collect()
}

/// Writes `distance_m,rms_raw_m,rms_calibrated_m,n_points`, one row per bucket.
pub fn write_csv<W: Write>(rows: &[BucketRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "distance_m,rms_raw_m,rms_calibrated_m,n_points")?;
    for r in rows {
        writeln!(
            out,
            "{:.3},{:.6},{:.6},{}",
            r.distance, r.rms_raw, r.rms_calibrated, r.point_count
        )?;
    }
    Ok(())
}
