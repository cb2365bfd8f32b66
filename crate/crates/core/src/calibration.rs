//! Estimation of the global noise model and the per-pixel bias functions.
//!
//! The pipeline has two stages:
//!
//! 1. **Noise model.** Residuals `z − z*` are binned by measured depth for
//!    every pixel. Within a bin, each pixel's own mean is removed before the
//!    squared deviations are pooled across pixels, which yields one deviation
//!    sample `σ_k` per bin. A quadratic `σ(k) = a k² + b k + c` is then fitted
//!    to these samples by ordinary least squares.
//! 2. **Bias functions.** For every pixel independently, the Gaussian
//!    likelihood of its pairs reduces to a weighted linear least-squares
//!    problem in `(a, b, c)` with weights `1/σ²(z)`, solved in closed form.
//!
//! Pixel fits depend only on the multiset of pairs of that pixel: pair lists
//! are put into a canonical order before any floating-point reduction, so the
//! output is bit-identical regardless of frame order or thread scheduling.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_model::{BiasMap, DepthFrame, NoiseModel, PixelBias, DEFAULT_SIGMA_FLOOR};
use crate::geometry::{
    reference_depth, spd_condition_number, transform_plane, CameraIntrinsics, PlaneHessian,
    RigidTransform, Vec3,
};

/// Measured depth `z` and reference depth `z*` observed at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPair {
    pub measured: f64,
    pub reference: f64,
}

impl DepthPair {
    pub fn new(measured: f64, reference: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(measured) && ok(reference)) {
            return Err(Error::InvalidConfig(format!(
                "depth pair ({measured}, {reference}) must be finite and positive"
            )));
        }
        Ok(Self {
            measured,
            reference,
        })
    }

    /// Observed bias `z − z*`.
    pub fn residual(&self) -> f64 {
        self.measured - self.reference
    }

    fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.measured
            .total_cmp(&other.measured)
            .then(self.reference.total_cmp(&other.reference))
    }
}

/// Per-pixel sets of depth pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStore {
    width: u32,
    height: u32,
    pairs: Vec<Vec<DepthPair>>,
}

impl PairStore {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pairs: vec![Vec::new(); width as usize * height as usize],
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn push(&mut self, pixel: usize, pair: DepthPair) {
        self.pairs[pixel].push(pair);
    }

    pub fn pixel(&self, pixel: usize) -> &[DepthPair] {
        &self.pairs[pixel]
    }

    pub fn total_pairs(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.iter().all(Vec::is_empty)
    }

    /// Sorts every pixel's pairs so that reductions are independent of the
    /// order in which frames were accumulated.
    pub fn canonicalize(&mut self) {
        self.pairs
            .par_iter_mut()
            .for_each(|p| p.sort_unstable_by(DepthPair::canonical_cmp));
    }
}

/// Gates applied while turning frames into depth pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumulateConfig {
    /// Measured depths beyond this range are ignored, meters.
    pub max_range: f64,
    /// Pairs with `|z − z*|` above this gate are treated as non-wall pixels.
    pub outlier_gate: f64,
}

impl Default for AccumulateConfig {
    fn default() -> Self {
        Self {
            max_range: 8.0,
            outlier_gate: 0.5,
        }
    }
}

/// Per-frame accumulation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulateStats {
    pub accepted: usize,
    pub no_return: usize,
    pub out_of_range: usize,
    pub no_intersection: usize,
    pub outliers: usize,
}

impl AccumulateStats {
    fn merge(&mut self, other: &AccumulateStats) {
        self.accepted += other.accepted;
        self.no_return += other.no_return;
        self.out_of_range += other.out_of_range;
        self.no_intersection += other.no_intersection;
        self.outliers += other.outliers;
    }
}

/// Appends `(z, z*)` for every usable pixel of `frame`.
///
/// `plane_cam` must already be expressed in the camera frame.
pub fn accumulate_pairs(
    store: &mut PairStore,
    frame: &DepthFrame,
    plane_cam: &PlaneHessian,
    intrinsics: &CameraIntrinsics,
    config: &AccumulateConfig,
) -> Result<AccumulateStats> {
    let rays = intrinsics.ray_table();
    accumulate_with_rays(store, frame, plane_cam, &rays, config)
}

fn accumulate_with_rays(
    store: &mut PairStore,
    frame: &DepthFrame,
    plane_cam: &PlaneHessian,
    rays: &[Vec3],
    config: &AccumulateConfig,
) -> Result<AccumulateStats> {
    if frame.dims() != store.dims() {
        return Err(Error::DimensionMismatch {
            expected: store.dims(),
            actual: frame.dims(),
        });
    }
    let mut stats = AccumulateStats::default();
    for (pixel, (&z, ray)) in frame.depths().iter().zip(rays).enumerate() {
        if !frame.is_valid(pixel) {
            stats.no_return += 1;
            continue;
        }
        if z > config.max_range {
            stats.out_of_range += 1;
            continue;
        }
        let Ok(z_ref) = reference_depth(plane_cam, ray) else {
            stats.no_intersection += 1;
            continue;
        };
        if (z - z_ref).abs() > config.outlier_gate {
            stats.outliers += 1;
            continue;
        }
        store.push(
            pixel,
            DepthPair {
                measured: z,
                reference: z_ref,
            },
        );
        stats.accepted += 1;
    }
    Ok(stats)
}

/// Discretization of the measured-depth axis used for the noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    /// Strictly increasing bin centers, meters.
    pub bin_centers: Vec<f64>,
    /// A pair belongs to bin `k` when `|z − k| < threshold`.
    pub threshold: f64,
    /// Bins with fewer pooled samples are left out of the σ fit.
    pub min_samples_per_bin: usize,
}

impl BinningConfig {
    pub fn new(bin_centers: Vec<f64>, threshold: f64, min_samples_per_bin: usize) -> Result<Self> {
        let cfg = Self {
            bin_centers,
            threshold,
            min_samples_per_bin,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Centers `start, start + step, …` up to and including `end` (within
    /// half a step).
    pub fn uniform(
        start: f64,
        step: f64,
        end: f64,
        threshold: f64,
        min_samples_per_bin: usize,
    ) -> Result<Self> {
        if !(step > 0.0 && start.is_finite() && end.is_finite() && end >= start) {
            return Err(Error::InvalidConfig(format!(
                "bad bin range {start}:{step}:{end}"
            )));
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        let centers = (0..count).map(|i| start + i as f64 * step).collect();
        Self::new(centers, threshold, min_samples_per_bin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_centers.is_empty() {
            return Err(Error::InvalidConfig("no bin centers".into()));
        }
        if self.bin_centers.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidConfig("non-finite bin center".into()));
        }
        if self.bin_centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "bin centers must be strictly increasing".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bin threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.min_samples_per_bin == 0 {
            return Err(Error::InvalidConfig("min_samples_per_bin must be ≥ 1".into()));
        }
        Ok(())
    }
}

impl Default for BinningConfig {
    /// Centers every 0.1 m from 0.4 m to 5.0 m, threshold 0.1 m. Neighboring
    /// bins overlap by half their width.
    fn default() -> Self {
        Self {
            bin_centers: (4..=50).map(|i| i as f64 / 10.0).collect(),
            threshold: 0.1,
            min_samples_per_bin: 1000,
        }
    }
}

/// Residuals of one pixel that fell into one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelResiduals {
    pub pixel: usize,
    pub residuals: Vec<f64>,
}

/// Residual sets `S^k` for every bin `k`, split by pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedResiduals {
    centers: Vec<f64>,
    bins: Vec<Vec<PixelResiduals>>,
}

impl BinnedResiduals {
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Non-empty per-pixel sets of bin `bin`, in pixel order.
    pub fn bin(&self, bin: usize) -> &[PixelResiduals] {
        &self.bins[bin]
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn pooled_sigma(
        &self,
        bin: usize,
        min_samples: usize,
        divisor: PoolingDivisor,
    ) -> Result<SigmaSample, InsufficientBin> {
        pooled_sigma(
            self.bins[bin].iter().map(|p| p.residuals.as_slice()),
            self.centers[bin],
            min_samples,
            divisor,
        )
    }
}

/// Splits every pixel's residuals into the bins whose center lies strictly
/// within `threshold` of the measured depth. Bins may overlap, in which case a
/// pair lands in several of them.
pub fn bin_residuals(store: &PairStore, config: &BinningConfig) -> BinnedResiduals {
    let centers = &config.bin_centers;
    let t = config.threshold;
    let mut bins: Vec<Vec<PixelResiduals>> = vec![Vec::new(); centers.len()];
    let mut scratch: Vec<Vec<f64>> = vec![Vec::new(); centers.len()];
    for pixel in 0..store.pixel_count() {
        let pairs = store.pixel(pixel);
        if pairs.is_empty() {
            continue;
        }
        for pair in pairs {
            let z = pair.measured;
            let first = centers.partition_point(|&k| k <= z - t);
            for (i, &k) in centers.iter().enumerate().skip(first) {
                if k - z >= t {
                    break;
                }
                if (z - k).abs() < t {
                    scratch[i].push(pair.residual());
                }
            }
        }
        for (bin, set) in bins.iter_mut().zip(scratch.iter_mut()) {
            if !set.is_empty() {
                bin.push(PixelResiduals {
                    pixel,
                    residuals: std::mem::take(set),
                });
            }
        }
    }
    BinnedResiduals {
        centers: centers.clone(),
        bins,
    }
}

/// Normalization of the pooled sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingDivisor {
    /// Divide by the total number of residuals, `Σ |S_p|`.
    SampleCount,
    /// Divide by the degrees of freedom left after removing each pixel's
    /// mean, `Σ (|S_p| − 1)`. Unbiased when pixels contribute few samples.
    DegreesOfFreedom,
}

/// One deviation sample `σ_k` of the noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSample {
    pub bin_center: f64,
    pub sigma: f64,
    /// Pooled residual count `Σ |S_p|`.
    pub count: usize,
    /// Pooled degrees of freedom `Σ (|S_p| − 1)`.
    pub dof: usize,
}

/// A bin did not collect enough samples to estimate a deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("bin has {available} usable samples, need {required}")]
pub struct InsufficientBin {
    pub available: usize,
    pub required: usize,
}

/// Sum of squared deviations from each set's own mean, pooled over sets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PooledScatter {
    pub sum_sq: f64,
    pub count: usize,
    pub groups: usize,
}

impl PooledScatter {
    pub fn dof(&self) -> usize {
        self.count - self.groups
    }
}

/// One-pass (Welford) accumulation of per-set scatter.
pub fn pooled_scatter<'a>(sets: impl IntoIterator<Item = &'a [f64]>) -> PooledScatter {
    let mut out = PooledScatter::default();
    for set in sets {
        if set.is_empty() {
            continue;
        }
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in set.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        out.sum_sq += m2;
        out.count += set.len();
        out.groups += 1;
    }
    out
}

/// Pooled deviation of a bin after removing each pixel's own mean.
pub fn pooled_sigma<'a>(
    sets: impl IntoIterator<Item = &'a [f64]>,
    bin_center: f64,
    min_samples: usize,
    divisor: PoolingDivisor,
) -> Result<SigmaSample, InsufficientBin> {
    let scatter = pooled_scatter(sets);
    let available = match divisor {
        PoolingDivisor::SampleCount => scatter.count,
        PoolingDivisor::DegreesOfFreedom => scatter.dof(),
    };
    if available < min_samples.max(1) {
        return Err(InsufficientBin {
            available,
            required: min_samples.max(1),
        });
    }
    Ok(SigmaSample {
        bin_center,
        sigma: (scatter.sum_sq / available as f64).sqrt(),
        count: scatter.count,
        dof: scatter.dof(),
    })
}

/// Largest admissible condition number of the σ-fit normal matrix.
pub const SIGMA_FIT_MAX_CONDITION: f64 = 1e12;

/// Unweighted least-squares quadratic through the deviation samples.
pub fn fit_sigma_quadratic(samples: &[SigmaSample]) -> Result<NoiseModel> {
    fit_sigma_quadratic_with_floor(samples, DEFAULT_SIGMA_FLOOR)
}

pub fn fit_sigma_quadratic_with_floor(
    samples: &[SigmaSample],
    sigma_floor: f64,
) -> Result<NoiseModel> {
    let mut centers: Vec<f64> = samples.iter().map(|s| s.bin_center).collect();
    centers.sort_by(f64::total_cmp);
    centers.dedup();
    if centers.len() < 3 {
        return Err(Error::DegenerateSystem(format!(
            "σ fit needs 3 distinct bin centers, got {}",
            centers.len()
        )));
    }
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for s in samples {
        let k = s.bin_center;
        let row = Vector3::new(k * k, k, 1.0);
        normal += row * row.transpose();
        rhs += row * s.sigma;
    }
    let coeffs = solve_normal_equations(normal, rhs, SIGMA_FIT_MAX_CONDITION)
        .map_err(|cond| Error::DegenerateSystem(format!("σ fit condition number {cond:e}")))?;
    NoiseModel::new(coeffs[0], coeffs[1], coeffs[2], sigma_floor)
}

/// Solves `N p = r` for a symmetric positive definite `N`; returns the
/// condition number as the error when it exceeds `max_condition`.
fn solve_normal_equations(
    normal: Matrix3<f64>,
    rhs: Vector3<f64>,
    max_condition: f64,
) -> Result<Vector3<f64>, f64> {
    let cond = spd_condition_number(normal);
    if !(cond <= max_condition) {
        return Err(cond);
    }
    let chol = normal.cholesky().ok_or(cond)?;
    Ok(chol.solve(&rhs))
}

/// Identifiability guards for the per-pixel fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub min_pairs: usize,
    /// Minimum spread of measured depths, meters.
    pub span_min: f64,
    pub max_condition: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            min_pairs: 10,
            span_min: 0.5,
            max_condition: 1e10,
        }
    }
}

/// Reason a pixel's bias could not be estimated.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum Insufficient {
    #[error("{count} pairs, need {required}")]
    TooFewPairs { count: usize, required: usize },
    #[error("depth span {span:.3} m below {required:.3} m")]
    NarrowSpan { span: f64, required: f64 },
    #[error("normal matrix condition number {condition:e}")]
    IllConditioned { condition: f64 },
}

/// Weighted objective `Σ (z − z* − μ(z))² / σ²(z)`.
pub fn weighted_objective(pairs: &[DepthPair], noise: &NoiseModel, bias: &PixelBias) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let s = noise.sigma(p.measured);
            let r = p.residual() - bias.mean(p.measured);
            r * r / (s * s)
        })
        .sum()
}

/// Maximum-likelihood bias of one pixel: the closed-form weighted least
/// squares solution with design rows `(z², z, 1)`, targets `z − z*` and
/// weights `1/σ²(z)`.
pub fn fit_pixel_bias(
    pairs: &[DepthPair],
    noise: &NoiseModel,
    config: &FitConfig,
) -> Result<PixelBias, Insufficient> {
    if pairs.len() < config.min_pairs.max(3) {
        return Err(Insufficient::TooFewPairs {
            count: pairs.len(),
            required: config.min_pairs.max(3),
        });
    }
    let (lo, hi) = pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.measured), hi.max(p.measured))
    });
    if hi - lo < config.span_min {
        return Err(Insufficient::NarrowSpan {
            span: hi - lo,
            required: config.span_min,
        });
    }
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for p in pairs {
        let z = p.measured;
        let s = noise.sigma(z);
        let w = 1.0 / (s * s);
        let row = Vector3::new(z * z, z, 1.0);
        normal += (row * w) * row.transpose();
        rhs += row * (w * p.residual());
    }
    let coeffs = solve_normal_equations(normal, rhs, config.max_condition)
        .map_err(|condition| Insufficient::IllConditioned { condition })?;
    let bias = PixelBias::new(coeffs[0], coeffs[1], coeffs[2]);
    if !bias.is_finite() {
        return Err(Insufficient::IllConditioned {
            condition: f64::INFINITY,
        });
    }
    Ok(bias)
}

/// A depth frame together with the wall plane seen by the reference sensor
/// (expressed in the reference sensor's frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub frame: DepthFrame,
    pub plane: PlaneHessian,
}

/// Full set of knobs for [`calibrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub binning: BinningConfig,
    pub accumulate: AccumulateConfig,
    pub fit: FitConfig,
    pub pooling: PoolingDivisor,
    pub sigma_floor: f64,
    /// Minimum spread of camera-frame wall distances across the dataset.
    pub min_distance_span: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            binning: BinningConfig::default(),
            accumulate: AccumulateConfig::default(),
            fit: FitConfig::default(),
            pooling: PoolingDivisor::DegreesOfFreedom,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            min_distance_span: 0.5,
        }
    }
}

/// Diagnostics for one depth bin of the noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub center: f64,
    pub pixels: usize,
    pub count: usize,
    pub dof: usize,
    /// Pooled deviation normalized by the residual count.
    pub sigma_by_count: Option<f64>,
    /// Pooled deviation normalized by the degrees of freedom.
    pub sigma_by_dof: Option<f64>,
    /// Whether this bin entered the σ fit.
    pub used: bool,
    /// `σ_k − σ̂(k)` for used bins.
    pub fit_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedPixels {
    pub too_few_pairs: usize,
    pub narrow_span: usize,
    pub ill_conditioned: usize,
}

impl DroppedPixels {
    pub fn total(&self) -> usize {
        self.too_few_pairs + self.narrow_span + self.ill_conditioned
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub frames: usize,
    pub distance_range: (f64, f64),
    pub accumulation: AccumulateStats,
    pub bins: Vec<BinReport>,
    pub noise_model: [f64; 3],
    pub valid_pixels: usize,
    pub dropped: DroppedPixels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub bias_map: BiasMap,
    pub noise: NoiseModel,
    pub report: CalibrationReport,
}

/// Runs the full estimation: planes into the camera frame, pair
/// accumulation, binning, pooled deviations, σ fit and per-pixel fits.
pub fn calibrate(
    observations: &[Observation],
    extrinsics: &RigidTransform,
    intrinsics: &CameraIntrinsics,
    config: &CalibrationConfig,
) -> Result<Calibration> {
    intrinsics.validate()?;
    config.binning.validate()?;

    let planes_cam: Vec<PlaneHessian> = observations
        .iter()
        .map(|o| transform_plane(&o.plane, extrinsics))
        .collect();
    let (d_min, d_max) = planes_cam
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.distance()), hi.max(p.distance()))
        });
    let span = if planes_cam.is_empty() { 0.0 } else { d_max - d_min };
    if !(span >= config.min_distance_span) {
        return Err(Error::TooFewDistances {
            span,
            required: config.min_distance_span,
        });
    }

    let rays = intrinsics.ray_table();
    let mut store = PairStore::new(intrinsics.width, intrinsics.height);
    let mut accumulation = AccumulateStats::default();
    for (obs, plane) in observations.iter().zip(&planes_cam) {
        obs.frame.check_intrinsics(intrinsics)?;
        let stats = accumulate_with_rays(&mut store, &obs.frame, plane, &rays, &config.accumulate)?;
        accumulation.merge(&stats);
    }
    store.canonicalize();

    let binned = bin_residuals(&store, &config.binning);
    let mut bins = Vec::with_capacity(binned.len());
    let mut samples = Vec::new();
    for (i, &center) in binned.centers().iter().enumerate() {
        let scatter = pooled_scatter(binned.bin(i).iter().map(|p| p.residuals.as_slice()));
        let sigma_by = |n: usize| (n > 0).then(|| (scatter.sum_sq / n as f64).sqrt());
        let sample = binned.pooled_sigma(i, config.binning.min_samples_per_bin, config.pooling);
        if let Ok(s) = sample {
            samples.push(s);
        }
        bins.push(BinReport {
            center,
            pixels: scatter.groups,
            count: scatter.count,
            dof: scatter.dof(),
            sigma_by_count: sigma_by(scatter.count),
            sigma_by_dof: sigma_by(scatter.dof()),
            used: sample.is_ok(),
            fit_residual: None,
        });
    }

    let noise = fit_sigma_quadratic_with_floor(&samples, config.sigma_floor)?;
    for (bin, s) in bins.iter_mut().filter(|b| b.used).zip(&samples) {
        bin.fit_residual = Some(s.sigma - noise.polynomial(s.bin_center));
    }

    let fits: Vec<Result<PixelBias, Insufficient>> = (0..store.pixel_count())
        .into_par_iter()
        .map(|pixel| fit_pixel_bias(store.pixel(pixel), &noise, &config.fit))
        .collect();
    let mut dropped = DroppedPixels::default();
    let mut coefficients = Vec::with_capacity(fits.len());
    let mut valid = Vec::with_capacity(fits.len());
    for fit in fits {
        match fit {
            Ok(bias) => {
                coefficients.push(bias);
                valid.push(true);
            }
            Err(reason) => {
                match reason {
                    Insufficient::TooFewPairs { .. } => dropped.too_few_pairs += 1,
                    Insufficient::NarrowSpan { .. } => dropped.narrow_span += 1,
                    Insufficient::IllConditioned { .. } => dropped.ill_conditioned += 1,
                }
                coefficients.push(PixelBias::ZERO);
                valid.push(false);
            }
        }
    }
    let bias_map = BiasMap::new(intrinsics.width, intrinsics.height, coefficients, valid)?;

    let report = CalibrationReport {
        frames: observations.len(),
        distance_range: (d_min, d_max),
        accumulation,
        bins,
        noise_model: [noise.a, noise.b, noise.c],
        valid_pixels: bias_map.valid_count(),
        dropped,
    };
    Ok(Calibration {
        bias_map,
        noise,
        report,
    })
}
