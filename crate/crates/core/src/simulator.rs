//! Synthetic wall sequences with a known bias field.
//!
//! A frame is generated per wall pose: for every pixel the true depth `z*`
//! comes from the ray/plane intersection, the noise-free measurement `z₀`
//! solves `z₀ = z* + μ(z₀)` (the bias mean is a function of the measured
//! depth), Gaussian noise with deviation `σ(z₀)` is added and the result is
//! optionally quantized.
//!
//! Randomness comes from ChaCha8 with the configured seed; frame `i` draws
//! from stream `i`, so frames can be generated in any order or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::error_model::{BiasMap, DepthFrame, NoiseModel, PixelBias, INVALID_DEPTH};
use crate::geometry::{
    reference_depth, transform_plane, CameraIntrinsics, PlaneHessian, RigidTransform, Vec3,
};

/// Name of the random generator recorded in dataset metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), stream = frame index, normal = rand_distr StandardNormal";

/// Largest admissible `|μ|` of a ground-truth field, meters.
pub const MAX_TRUE_BIAS: f64 = 0.2;

/// `k0 + kx·x + ky·y + kxx·x² + kxy·x·y + kyy·y²` in normalized pixel
/// coordinates `x = (u − cx)/(w/2)`, `y = (v − cy)/(h/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Poly2 {
    pub k0: f64,
    pub kx: f64,
    pub ky: f64,
    pub kxx: f64,
    pub kxy: f64,
    pub kyy: f64,
}

impl Poly2 {
    pub fn constant(k0: f64) -> Self {
        Self {
            k0,
            ..Self::default()
        }
    }

    /// `k0 + k_r · (x² + y²)/2`, a radially symmetric bowl.
    pub fn bowl(k0: f64, k_r: f64) -> Self {
        Self {
            k0,
            kxx: 0.5 * k_r,
            kyy: 0.5 * k_r,
            ..Self::default()
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.k0 + self.kx * x + self.ky * y + self.kxx * x * x + self.kxy * x * y + self.kyy * y * y
    }
}

/// Spatially smooth family for the per-pixel coefficients of `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BiasFieldSpec {
    pub a: Poly2,
    pub b: Poly2,
    pub c: Poly2,
}

impl BiasFieldSpec {
    /// A radial bowl whose depth of curvature grows with range, plus a mild
    /// horizontal tilt. `|μ| ≤ 0.1 m` over `[0.5, 4.5]` m.
    pub fn bowl() -> Self {
        Self {
            a: Poly2::bowl(-0.0025, 0.005),
            b: Poly2::default(),
            c: Poly2 {
                kx: 0.004,
                ..Poly2::bowl(-0.035, 0.07)
            },
        }
    }

    /// Draws every polynomial coefficient uniformly from `±ranges`.
    pub fn random(ranges: &BiasFieldSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |p: &Poly2| Poly2 {
            k0: sym(&mut rng, p.k0),
            kx: sym(&mut rng, p.kx),
            ky: sym(&mut rng, p.ky),
            kxx: sym(&mut rng, p.kxx),
            kxy: sym(&mut rng, p.kxy),
            kyy: sym(&mut rng, p.kyy),
        };
        Self {
            a: draw(&ranges.a),
            b: draw(&ranges.b),
            c: draw(&ranges.c),
        }
    }
}

fn sym(rng: &mut ChaCha8Rng, range: f64) -> f64 {
    if range == 0.0 {
        0.0
    } else {
        rng.random_range(-range.abs()..=range.abs())
    }
}

/// Ground-truth per-pixel bias coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBiasField {
    width: u32,
    height: u32,
    coefficients: Vec<PixelBias>,
}

impl GroundTruthBiasField {
    /// Evaluates `spec` at every pixel and checks `|μ| ≤ 0.2 m` on
    /// `depth_range`.
    pub fn from_spec(
        spec: &BiasFieldSpec,
        intrinsics: &CameraIntrinsics,
        depth_range: (f64, f64),
    ) -> Result<Self> {
        let (w, h) = (intrinsics.width, intrinsics.height);
        let half_w = w as f64 / 2.0;
        let half_h = h as f64 / 2.0;
        let coefficients = (0..h)
            .flat_map(|v| (0..w).map(move |u| (u, v)))
            .map(|(u, v)| {
                let x = (u as f64 - intrinsics.cx) / half_w;
                let y = (v as f64 - intrinsics.cy) / half_h;
                PixelBias::new(spec.a.eval(x, y), spec.b.eval(x, y), spec.c.eval(x, y))
            })
            .collect();
        let field = Self {
            width: w,
            height: h,
            coefficients,
        };
        let worst = field.max_abs_bias(depth_range);
        if !(worst <= MAX_TRUE_BIAS) {
            return Err(Error::BiasTooLarge {
                value: worst,
                limit: MAX_TRUE_BIAS,
            });
        }
        Ok(field)
    }

    pub fn uniform(width: u32, height: u32, bias: PixelBias) -> Self {
        Self {
            width,
            height,
            coefficients: vec![bias; width as usize * height as usize],
        }
    }

    pub fn zero(width: u32, height: u32) -> Self {
        Self::uniform(width, height, PixelBias::ZERO)
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn coefficients(&self) -> &[PixelBias] {
        &self.coefficients
    }

    pub fn get(&self, index: usize) -> PixelBias {
        self.coefficients[index]
    }

    /// Largest `|μ(z)|` over all pixels and `z ∈ [lo, hi]`.
    pub fn max_abs_bias(&self, (lo, hi): (f64, f64)) -> f64 {
        self.coefficients
            .iter()
            .map(|p| {
                let mut m = p.mean(lo).abs().max(p.mean(hi).abs());
                if p.a != 0.0 {
                    let vertex = -p.b / (2.0 * p.a);
                    if vertex > lo && vertex < hi {
                        m = m.max(p.mean(vertex).abs());
                    }
                }
                m
            })
            .fold(0.0, f64::max)
    }

    pub fn to_bias_map(&self) -> BiasMap {
        BiasMap::new(
            self.width,
            self.height,
            self.coefficients.clone(),
            vec![true; self.coefficients.len()],
        )
        .expect("ground-truth coefficients are finite and all valid")
    }
}

/// Quadratic deviation `σ(z) = a z² + b z + c` of the injected noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct NoiseCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NoiseCoefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn sigma(&self, z: f64) -> f64 {
        (self.a * z * z + self.b * z + self.c).max(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }

    /// As a [`NoiseModel`] with the given floor, for comparison with fits.
    pub fn to_model(&self, sigma_floor: f64) -> Result<NoiseModel> {
        NoiseModel::new(self.a, self.b, self.c, sigma_floor)
    }
}

/// Rounding of simulated depths.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "step")]
pub enum Quantization {
    #[default]
    Off,
    /// Fixed step, meters.
    Step(f64),
    /// Rounding on a uniform inverse-depth grid, so the depth step is about
    /// `2⁻¹⁰ · z²` and grows with range.
    SensorLike,
}

impl Quantization {
    pub fn apply(&self, z: f64) -> f64 {
        let step = match *self {
            Quantization::Off => return z,
            Quantization::Step(s) => s,
            Quantization::SensorLike => {
                // uniform grid in 1024/z, i.e. steps of about z²/1024 in depth
                let disparity = (1024.0 / z).round();
                return if disparity > 0.0 { 1024.0 / disparity } else { z };
            }
        };
        if step > 0.0 {
            (z / step).round() * step
        } else {
            z
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub intrinsics: CameraIntrinsics,
    /// Wall planes in the reference sensor's frame.
    pub walls: Vec<PlaneHessian>,
    pub extrinsics: RigidTransform,
    pub noise: NoiseCoefficients,
    pub quantization: Quantization,
    pub seed: u64,
    /// Time between consecutive frames, seconds.
    pub frame_interval: f64,
}

/// `count` distances evenly spaced over `[min, max]`.
pub fn evenly_spaced(count: usize, min: f64, max: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (min + max)],
        n => (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Reference-frame planes that the camera sees at distance `distances[i]`,
/// turned by `yaws[i]` radians about the camera's vertical axis.
pub fn walls_facing_camera(
    extrinsics: &RigidTransform,
    distances: &[f64],
    yaws: &[f64],
) -> Result<Vec<PlaneHessian>> {
    if distances.len() != yaws.len() {
        return Err(Error::InvalidConfig(
            "one yaw angle per wall distance expected".into(),
        ));
    }
    let to_reference = extrinsics.inverse();
    distances
        .iter()
        .zip(yaws)
        .map(|(&d, &yaw)| {
            let cam = PlaneHessian::new(Vec3::new(yaw.sin(), 0.0, yaw.cos()), d)?;
            Ok(transform_plane(&cam, &to_reference))
        })
        .collect()
}

/// Uniform yaw angles in `[-max_yaw, max_yaw]`, reproducible from `seed`.
pub fn random_yaws(count: usize, max_yaw: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005E_ED0F_7A55);
    (0..count).map(|_| sym(&mut rng, max_yaw)).collect()
}

/// Noise-free measured depth: the root of `z = z* + a z² + b z + c` nearest
/// to `z*`.
fn biased_depth(z_ref: f64, bias: &PixelBias) -> Option<f64> {
    let q = z_ref + bias.c;
    let p = 1.0 - bias.b;
    let disc = p * p - 4.0 * bias.a * q;
    if disc < 0.0 {
        return None;
    }
    let denom = p + disc.sqrt();
    if denom <= 0.0 {
        return None;
    }
    let mut z = 2.0 * q / denom;
    // one Newton step polishes the last bits
    let f = z - z_ref - bias.mean(z);
    let df = 1.0 - (2.0 * bias.a * z + bias.b);
    if df.abs() > 1e-12 {
        z -= f / df;
    }
    (z > 0.0 && z.is_finite()).then_some(z)
}

/// One frame of the wall sequence, with the wall plane in the reference
/// frame.
pub fn simulate_frame(
    config: &SimConfig,
    wall_index: usize,
    truth: &GroundTruthBiasField,
) -> Result<(DepthFrame, PlaneHessian)> {
    let k = &config.intrinsics;
    k.validate()?;
    if truth.dims() != (k.width, k.height) {
        return Err(Error::DimensionMismatch {
            expected: (k.width, k.height),
            actual: truth.dims(),
        });
    }
    let wall = *config.walls.get(wall_index).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "wall {wall_index} out of range ({} walls)",
            config.walls.len()
        ))
    })?;
    let plane_cam = transform_plane(&wall, &config.extrinsics);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(wall_index as u64);

    let depths: Vec<f64> = k
        .ray_table()
        .iter()
        .zip(truth.coefficients())
        .map(|(ray, bias)| {
            let Ok(z_ref) = reference_depth(&plane_cam, ray) else {
                return INVALID_DEPTH;
            };
            let Some(z0) = biased_depth(z_ref, bias) else {
                return INVALID_DEPTH;
            };
            let z = if config.noise.is_zero() {
                z0
            } else {
                let e: f64 = rng.sample(StandardNormal);
                z0 + config.noise.sigma(z0) * e
            };
            let z = config.quantization.apply(z);
            if z > 0.0 && z.is_finite() {
                z
            } else {
                INVALID_DEPTH
            }
        })
        .collect();
    let frame = DepthFrame::new(k.width, k.height, depths)?;
    if frame.valid_count() == 0 {
        return Err(Error::WallBehindCamera { wall_index });
    }
    Ok((frame, wall))
}

/// All frames of the sequence, generated in parallel.
pub fn simulate_sequence(
    config: &SimConfig,
    truth: &GroundTruthBiasField,
) -> Result<Vec<(DepthFrame, PlaneHessian)>> {
    (0..config.walls.len())
        .into_par_iter()
        .map(|i| simulate_frame(config, i, truth))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(walls: Vec<PlaneHessian>, noise: NoiseCoefficients) -> SimConfig {
        SimConfig {
            intrinsics: CameraIntrinsics::new(40.0, 40.0, 15.5, 11.5, 32, 24).unwrap(),
            walls,
            extrinsics: RigidTransform::identity(),
            noise,
            quantization: Quantization::Off,
            seed: 3,
            frame_interval: 0.1,
        }
    }

    fn wall(d: f64) -> PlaneHessian {
        PlaneHessian::new(Vec3::z(), d).unwrap()
    }

    #[test]
    fn noise_free_unbiased_wall_is_flat() {
        let cfg = config(vec![wall(2.0)], NoiseCoefficients::default());
        let truth = GroundTruthBiasField::zero(32, 24);
        let (frame, plane) = simulate_frame(&cfg, 0, &truth).unwrap();
        assert!(frame.depths().iter().all(|&z| z == 2.0));
        assert_eq!(plane, wall(2.0));
    }

    #[test]
    fn constant_bias_shifts_wall() {
        let cfg = config(vec![wall(2.0)], NoiseCoefficients::default());
        let truth = GroundTruthBiasField::uniform(32, 24, PixelBias::new(0.0, 0.0, 0.05));
        let (frame, _) = simulate_frame(&cfg, 0, &truth).unwrap();
        for &z in frame.depths() {
            assert_abs_diff_eq!(z, 2.05, epsilon = 1e-12);
        }
    }

    #[test]
    fn measured_depth_satisfies_bias_equation() {
        let b = PixelBias::new(0.004, -0.01, 0.02);
        for z_ref in [0.5, 1.0, 2.7, 4.5] {
            let z = biased_depth(z_ref, &b).unwrap();
            assert!((z - z_ref - b.mean(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_frames() {
        let cfg = config(vec![wall(1.0), wall(3.0)], NoiseCoefficients::new(0.0007, 0.0, 0.002));
        let truth = GroundTruthBiasField::zero(32, 24);
        let a = simulate_sequence(&cfg, &truth).unwrap();
        let b = simulate_sequence(&cfg, &truth).unwrap();
        assert_eq!(a, b);
        // frames are independent of generation order
        let (f1, _) = simulate_frame(&cfg, 1, &truth).unwrap();
        assert_eq!(f1, a[1].0);
        let mut other = cfg.clone();
        other.seed = 4;
        assert_ne!(simulate_sequence(&other, &truth).unwrap(), a);
    }

    #[test]
    fn wall_behind_camera() {
        let cfg = config(vec![PlaneHessian::new(-Vec3::z(), 2.0).unwrap()], NoiseCoefficients::default());
        assert!(matches!(
            simulate_frame(&cfg, 0, &GroundTruthBiasField::zero(32, 24)),
            Err(Error::WallBehindCamera { wall_index: 0 })
        ));
    }

    #[test]
    fn bowl_field_within_limits() {
        let k = CameraIntrinsics::new(140.0, 140.0, 79.5, 59.5, 160, 120).unwrap();
        let f = GroundTruthBiasField::from_spec(&BiasFieldSpec::bowl(), &k, (0.5, 4.5)).unwrap();
        let m = f.max_abs_bias((0.5, 4.5));
        assert!(m <= 0.1 && m > 0.05, "max |mu| = {m}");
        let huge = BiasFieldSpec {
            c: Poly2::constant(0.3),
            ..Default::default()
        };
        assert!(matches!(
            GroundTruthBiasField::from_spec(&huge, &k, (0.5, 4.5)),
            Err(Error::BiasTooLarge { .. })
        ));
    }

    #[test]
    fn quantization_modes() {
        assert_eq!(Quantization::Off.apply(1.23456), 1.23456);
        assert_abs_diff_eq!(Quantization::Step(0.01).apply(1.234), 1.23, epsilon = 1e-12);
        // 1024/4 = 256 is on the grid, the next step out is 1024/255
        assert_eq!(Quantization::SensorLike.apply(4.004), 4.0);
        assert_eq!(Quantization::SensorLike.apply(4.01), 1024.0 / 255.0);
        let q = Quantization::SensorLike.apply(2.7301);
        assert_eq!(Quantization::SensorLike.apply(q), q);
    }

    #[test]
    fn walls_facing_camera_round_trip() {
        let ext = RigidTransform::from_euler(0.1, -0.05, 0.2, Vec3::new(0.1, -0.2, 0.05));
        let walls = walls_facing_camera(&ext, &[1.0, 2.5], &[0.0, 0.1]).unwrap();
        let cam = transform_plane(&walls[1], &ext);
        assert_abs_diff_eq!(cam.distance(), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cam.normal(), Vec3::new(0.1f64.sin(), 0.0, 0.1f64.cos()), epsilon = 1e-12);
    }
}
