#![allow(dead_code)]

use depthcal::calibration::Observation;
use depthcal::simulator::{evenly_spaced, random_yaws, walls_facing_camera};
use depthcal::{
    BiasFieldSpec, CameraIntrinsics, GroundTruthBiasField, NoiseCoefficients, PlaneHessian,
    Quantization, RigidTransform, SimConfig, Vec3,
};

pub const TRAIN_SEED: u64 = 7;
pub const HELD_OUT_SEED: u64 = 8;

pub fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(140.0, 140.0, 79.5, 59.5, 160, 120).unwrap()
}

/// Laser slightly offset and tilted from the camera.
pub fn extrinsics() -> RigidTransform {
    RigidTransform::from_euler(0.01, -0.02, 0.015, Vec3::new(0.05, -0.12, 0.03))
}

pub fn noise() -> NoiseCoefficients {
    NoiseCoefficients::new(0.0007, 0.0, 0.002)
}

pub fn truth() -> GroundTruthBiasField {
    GroundTruthBiasField::from_spec(&BiasFieldSpec::bowl(), &intrinsics(), (0.5, 4.5)).unwrap()
}

/// 50 fronto-parallel walls evenly spread over 0.5..4.5 m.
pub fn training_walls() -> Vec<PlaneHessian> {
    walls_facing_camera(&extrinsics(), &evenly_spaced(50, 0.5, 4.5), &[0.0; 50]).unwrap()
}

/// Walls at other distances, turned by up to 5°.
pub fn held_out_walls() -> Vec<PlaneHessian> {
    let n = 64;
    walls_facing_camera(
        &extrinsics(),
        &evenly_spaced(n, 0.55, 4.3),
        &random_yaws(n, 5f64.to_radians(), HELD_OUT_SEED),
    )
    .unwrap()
}

pub fn sim_config(walls: Vec<PlaneHessian>, noise: NoiseCoefficients, seed: u64) -> SimConfig {
    SimConfig {
        intrinsics: intrinsics(),
        walls,
        extrinsics: extrinsics(),
        noise,
        quantization: Quantization::Off,
        seed,
        frame_interval: 0.1,
    }
}

pub fn simulate(config: &SimConfig, truth: &GroundTruthBiasField) -> Vec<Observation> {
    depthcal::simulate_sequence(config, truth)
        .unwrap()
        .into_iter()
        .map(|(frame, plane)| Observation { frame, plane })
        .collect()
}

/// `max |μ̂(z) − μ(z)|` over `z ∈ [lo, hi]` for every pixel valid in `map`.
pub fn max_bias_errors(
    map: &depthcal::BiasMap,
    truth: &GroundTruthBiasField,
    (lo, hi): (f64, f64),
) -> Vec<f64> {
    let zs: Vec<f64> = (0..=300).map(|i| lo + (hi - lo) * i as f64 / 300.0).collect();
    map.coefficients()
        .iter()
        .zip(map.valid())
        .zip(truth.coefficients())
        .filter(|((_, &v), _)| v)
        .map(|((est, _), gt)| {
            zs.iter()
                .map(|&z| (est.mean(z) - gt.mean(z)).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}
