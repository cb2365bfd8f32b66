//! Synthetic wall sequence written as a dataset directory.
//!
//! cargo run --example simulate_wall_sequence -- /tmp/walls

use depthcal::io::sim_config::generate_dataset;
use depthcal::simulator::{evenly_spaced, random_yaws, walls_facing_camera};
use depthcal::{
    BiasFieldSpec, CameraIntrinsics, GroundTruthBiasField, NoiseCoefficients, Quantization,
    RigidTransform, SimConfig, Vec3,
};

fn main() -> depthcal::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "walls".into());
    let k = CameraIntrinsics::new(140.0, 140.0, 79.5, 59.5, 160, 120)?;
    let ext = RigidTransform::from_euler(0.0, 0.01, 0.0, Vec3::new(0.0, 0.1, 0.0));
    let n = 30;
    let walls = walls_facing_camera(&ext, &evenly_spaced(n, 0.6, 4.0), &random_yaws(n, 0.1, 3))?;
    let truth = GroundTruthBiasField::from_spec(&BiasFieldSpec::bowl(), &k, (0.5, 4.5))?;
    let config = SimConfig {
        intrinsics: k,
        walls,
        extrinsics: ext,
        noise: NoiseCoefficients::new(0.0007, 0.0, 0.002),
        quantization: Quantization::SensorLike,
        seed: 3,
        frame_interval: 0.2,
    };
    let manifest = generate_dataset(&config, &truth, &out)?;
    println!("wrote {}", manifest.display());
    println!("max |mu| over 0.5..4.5 m: {:.4} m", truth.max_abs_bias((0.5, 4.5)));
    Ok(())
}
