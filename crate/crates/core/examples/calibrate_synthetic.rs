//! In-memory calibration against a known bias field.

use depthcal::calibration::Observation;
use depthcal::simulator::{evenly_spaced, walls_facing_camera};
use depthcal::{
    calibrate, simulate_sequence, BiasFieldSpec, CalibrationConfig, CameraIntrinsics,
    GroundTruthBiasField, NoiseCoefficients, Quantization, RigidTransform, SimConfig, Vec3,
};

fn main() -> depthcal::Result<()> {
    let k = CameraIntrinsics::new(140.0, 140.0, 79.5, 59.5, 160, 120)?;
    let ext = RigidTransform::from_euler(0.01, -0.02, 0.0, Vec3::new(0.05, -0.12, 0.03));
    let truth = GroundTruthBiasField::from_spec(&BiasFieldSpec::bowl(), &k, (0.5, 4.5))?;
    let config = SimConfig {
        intrinsics: k,
        walls: walls_facing_camera(&ext, &evenly_spaced(50, 0.5, 4.5), &[0.0; 50])?,
        extrinsics: ext,
        noise: NoiseCoefficients::new(0.0007, 0.0, 0.002),
        quantization: Quantization::Off,
        seed: 7,
        frame_interval: 0.1,
    };
    let observations: Vec<Observation> = simulate_sequence(&config, &truth)?
        .into_iter()
        .map(|(frame, plane)| Observation { frame, plane })
        .collect();

    let start = std::time::Instant::now();
    let cal = calibrate(&observations, &ext, &k, &CalibrationConfig::default())?;
    println!("calibrated in {:.2} s", start.elapsed().as_secs_f64());
    println!(
        "sigma(z) = {:.3e} z² + {:.3e} z + {:.3e}   (true 7.000e-4 z² + 0 z + 2.000e-3)",
        cal.noise.a, cal.noise.b, cal.noise.c
    );

    for (u, v) in [(0usize, 0usize), (80, 60), (159, 119)] {
        let i = v * 160 + u;
        let est = cal.bias_map.get(i);
        let gt = truth.get(i);
        println!("pixel ({u:3}, {v:3})  z    mu      mu_hat   (mm)");
        for z in [1.0, 2.0, 3.0, 4.0] {
            println!(
                "                  {z:.1}  {:7.2}  {:7.2}",
                1e3 * gt.mean(z),
                1e3 * est.mean(z)
            );
        }
    }
    println!(
        "valid pixels: {} / {}, dropped: {}",
        cal.report.valid_pixels,
        k.pixel_count(),
        cal.report.dropped.total()
    );
    Ok(())
}
