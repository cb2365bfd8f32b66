//! Local and global error curves of raw and calibrated clouds.

use depthcal::evaluation::{bucket_records, wall_inlier_mask, write_csv, FramePair};
use depthcal::simulator::{evenly_spaced, walls_facing_camera};
use depthcal::{
    calibrate, compensate_frame, evaluate_global, evaluate_local, simulate_sequence,
    transform_plane, BiasFieldSpec, CalibrationConfig, CameraIntrinsics, GroundTruthBiasField,
    NoiseCoefficients, Observation, Quantization, RigidTransform, SimConfig,
};

fn sequence(
    k: CameraIntrinsics,
    ext: RigidTransform,
    distances: Vec<f64>,
    seed: u64,
    truth: &GroundTruthBiasField,
) -> depthcal::Result<Vec<Observation>> {
    let n = distances.len();
    let config = SimConfig {
        intrinsics: k,
        walls: walls_facing_camera(&ext, &distances, &vec![0.0; n])?,
        extrinsics: ext,
        noise: NoiseCoefficients::new(0.0007, 0.0, 0.002),
        quantization: Quantization::Off,
        seed,
        frame_interval: 0.1,
    };
    Ok(simulate_sequence(&config, truth)?
        .into_iter()
        .map(|(frame, plane)| Observation { frame, plane })
        .collect())
}

fn main() -> depthcal::Result<()> {
    let k = CameraIntrinsics::new(140.0, 140.0, 79.5, 59.5, 160, 120)?;
    let ext = RigidTransform::identity();
    let truth = GroundTruthBiasField::from_spec(&BiasFieldSpec::bowl(), &k, (0.5, 4.5))?;
    let train = sequence(k, ext, evenly_spaced(50, 0.5, 4.5), 1, &truth)?;
    let cal = calibrate(&train, &ext, &k, &CalibrationConfig::default())?;

    let test = sequence(k, ext, evenly_spaced(40, 0.6, 4.4), 2, &truth)?;
    let planes: Vec<_> = test.iter().map(|o| transform_plane(&o.plane, &ext)).collect();
    let calibrated = test
        .iter()
        .map(|o| compensate_frame(&o.frame, &cal.bias_map))
        .collect::<depthcal::Result<Vec<_>>>()?;
    let masks = test
        .iter()
        .zip(&planes)
        .map(|(o, p)| wall_inlier_mask(&o.frame, p, &k, 0.2))
        .collect::<depthcal::Result<Vec<_>>>()?;
    let pairs: Vec<FramePair<'_>> = (0..test.len())
        .map(|i| FramePair {
            raw: &test[i].frame,
            calibrated: &calibrated[i],
            mask: &masks[i],
        })
        .collect();

    println!("local distortion");
    let local = bucket_records(&evaluate_local(&pairs, &k)?, 0.25);
    write_csv(&local, std::io::stdout()).unwrap();
    println!("\nglobal error");
    let global = bucket_records(&evaluate_global(&pairs, &planes, &k)?, 0.25);
    write_csv(&global, std::io::stdout()).unwrap();
    Ok(())
}
