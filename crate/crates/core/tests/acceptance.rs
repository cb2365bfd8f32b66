//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use depthcal::calibration::{
    fit_pixel_bias, pooled_sigma, weighted_objective, DepthPair, FitConfig, PoolingDivisor,
};
use depthcal::cli::{cli_calibrate, CalibrateOptions};
use depthcal::evaluation::{bucket_records, wall_inlier_mask, BucketRow, FramePair};
use depthcal::io::sim_config::generate_dataset;
use depthcal::{
    calibrate, compensate_frame, evaluate_global, evaluate_local, reference_depth,
    transform_plane, Calibration, CalibrationConfig, CalibrationFormat, NoiseCoefficients,
    NoiseModel, PixelBias, PlaneHessian, RigidTransform, Vec3,
};

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        title,
        pass,
        detail,
    }
}

struct Trained {
    calibration: Calibration,
    seconds: f64,
}

fn train() -> Trained {
    let truth = common::truth();
    let cfg = common::sim_config(common::training_walls(), common::noise(), common::TRAIN_SEED);
    let obs = common::simulate(&cfg, &truth);
    let start = Instant::now();
    let calibration = calibrate(
        &obs,
        &common::extrinsics(),
        &common::intrinsics(),
        &CalibrationConfig::default(),
    )
    .unwrap();
    Trained {
        calibration,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Share of pixels an ideal weighted fit meets the 5 mm bound on, sampling the
/// coefficient error from `(Xᵀ W X)⁻¹` at the training depths.
fn ideal_pass_rate() -> f64 {
    let noise = common::noise();
    let mut info = nalgebra::Matrix3::<f64>::zeros();
    for z in depthcal::simulator::evenly_spaced(50, 0.5, 4.5) {
        let x = nalgebra::Vector3::new(z * z, z, 1.0);
        info += x * x.transpose() / noise.sigma(z).powi(2);
    }
    let cov = info.try_inverse().unwrap();
    let l = cov.cholesky().unwrap().l();
    let zs: Vec<f64> = (0..=300).map(|i| 1.0 + 3.0 * i as f64 / 300.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 20_000;
    let good = (0..draws)
        .filter(|_| {
            let g = nalgebra::Vector3::from_fn(|_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let d = l * g;
            zs.iter().all(|&z| (d[0] * z * z + d[1] * z + d[2]).abs() < 0.005)
        })
        .count();
    good as f64 / draws as f64
}

fn ac1(trained: &Trained) -> Outcome {
    let truth = common::truth();
    let mut errors = common::max_bias_errors(&trained.calibration.bias_map, &truth, (1.0, 4.0));
    let n = errors.len();
    let good = errors.iter().filter(|&&e| e < 0.005).count();
    let frac = good as f64 / n as f64;
    errors.sort_by(f64::total_cmp);
    let p95 = errors[(0.95 * (n - 1) as f64).round() as usize];
    let pass = frac >= 0.95 && trained.seconds < 60.0;
    outcome(
        "AC-1",
        "bias recovery",
        pass,
        format!(
            "{:.1}% of {n} valid pixels have max |mu_hat - mu| < 5 mm on [1, 4] m (need >= 95%); \
             95th percentile {:.2} mm; an ideal weighted fit reaches {:.1}%; calibrate took {:.1} s (limit 60 s)",
            100.0 * frac,
            1e3 * p95,
            100.0 * ideal_pass_rate(),
            trained.seconds
        ),
    )
}

fn ac2(trained: &Trained) -> Outcome {
    let truth = common::noise();
    let fit = &trained.calibration.noise;
    let worst = (0..=300)
        .map(|i| 1.0 + 3.0 * i as f64 / 300.0)
        .map(|z| ((fit.sigma(z) - truth.sigma(z)) / truth.sigma(z)).abs())
        .fold(0.0, f64::max);
    outcome(
        "AC-2",
        "noise-model recovery",
        worst <= 0.10,
        format!(
            "max relative sigma error on [1, 4] m = {:.2}% (limit 10%); fit a={:.3e} b={:.3e} c={:.3e}",
            100.0 * worst,
            fit.a,
            fit.b,
            fit.c
        ),
    )
}

struct HeldOut {
    local: Vec<BucketRow>,
    global: Vec<BucketRow>,
}

fn held_out(trained: &Trained) -> HeldOut {
    let k = common::intrinsics();
    let ext = common::extrinsics();
    let truth = common::truth();
    let cfg = common::sim_config(common::held_out_walls(), common::noise(), common::HELD_OUT_SEED);
    let obs = common::simulate(&cfg, &truth);
    let map = &trained.calibration.bias_map;
    let planes: Vec<PlaneHessian> = obs.iter().map(|o| transform_plane(&o.plane, &ext)).collect();
    let calibrated: Vec<_> = obs
        .iter()
        .map(|o| compensate_frame(&o.frame, map).unwrap())
        .collect();
    let masks: Vec<Vec<bool>> = obs
        .iter()
        .zip(&planes)
        .zip(&calibrated)
        .map(|((o, p), cal)| {
            let mut m = wall_inlier_mask(&o.frame, p, &k, 0.2).unwrap();
            for (i, v) in m.iter_mut().enumerate() {
                *v &= map.valid()[i] && cal.is_valid(i);
            }
            m
        })
        .collect();
    let pairs: Vec<FramePair<'_>> = (0..obs.len())
        .map(|i| FramePair {
            raw: &obs[i].frame,
            calibrated: &calibrated[i],
            mask: &masks[i],
        })
        .collect();
    HeldOut {
        local: bucket_records(&evaluate_local(&pairs, &k).unwrap(), 0.25),
        global: bucket_records(&evaluate_global(&pairs, &planes, &k).unwrap(), 0.25),
    }
}

fn ac3(h: &HeldOut) -> Outcome {
    let noise = common::noise();
    let mut failures = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut improved = 0;
    for row in &h.local {
        let sigma = noise.sigma(row.distance);
        if row.rms_raw > 2.0 * sigma {
            improved += 1;
            if !(row.rms_calibrated < 0.5 * row.rms_raw) {
                failures.push(format!(
                    "{:.3} m: calibrated {:.2} mm vs raw {:.2} mm",
                    row.distance,
                    1e3 * row.rms_calibrated,
                    1e3 * row.rms_raw
                ));
            }
        }
        worst_ratio = worst_ratio.max(row.rms_calibrated / sigma);
        if row.rms_calibrated > 1.2 * sigma {
            failures.push(format!(
                "{:.3} m: calibrated {:.2} mm > 1.2 sigma = {:.2} mm",
                row.distance,
                1e3 * row.rms_calibrated,
                1.2e3 * sigma
            ));
        }
    }
    outcome(
        "AC-3",
        "local-distortion improvement",
        failures.is_empty() && !h.local.is_empty(),
        format!(
            "{} buckets, {} with raw > 2 sigma; worst calibrated/sigma = {:.3} (limit 1.2){}",
            h.local.len(),
            improved,
            worst_ratio,
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failures.join(", "))
            }
        ),
    )
}

fn ac4(h: &HeldOut) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_offset: f64 = 0.0;
    for row in &h.global {
        if !(row.rms_calibrated < row.rms_raw) {
            failures.push(format!(
                "{:.3} m: calibrated {:.2} mm >= raw {:.2} mm",
                row.distance,
                1e3 * row.rms_calibrated,
                1e3 * row.rms_raw
            ));
        }
        worst_offset = worst_offset.max(row.offset_calibrated.abs());
        if !(row.offset_calibrated.abs() < 0.003) {
            failures.push(format!(
                "{:.3} m: offset {:.2} mm",
                row.distance,
                1e3 * row.offset_calibrated
            ));
        }
    }
    outcome(
        "AC-4",
        "global-error improvement",
        failures.is_empty() && !h.global.is_empty(),
        format!(
            "{} buckets; worst |calibrated offset| = {:.3} mm (limit 3 mm){}",
            h.global.len(),
            1e3 * worst_offset,
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failures.join(", "))
            }
        ),
    )
}

fn ac5() -> Outcome {
    let truth = common::truth();
    let cfg = common::sim_config(
        common::training_walls(),
        NoiseCoefficients::default(),
        common::TRAIN_SEED,
    );
    let obs = common::simulate(&cfg, &truth);
    let cal = calibrate(
        &obs,
        &common::extrinsics(),
        &common::intrinsics(),
        &CalibrationConfig::default(),
    )
    .unwrap();
    let map = &cal.bias_map;
    let mut worst: f64 = 0.0;
    for ((est, gt), &valid) in map.coefficients().iter().zip(truth.coefficients()).zip(map.valid()) {
        if valid {
            worst = worst
                .max((est.a - gt.a).abs())
                .max((est.b - gt.b).abs())
                .max((est.c - gt.c).abs());
        }
    }
    let all_valid = map.valid_count() == map.coefficients().len();
    outcome(
        "AC-5",
        "noise-free exactness",
        all_valid && worst <= 1e-6,
        format!(
            "{} of {} pixels fitted; max coefficient error {:.3e} (limit 1e-6)",
            map.valid_count(),
            map.coefficients().len(),
            worst
        ),
    )
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = NoiseModel::new(0.0007, 0.0, 0.002, 1e-4).unwrap();
    let fit_cfg = FitConfig {
        min_pairs: 3,
        ..FitConfig::default()
    };
    let mut beaten = 0;
    let mut fitted = 0;
    let mut grid_points = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(3..=20);
        let truth = PixelBias::new(
            rng.random_range(-0.005..0.005),
            rng.random_range(-0.02..0.02),
            rng.random_range(-0.05..0.05),
        );
        let pairs: Vec<DepthPair> = (0..n)
            .map(|i| {
                let z = 0.5 + 4.0 * i as f64 / (n - 1) as f64 + rng.random_range(-0.05..0.05);
                let e: f64 = rng.random_range(-1.0..1.0) * noise.sigma(z);
                DepthPair::new(z, z - truth.mean(z) - e).unwrap()
            })
            .collect();
        let Ok(opt) = fit_pixel_bias(&pairs, &noise, &fit_cfg) else {
            continue;
        };
        fitted += 1;
        let best = weighted_objective(&pairs, &noise, &opt);
        for da in -3..=3 {
            for db in -3..=3 {
                for dc in -3..=3 {
                    if (da, db, dc) == (0, 0, 0) {
                        continue;
                    }
                    grid_points += 1;
                    let cand = PixelBias::new(
                        opt.a + 1e-4 * da as f64,
                        opt.b + 1e-4 * db as f64,
                        opt.c + 1e-4 * dc as f64,
                    );
                    if weighted_objective(&pairs, &noise, &cand) < best {
                        beaten += 1;
                    }
                }
            }
        }
    }

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let groups = rng.random_range(1..=8);
        let sets: Vec<Vec<f64>> = (0..groups)
            .map(|_| {
                let m = rng.random_range(1..=12);
                let shift = rng.random_range(-0.1..0.1);
                (0..m).map(|_| shift + rng.random_range(-0.01..0.01)).collect()
            })
            .collect();
        for divisor in [PoolingDivisor::SampleCount, PoolingDivisor::DegreesOfFreedom] {
            let count: usize = sets.iter().map(Vec::len).sum();
            let mut ss = 0.0;
            for s in &sets {
                let mean = s.iter().sum::<f64>() / s.len() as f64;
                ss += s.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            }
            let denom = match divisor {
                PoolingDivisor::SampleCount => count,
                PoolingDivisor::DegreesOfFreedom => count - sets.len(),
            };
            let Ok(got) = pooled_sigma(sets.iter().map(|s| s.as_slice()), 1.0, 1, divisor) else {
                assert_eq!(denom, 0);
                continue;
            };
            let direct = (ss / denom as f64).sqrt();
            worst = worst.max((got.sigma - direct).abs());
        }
    }
    outcome(
        "AC-6",
        "oracle equivalence",
        beaten == 0 && fitted >= 90 && worst <= 1e-12,
        format!(
            "{fitted} instances fitted, {grid_points} grid candidates, {beaten} beat the closed form; \
             pooled sigma vs two-pass max difference {worst:.3e} (limit 1e-12)"
        ),
    )
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let trials = 100_000;
    let mut transform_fail = 0;
    let mut depth_fail = 0;
    let mut worst_transform: f64 = 0.0;
    let mut worst_depth: f64 = 0.0;
    let k = common::intrinsics();
    for _ in 0..trials {
        // a point on the plane stays on the transformed plane
        let axis = random_unit(&mut rng);
        let angle = rng.random_range(-3.1..3.1);
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), angle);
        let t = Vec3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        let tf = RigidTransform::new(*r.matrix(), t).unwrap();
        let n = random_unit(&mut rng);
        let d = rng.random_range(0.0..10.0);
        let plane = PlaneHessian::new(n, d).unwrap();
        let mut tangent = n.cross(&random_unit(&mut rng));
        if tangent.norm() < 1e-3 {
            tangent = n.cross(&Vec3::x());
        }
        let p = n * d + tangent * rng.random_range(-5.0..5.0);
        let moved = transform_plane(&plane, &tf);
        let err = moved.signed_distance(&tf.transform_point(&p)).abs();
        worst_transform = worst_transform.max(err);
        if err > 1e-9 {
            transform_fail += 1;
        }

        // reference depth recovers the depth of a pixel's point on the plane
        let u = rng.random_range(0..k.width);
        let v = rng.random_range(0..k.height);
        let ray = depthcal::backproject_ray(&k, depthcal::PixelCoord::new(u, v));
        let z = rng.random_range(0.3..8.0);
        let q = ray * z;
        let mut normal = random_unit(&mut rng);
        if normal.dot(&ray).abs() < 0.2 * ray.norm() {
            normal = (normal + ray.normalize()).normalize();
        }
        let through = PlaneHessian::normalized(normal, normal.dot(&q)).unwrap();
        match reference_depth(&through, &ray) {
            Ok(zr) => {
                let err = (zr - z).abs() / z;
                worst_depth = worst_depth.max(err);
                if err > 1e-12 {
                    depth_fail += 1;
                }
            }
            Err(_) => depth_fail += 1,
        }
    }
    outcome(
        "AC-7",
        "geometry properties",
        transform_fail == 0 && depth_fail == 0,
        format!(
            "{trials} plane transforms: {transform_fail} failures, worst {worst_transform:.2e} m (limit 1e-9); \
             {trials} depth round trips: {depth_fail} failures, worst relative {worst_depth:.2e} (limit 1e-12)"
        ),
    )
}

fn ac8() -> Outcome {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = common::sim_config(common::training_walls(), common::noise(), common::TRAIN_SEED);
        let manifest = generate_dataset(&cfg, &common::truth(), dir.path().join("data")).unwrap();
        let output = dir.path().join("calib.dcal");
        cli_calibrate(&CalibrateOptions {
            manifest,
            output: output.clone(),
            format: CalibrationFormat::Binary,
            config: CalibrationConfig::default(),
            report: None,
        })
        .unwrap();
        std::fs::read(output).unwrap()
    };
    let a = run();
    let b = run();
    outcome(
        "AC-8",
        "pipeline determinism",
        a == b,
        format!(
            "two simulate+calibrate runs: {} and {} bytes, {}",
            a.len(),
            b.len(),
            if a == b { "identical" } else { "different" }
        ),
    )
}

fn main() {
    // cargo passes harness flags such as --list; nothing to list here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let trained = train();
    let held = held_out(&trained);
    let outcomes = [
        ac1(&trained),
        ac2(&trained),
        ac3(&held),
        ac4(&held),
        ac5(),
        ac6(),
        ac7(),
        ac8(),
    ];
    println!();
    for o in &outcomes {
        println!(
            "{} {:<30} {}  {}",
            o.id,
            o.title,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "\nacceptance: {} passed, {} failed",
        outcomes.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
