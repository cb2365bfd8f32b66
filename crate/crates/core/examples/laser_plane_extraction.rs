//! Wall plane from a 2D laser scan with clutter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use depthcal::{extract_plane_from_scan, LaserScan2D, RansacConfig};

fn main() -> depthcal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (distance, angle) = (2.2f64, 0.2f64);
    let n = 361;
    let angle_min = -std::f64::consts::FRAC_PI_2;
    let inc = std::f64::consts::PI / (n - 1) as f64;
    let ranges = (0..n)
        .map(|i| {
            let theta = angle_min + i as f64 * inc;
            let incidence = (theta - angle).cos();
            if rng.random_bool(0.25) {
                rng.random_range(0.2..distance)
            } else if incidence > 0.3 {
                distance / incidence + rng.random_range(-0.003..0.003)
            } else {
                0.0
            }
        })
        .collect();
    let scan = LaserScan2D::new(angle_min, inc, ranges)?;
    let plane = extract_plane_from_scan(&scan, &RansacConfig::default())?;
    let n = plane.normal();
    println!(
        "normal [{:.4}, {:.4}, {:.4}]  (true [{:.4}, {:.4}, 0])",
        n.x,
        n.y,
        n.z,
        angle.cos(),
        angle.sin()
    );
    println!("distance {:.4} m  (true {distance} m)", plane.distance());
    Ok(())
}
