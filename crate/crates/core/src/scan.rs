//! Wall plane extraction from a 2D laser scan.
//!
//! Assumes the scanner sees a vertical wall: the wall is a line in the scan
//! plane and the 3D plane contains that line with a normal lying in the scan
//! plane (zero component along the scanner's vertical axis).

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlaneHessian, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan2D {
    /// Bearing of the first range, radians.
    pub angle_min: f64,
    pub angle_increment: f64,
    /// Ranges in meters; values `≤ 0` or non-finite mark missing returns.
    pub ranges: Vec<f64>,
}

impl LaserScan2D {
    pub fn new(angle_min: f64, angle_increment: f64, ranges: Vec<f64>) -> Result<Self> {
        if ranges.len() < 2 {
            return Err(Error::InvalidConfig("scan needs at least 2 ranges".into()));
        }
        if angle_increment == 0.0 || !angle_increment.is_finite() || !angle_min.is_finite() {
            return Err(Error::InvalidConfig(
                "scan angle increment must be finite and non-zero".into(),
            ));
        }
        Ok(Self {
            angle_min,
            angle_increment,
            ranges,
        })
    }

    /// Cartesian points of the valid returns, in the scanner frame.
    pub fn points(&self) -> Vec<Vector2<f64>> {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_finite() && **r > 0.0)
            .map(|(i, &r)| {
                let theta = self.angle_min + i as f64 * self.angle_increment;
                Vector2::new(r * theta.cos(), r * theta.sin())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier distance to the line, meters.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_threshold: 0.02,
            min_inliers: 20,
            seed: 0,
        }
    }
}

/// Line `n·p = d` with unit `n`.
#[derive(Debug, Clone, Copy)]
struct Line {
    normal: Vector2<f64>,
    distance: f64,
}

impl Line {
    fn through(a: &Vector2<f64>, b: &Vector2<f64>) -> Option<Self> {
        let dir = b - a;
        let len = dir.norm();
        if len < 1e-9 {
            return None;
        }
        let normal = Vector2::new(-dir.y, dir.x) / len;
        Some(Self {
            normal,
            distance: normal.dot(a),
        })
    }

    fn residual(&self, p: &Vector2<f64>) -> f64 {
        (self.normal.dot(p) - self.distance).abs()
    }

    fn inliers(&self, points: &[Vector2<f64>], threshold: f64) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| self.residual(&points[i]) < threshold)
            .collect()
    }
}

/// Orthogonal-regression line through the selected points.
fn fit_line_tls(points: &[Vector2<f64>], idx: &[usize]) -> Option<Line> {
    if idx.len() < 2 {
        return None;
    }
    let centroid = idx.iter().map(|&i| points[i]).sum::<Vector2<f64>>() / idx.len() as f64;
    let mut scatter = Matrix2::zeros();
    for &i in idx {
        let d = points[i] - centroid;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let min = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let normal: Vector2<f64> = eig.eigenvectors.column(min).into_owned();
    Some(Line {
        normal,
        distance: normal.dot(&centroid),
    })
}

/// Wall plane in the scanner frame from a RANSAC line fit refined by total
/// least squares on its inliers.
pub fn extract_plane_from_scan(scan: &LaserScan2D, config: &RansacConfig) -> Result<PlaneHessian> {
    let points = scan.points();
    let needed = config.min_inliers.max(2);
    if points.len() < needed {
        return Err(Error::NoLine(format!(
            "{} valid returns, need {needed}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..config.iterations {
        let i = rng.random_range(0..points.len());
        let mut j = rng.random_range(0..points.len() - 1);
        if j >= i {
            j += 1;
        }
        let Some(line) = Line::through(&points[i], &points[j]) else {
            continue;
        };
        let inliers = line.inliers(&points, config.inlier_threshold);
        if inliers.len() > best.len() {
            best = inliers;
        }
    }
    if best.len() < needed {
        return Err(Error::NoLine(format!(
            "best line has {} inliers, need {needed}",
            best.len()
        )));
    }
    let mut line = fit_line_tls(&points, &best).expect("at least two inliers");
    // re-select inliers against the refined line and refit once
    let refined = line.inliers(&points, config.inlier_threshold);
    if refined.len() >= needed {
        line = fit_line_tls(&points, &refined).expect("at least two inliers");
    }
    PlaneHessian::normalized(Vec3::new(line.normal.x, line.normal.y, 0.0), line.distance)
}
