//! Planes, rigid transforms and pinhole back-projection.
//!
//! Frame convention: a [`RigidTransform`] used as *extrinsics* maps points
//! from the reference range sensor's frame into the depth camera's frame,
//! `x_cam = R · x_ref + t`.
//!
//! The depth camera frame is the usual optical frame: `z` along the optical
//! axis, `x` to the right, `y` down.

use nalgebra::{Matrix3, Rotation3, SymmetricEigen, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `‖n‖ = 1` and on rotation orthonormality.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Rays with `|n·l| < GRAZING_TOLERANCE` are treated as parallel to the plane.
pub const GRAZING_TOLERANCE: f64 = 1e-9;

/// Plane in Hessian normal form: `normal · x = distance`, `‖normal‖ = 1`,
/// `distance ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneHessian {
    normal: Vec3,
    distance: f64,
}

impl PlaneHessian {
    /// Builds a plane, checking the Hessian invariants.
    pub fn new(normal: Vec3, distance: f64) -> Result<Self> {
        if !(normal.iter().all(|c| c.is_finite()) && distance.is_finite()) {
            return Err(Error::InvalidPlane("non-finite parameters".into()));
        }
        if (normal.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidPlane(format!(
                "normal has length {}, expected 1",
                normal.norm()
            )));
        }
        if distance < 0.0 {
            return Err(Error::InvalidPlane(format!(
                "distance {distance} is negative"
            )));
        }
        Ok(Self { normal, distance })
    }

    /// Normalizes an arbitrary `(n, d)` with `n·x = d` into Hessian form.
    pub fn normalized(normal: Vec3, distance: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && distance.is_finite()) || len < f64::EPSILON {
            return Err(Error::InvalidPlane(
                "normal must be finite and non-zero".into(),
            ));
        }
        let (n, d) = (normal / len, distance / len);
        Ok(if d < 0.0 {
            Self {
                normal: -n,
                distance: -d,
            }
        } else {
            Self {
                normal: n,
                distance: d,
            }
        })
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Signed distance `n·x − d` of a point to the plane.
    pub fn signed_distance(&self, point: &Vec3) -> f64 {
        self.normal.dot(point) - self.distance
    }
}

/// Rigid motion `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        if !(rotation.iter().all(|c| c.is_finite()) && translation.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidTransform("non-finite entries".into()));
        }
        let gram_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if gram_err > UNIT_TOLERANCE {
            return Err(Error::InvalidTransform(format!(
                "rotation is not orthonormal (max |RᵀR − I| = {gram_err:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidTransform(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Builds a transform from a quaternion `(w, x, y, z)`. The quaternion must
    /// have unit length within `1e-3`, enough for values rounded to a few
    /// decimals; it is renormalized before conversion.
    pub fn from_quaternion(wxyz: [f64; 4], translation: Vec3) -> Result<Self> {
        let q = nalgebra::Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-3 {
            return Err(Error::InvalidTransform(format!(
                "quaternion has norm {norm}, expected 1"
            )));
        }
        let rot = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        Self::new(*rot.matrix(), translation)
    }

    /// Rotation from roll/pitch/yaw angles (radians, applied as `Rz·Ry·Rx`).
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64, translation: Vec3) -> Self {
        let rot = Rotation3::from_euler_angles(roll, pitch, yaw);
        Self {
            rotation: *rot.matrix(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn transform_point(&self, point: &Vec3) -> Vec3 {
        self.rotation * point + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `other ∘ self`: apply `self` first, then `other`.
    pub fn then(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: other.rotation * self.rotation,
            translation: other.rotation * self.translation + other.translation,
        }
    }
}

/// Pinhole intrinsics of the depth camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidIntrinsics("non-finite parameter".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidIntrinsics("zero image size".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return Err(Error::InvalidIntrinsics(format!(
                "cx={} outside (0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidIntrinsics(format!(
                "cy={} outside (0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Unit-depth rays `l(1)` for every pixel, row-major.
    pub fn ray_table(&self) -> Vec<Vec3> {
        (0..self.height)
            .flat_map(|v| (0..self.width).map(move |u| PixelCoord { u, v }))
            .map(|px| backproject_ray(self, px))
            .collect()
    }

    /// Projects a camera-frame point to continuous pixel coordinates.
    pub fn project(&self, point: &Vec3) -> Option<(f64, f64)> {
        if point.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * point.x / point.z + self.cx,
            self.fy * point.y / point.z + self.cy,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub u: u32,
    pub v: u32,
}

impl PixelCoord {
    pub fn new(u: u32, v: u32) -> Self {
        Self { u, v }
    }

    pub fn from_index(index: usize, width: u32) -> Self {
        let w = width as usize;
        Self {
            u: (index % w) as u32,
            v: (index / w) as u32,
        }
    }

    pub fn index(&self, width: u32) -> usize {
        self.v as usize * width as usize + self.u as usize
    }
}

/// Expresses a reference-frame plane in the camera frame.
///
/// Every point with `n·x = d` maps to `x' = R x + t` with `n'·x' = d'`, where
/// `n' = R n` and `d' = d + n'·t`. The result is sign-normalized so `d' ≥ 0`.
pub fn transform_plane(plane: &PlaneHessian, extrinsics: &RigidTransform) -> PlaneHessian {
    let n = extrinsics.rotation * plane.normal;
    let d = plane.distance + n.dot(&extrinsics.translation);
    // R is orthonormal, so ‖n‖ stays 1 up to rounding
    let n = n / n.norm();
    if d < 0.0 {
        PlaneHessian {
            normal: -n,
            distance: -d,
        }
    } else {
        PlaneHessian {
            normal: n,
            distance: d,
        }
    }
}

/// Unit-depth ray `l(1) = ((u − cx)/fx, (v − cy)/fy, 1)`.
pub fn backproject_ray(intrinsics: &CameraIntrinsics, pixel: PixelCoord) -> Vec3 {
    debug_assert!(pixel.u < intrinsics.width && pixel.v < intrinsics.height);
    Vec3::new(
        (pixel.u as f64 - intrinsics.cx) / intrinsics.fx,
        (pixel.v as f64 - intrinsics.cy) / intrinsics.fy,
        1.0,
    )
}

/// Depth `z* = d' / (n'·l(1))` at which the ray meets the camera-frame plane.
pub fn reference_depth(plane_cam: &PlaneHessian, ray_dir: &Vec3) -> Result<f64> {
    let incidence = plane_cam.normal.dot(ray_dir);
    if incidence.abs() < GRAZING_TOLERANCE {
        return Err(Error::GrazingRay { incidence });
    }
    let depth = plane_cam.distance / incidence;
    if depth <= 0.0 {
        return Err(Error::NegativeDepth { depth });
    }
    Ok(depth)
}

/// 3D point `z · l(1)` reconstructed from a pixel and its depth.
pub fn backproject_point(
    intrinsics: &CameraIntrinsics,
    pixel: PixelCoord,
    depth: f64,
) -> Result<Vec3> {
    if !(depth > 0.0) {
        return Err(Error::NonPositiveDepth(depth));
    }
    Ok(backproject_ray(intrinsics, pixel) * depth)
}

/// Eigen-decomposition helper: (ascending eigenvalues, matching eigenvectors).
pub(crate) fn sorted_symmetric_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vec3; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i]);
    let vecs = idx.map(|i| eig.eigenvectors.column(i).into_owned());
    (vals, vecs)
}

/// 2-norm condition number of a symmetric positive semi-definite matrix.
/// Returns infinity when the smallest eigenvalue is not positive.
pub(crate) fn spd_condition_number(m: Matrix3<f64>) -> f64 {
    let (vals, _) = sorted_symmetric_eigen(m);
    if vals[0] <= 0.0 {
        f64::INFINITY
    } else {
        vals[2] / vals[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn vga() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn identity_transform_keeps_plane() {
        let p = PlaneHessian::new(Vec3::z(), 2.0).unwrap();
        let q = transform_plane(&p, &RigidTransform::identity());
        assert_eq!(q.normal(), Vec3::z());
        assert_eq!(q.distance(), 2.0);
    }

    #[test]
    fn translation_along_normal_shifts_distance() {
        let p = PlaneHessian::new(Vec3::x(), 1.0).unwrap();
        let t = RigidTransform::new(Matrix3::identity(), Vec3::new(0.5, 0.0, 0.0)).unwrap();
        let q = transform_plane(&p, &t);
        assert_abs_diff_eq!(q.normal(), Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(q.distance(), 1.5, epsilon = 1e-15);
        // three points of the source plane land on the transformed plane
        for y in [-1.0, 0.3, 2.5] {
            let x = Vec3::new(1.0, y, 0.7 * y - 0.2);
            assert_abs_diff_eq!(q.signed_distance(&t.transform_point(&x)), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn half_turn_about_x_flips_normal() {
        let p = PlaneHessian::new(Vec3::z(), 1.0).unwrap();
        let rot = *Rotation3::from_axis_angle(&Vector3::x_axis(), PI).matrix();
        let t = RigidTransform::new(rot, Vec3::zeros()).unwrap();
        let q = transform_plane(&p, &t);
        assert_abs_diff_eq!(q.normal(), Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(q.distance(), 1.0, epsilon = 1e-15);
        let mapped = t.transform_point(&Vec3::new(0.0, 0.0, 1.0));
        assert_abs_diff_eq!(mapped, Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(q.signed_distance(&mapped), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn translation_past_plane_renormalizes_sign() {
        let p = PlaneHessian::new(Vec3::x(), 1.0).unwrap();
        let t = RigidTransform::new(Matrix3::identity(), Vec3::new(-3.0, 0.0, 0.0)).unwrap();
        let q = transform_plane(&p, &t);
        assert_abs_diff_eq!(q.normal(), -Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(q.distance(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal_rotation() {
        let mut m = Matrix3::identity();
        m[(0, 0)] = 1.01;
        assert!(matches!(
            RigidTransform::new(m, Vec3::zeros()),
            Err(Error::InvalidTransform(_))
        ));
        let reflection = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(reflection, Vec3::zeros()).is_err());
    }

    #[test]
    fn quaternion_matches_matrix() {
        let h = FRAC_1_SQRT_2;
        let t = RigidTransform::from_quaternion([h, 0.0, 0.0, h], Vec3::zeros()).unwrap();
        let p = t.transform_point(&Vec3::x());
        assert_abs_diff_eq!(p, Vec3::y(), epsilon = 1e-15);
        assert!(RigidTransform::from_quaternion([2.0, 0.0, 0.0, 0.0], Vec3::zeros()).is_err());
    }

    #[test]
    fn plane_invariants_enforced() {
        assert!(PlaneHessian::new(Vec3::new(1.0, 1.0, 0.0), 1.0).is_err());
        assert!(PlaneHessian::new(Vec3::z(), -1.0).is_err());
        let p = PlaneHessian::normalized(Vec3::new(0.0, 0.0, -2.0), -4.0).unwrap();
        assert_eq!(p.normal(), Vec3::z());
        assert_eq!(p.distance(), 2.0);
    }

    #[test]
    fn ray_at_principal_point_is_optical_axis() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        assert_eq!(backproject_ray(&k, PixelCoord::new(320, 240)), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn ray_examples() {
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 1000, 480).unwrap();
        assert_eq!(backproject_ray(&k, PixelCoord::new(820, 240)), Vec3::new(1.0, 0.0, 1.0));

        let k = CameraIntrinsics::new(500.0, 400.0, 320.0, 240.0, 640, 480).unwrap();
        let px = PixelCoord::new(70, 40);
        let ray = backproject_ray(&k, px);
        assert_eq!(ray, Vec3::new(-0.5, -0.5, 1.0));
        let (u, v) = k.project(&(ray * 3.0)).unwrap();
        assert_abs_diff_eq!(u, 70.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 40.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_depth_examples() {
        let wall = PlaneHessian::new(Vec3::z(), 2.0).unwrap();
        assert_eq!(reference_depth(&wall, &Vec3::new(0.0, 0.0, 1.0)).unwrap(), 2.0);
        assert_eq!(reference_depth(&wall, &Vec3::new(1.0, 0.0, 1.0)).unwrap(), 2.0);

        let tilted = PlaneHessian::new(Vec3::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2), 1.0).unwrap();
        let ray = Vec3::new(0.0, 0.0, 1.0);
        let z = reference_depth(&tilted, &ray).unwrap();
        assert_abs_diff_eq!(z, SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(tilted.signed_distance(&(ray * z)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_depth_errors() {
        let side = PlaneHessian::new(Vec3::x(), 1.0).unwrap();
        assert!(matches!(
            reference_depth(&side, &Vec3::new(0.0, 0.3, 1.0)),
            Err(Error::GrazingRay { .. })
        ));
        assert!(matches!(
            reference_depth(&side, &Vec3::new(-0.5, 0.0, 1.0)),
            Err(Error::NegativeDepth { .. })
        ));
    }

    #[test]
    fn backproject_point_examples() {
        let k = vga();
        assert_eq!(
            backproject_point(&k, PixelCoord::new(320, 240), 3.0).unwrap(),
            Vec3::new(0.0, 0.0, 3.0)
        );
        let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 1000, 480).unwrap();
        assert_eq!(
            backproject_point(&k, PixelCoord::new(820, 240), 2.0).unwrap(),
            Vec3::new(2.0, 0.0, 2.0)
        );
        let px = PixelCoord::new(17, 401);
        assert_eq!(backproject_point(&k, px, 1.0).unwrap(), backproject_ray(&k, px));
        assert!(matches!(
            backproject_point(&k, px, 0.0),
            Err(Error::NonPositiveDepth(_))
        ));
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 2.0, 0.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 2.0, 2.0, 4, 4).is_ok());
    }

    #[test]
    fn inverse_and_composition() {
        let a = RigidTransform::from_euler(0.1, -0.2, 0.3, Vec3::new(1.0, 2.0, 3.0));
        let b = RigidTransform::from_euler(-0.4, 0.05, 1.2, Vec3::new(-0.5, 0.0, 0.25));
        let x = Vec3::new(0.3, -0.7, 2.0);
        assert_abs_diff_eq!(a.inverse().transform_point(&a.transform_point(&x)), x, epsilon = 1e-12);
        assert_abs_diff_eq!(
            a.then(&b).transform_point(&x),
            b.transform_point(&a.transform_point(&x)),
            epsilon = 1e-12
        );
    }
}
