//! Reference depth of a wall seen by the laser, per camera pixel.

use depthcal::{
    backproject_ray, reference_depth, transform_plane, CameraIntrinsics, PixelCoord, PlaneHessian,
    RigidTransform, Vec3,
};

fn main() -> depthcal::Result<()> {
    let k = CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5, 640, 480)?;
    // laser 10 cm below the camera, slightly pitched
    let laser_to_camera = RigidTransform::from_euler(0.02, 0.0, 0.0, Vec3::new(0.0, 0.1, 0.0));

    // wall 2.5 m ahead of the laser, turned 15°
    let yaw = 15f64.to_radians();
    let wall = PlaneHessian::new(Vec3::new(yaw.sin(), 0.0, yaw.cos()), 2.5)?;
    let wall_cam = transform_plane(&wall, &laser_to_camera);
    println!(
        "wall in camera frame: n = [{:.4}, {:.4}, {:.4}], d = {:.4} m",
        wall_cam.normal().x,
        wall_cam.normal().y,
        wall_cam.normal().z,
        wall_cam.distance()
    );

    for (u, v) in [(0, 0), (319, 239), (639, 0), (639, 479)] {
        let ray = backproject_ray(&k, PixelCoord::new(u, v));
        let z = reference_depth(&wall_cam, &ray)?;
        println!("pixel ({u:3}, {v:3}): z* = {z:.4} m");
    }

    let edge_on = PlaneHessian::new(Vec3::x(), 1.0)?;
    match reference_depth(&edge_on, &Vec3::z()) {
        Ok(z) => println!("edge-on wall: z* = {z}"),
        Err(e) => println!("edge-on wall: {} ({e})", e.kind()),
    }
    Ok(())
}
