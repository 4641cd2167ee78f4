//! Pinhole RGBD camera: world points in cm map to (x px, y px, depth cm).

use nalgebra::{Isometry3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal_px: f64,
    pub principal_px: [f64; 2],
    pub image_size: [f64; 2],
    pub position: [f64; 3],
    /// Heading about world z; zero looks along world +y.
    pub yaw: f64,
    /// Positive tilts the view downwards.
    pub pitch: f64,
    pub pixel_noise_std: f64,
    pub depth_noise_std: f64,
    /// Bound of the random-walk image offset (px) of a handheld camera.
    pub shake_amplitude: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            focal_px: 525.0,
            principal_px: [320.0, 240.0],
            image_size: [640.0, 480.0],
            position: [5.0, -55.0, 18.0],
            yaw: 0.0,
            pitch: 0.12,
            pixel_noise_std: 0.0,
            depth_noise_std: 0.0,
            shake_amplitude: 0.0,
        }
    }
}

const MIN_DEPTH: f64 = 1.0;

impl CameraModel {
    /// World-to-camera transform. Camera axes: x right, y down, z forward.
    pub fn world_to_camera(&self) -> Isometry3<f64> {
        // Camera frame expressed in world axes at zero yaw/pitch.
        let base = Rotation3::from_matrix_unchecked(nalgebra::Matrix3::new(
            1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, //
            0.0, -1.0, 0.0,
        ));
        let heading = Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw);
        let tilt = Rotation3::from_axis_angle(&Vector3::x_axis(), -self.pitch);
        let cam_to_world_rot = heading * base * tilt;
        let p = self.position;
        let cam_to_world = Isometry3::from_parts(
            Translation3::new(p[0], p[1], p[2]),
            UnitQuaternion::from_rotation_matrix(&cam_to_world_rot),
        );
        cam_to_world.inverse()
    }

    /// Ideal projection without noise or shake. `None` behind the camera.
    pub fn project_ideal(&self, world: &Point3<f64>) -> Option<[f64; 3]> {
        let c = self.world_to_camera() * world;
        if c.z < MIN_DEPTH {
            return None;
        }
        Some([
            self.focal_px * c.x / c.z + self.principal_px[0],
            self.focal_px * c.y / c.z + self.principal_px[1],
            c.z,
        ])
    }

    pub fn in_bounds(&self, obs: &[f64; 3]) -> bool {
        obs[0] >= 0.0 && obs[0] < self.image_size[0] && obs[1] >= 0.0 && obs[1] < self.image_size[1] && obs[2] > 0.0
    }

    /// Inverse of [`Self::project_ideal`].
    pub fn backproject(&self, obs: &[f64; 3]) -> Point3<f64> {
        let z = obs[2];
        let c = Point3::new(
            (obs[0] - self.principal_px[0]) * z / self.focal_px,
            (obs[1] - self.principal_px[1]) * z / self.focal_px,
            z,
        );
        self.world_to_camera().inverse() * c
    }

    /// Unit ray direction (world) through a pixel, and the camera centre.
    pub fn ray(&self, px: [f64; 2]) -> (Point3<f64>, Vector3<f64>) {
        let inv = self.world_to_camera().inverse();
        let d = Vector3::new(
            (px[0] - self.principal_px[0]) / self.focal_px,
            (px[1] - self.principal_px[1]) / self.focal_px,
            1.0,
        );
        (inv * Point3::origin(), (inv * d).normalize())
    }

    /// Pixels per cm at the given depth.
    pub fn px_per_cm(&self, depth: f64) -> f64 {
        self.focal_px / depth
    }

    /// One step of the reflected random walk used for camera shake.
    pub fn next_shake<R: Rng>(&self, shake: [f64; 2], rng: &mut R) -> [f64; 2] {
        if self.shake_amplitude <= 0.0 {
            return [0.0, 0.0];
        }
        let a = self.shake_amplitude;
        let step = a / 3.0;
        let mut out = shake;
        for v in &mut out {
            let n: f64 = rng.sample(StandardNormal);
            *v = reflect(*v + step * n, a);
        }
        out
    }
}

fn reflect(mut v: f64, a: f64) -> f64 {
    // Fold into [-a, a].
    let period = 4.0 * a;
    v = (v + a).rem_euclid(period);
    if v > 2.0 * a {
        v = period - v;
    }
    v - a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn hand_computed_projection() {
        let cam = CameraModel {
            pitch: 0.0,
            position: [0.0, -50.0, 10.0],
            ..Default::default()
        };
        // 5 cm right, 4 cm up, 50 cm ahead.
        let obs = cam.project_ideal(&Point3::new(5.0, 0.0, 14.0)).unwrap();
        assert!((obs[0] - (320.0 + 525.0 * 5.0 / 50.0)).abs() < 1e-9);
        assert!((obs[1] - (240.0 - 525.0 * 4.0 / 50.0)).abs() < 1e-9);
        assert!((obs[2] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn backproject_inverts_projection() {
        let cam = CameraModel {
            yaw: 0.2,
            ..Default::default()
        };
        let p = Point3::new(12.0, 3.0, 9.0);
        let obs = cam.project_ideal(&p).unwrap();
        assert!((cam.backproject(&obs) - p).norm() < 1e-9);
        let (o, d) = cam.ray([obs[0], obs[1]]);
        let along = (p - o).normalize();
        assert!((along - d).norm() < 1e-9);
    }

    #[test]
    fn behind_camera_is_rejected() {
        let cam = CameraModel::default();
        assert!(cam.project_ideal(&Point3::new(0.0, -80.0, 10.0)).is_none());
    }

    #[test]
    fn shake_stays_bounded() {
        let cam = CameraModel {
            shake_amplitude: 3.0,
            ..Default::default()
        };
        let mut r = rng::stream(1, 2);
        let mut s = [0.0, 0.0];
        for _ in 0..2000 {
            s = cam.next_shake(s, &mut r);
            assert!(s[0].abs() <= 3.0 + 1e-12 && s[1].abs() <= 3.0 + 1e-12);
        }
    }

    #[test]
    fn reflection_folds_back() {
        assert!((reflect(3.5, 3.0) - 2.5).abs() < 1e-12);
        assert!((reflect(-3.5, 3.0) + 2.5).abs() < 1e-12);
        assert!((reflect(1.0, 3.0) - 1.0).abs() < 1e-12);
    }
}
