//! Serial-chain arm kinematics.

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rigid extension bolted to the last link (pencil, marker, wrench...). It has
/// no actuated joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolExtension {
    pub length: f64,
    pub radius: f64,
    /// Direction in the last link's frame.
    pub direction: [f64; 3],
    /// Std (cm) of i.i.d. world-space perturbation applied to particles on the
    /// tool every frame. Non-zero models a loosely attached object.
    #[serde(default)]
    pub loose_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenJoint {
    pub joint: usize,
    /// Std (rad) of the random motion that replaces the commanded one.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    /// Link lengths in cm. Link `i` starts at joint `i`.
    pub link_lengths: Vec<f64>,
    /// Direction of each link in its own frame.
    pub link_dirs: Vec<[f64; 3]>,
    pub link_radii: Vec<f64>,
    /// Rotation axis of joint `i` in the frame of the previous link.
    pub joint_axes: Vec<[f64; 3]>,
    pub joint_limits: Vec<[f64; 2]>,
    pub base_position: [f64; 3],
    pub base_yaw: f64,
    /// Joint state at reset.
    pub home: Vec<f64>,
    /// Std of multiplicative actuation noise, rad per rad commanded.
    pub actuation_noise_std: f64,
    pub broken: Option<BrokenJoint>,
    pub tool: Option<ToolExtension>,
}

impl ArmModel {
    /// One base-yaw joint carrying a vertical column, followed by three pitch
    /// joints working in the vertical plane.
    pub fn desk_arm() -> Self {
        let pitch = [0.0, -1.0, 0.0];
        Self {
            link_lengths: vec![10.0, 10.0, 8.0, 4.0],
            link_dirs: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            link_radii: vec![1.5, 1.2, 1.0, 0.8],
            joint_axes: vec![[0.0, 0.0, 1.0], pitch, pitch, pitch],
            joint_limits: vec![[-3.0, 3.0], [-0.2, 2.6], [-2.6, 2.6], [-2.6, 2.6]],
            base_position: [0.0, 0.0, 0.0],
            base_yaw: 0.0,
            home: vec![0.0, 0.9, -1.4, -0.6],
            actuation_noise_std: 0.0,
            broken: None,
            tool: None,
        }
    }

    pub fn dof(&self) -> usize {
        self.joint_axes.len()
    }

    /// Number of rigid bodies: links plus the tool if present.
    pub fn n_bodies(&self) -> usize {
        self.link_lengths.len() + usize::from(self.tool.is_some())
    }

    pub fn tool_index(&self) -> Option<usize> {
        self.tool.as_ref().map(|_| self.link_lengths.len())
    }

    /// Bodies that make up the end-effector region: the last link and the tool.
    pub fn end_region(&self) -> Vec<usize> {
        let last = self.link_lengths.len() - 1;
        match self.tool_index() {
            Some(t) => vec![last, t],
            None => vec![last],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dof();
        if d == 0 {
            return Err(Error::InvalidConfig("arm needs at least one joint".into()));
        }
        if self.link_lengths.len() != d
            || self.link_dirs.len() != d
            || self.link_radii.len() != d
            || self.joint_limits.len() != d
            || self.home.len() != d
        {
            return Err(Error::InvalidConfig("per-joint arrays disagree in length".into()));
        }
        if self.link_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidConfig("link lengths must be positive".into()));
        }
        if self.joint_limits.iter().any(|l| !(l[0] < l[1])) {
            return Err(Error::InvalidConfig("joint limits need min < max".into()));
        }
        if let Some(b) = &self.broken {
            if b.joint >= d {
                return Err(Error::InvalidConfig("broken joint out of range".into()));
            }
        }
        if let Some(t) = &self.tool {
            if !(t.length > 0.0) {
                return Err(Error::InvalidConfig("tool length must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (v, lim) in q.iter_mut().zip(&self.joint_limits) {
            *v = v.clamp(lim[0], lim[1]);
        }
    }

    fn base(&self) -> Isometry3<f64> {
        let p = self.base_position;
        Isometry3::from_parts(
            Translation3::new(p[0], p[1], p[2]),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.base_yaw),
        )
    }

    /// World pose of every body frame: frame `i` sits at joint `i`; the tool
    /// frame (if any) sits at the end of the last link.
    pub fn body_frames(&self, q: &[f64]) -> Vec<Isometry3<f64>> {
        let mut frames = Vec::with_capacity(self.n_bodies());
        let mut pose = self.base();
        for i in 0..self.dof() {
            let axis = Unit::new_normalize(Vector3::from(self.joint_axes[i]));
            pose *= UnitQuaternion::from_axis_angle(&axis, q[i]);
            frames.push(pose);
            let step = Vector3::from(self.link_dirs[i]).normalize() * self.link_lengths[i];
            pose *= Translation3::from(step);
        }
        if self.tool.is_some() {
            frames.push(pose);
        }
        frames
    }

    /// Axis segment of a body in world coordinates.
    pub fn body_segment(&self, frames: &[Isometry3<f64>], body: usize) -> (Point3<f64>, Point3<f64>) {
        let frame = &frames[body];
        let (dir, len) = self.body_axis(body);
        (frame * Point3::origin(), frame * Point3::from(dir * len))
    }

    pub fn body_axis(&self, body: usize) -> (Vector3<f64>, f64) {
        if body < self.dof() {
            (Vector3::from(self.link_dirs[body]).normalize(), self.link_lengths[body])
        } else {
            let t = self.tool.as_ref().expect("tool body");
            (Vector3::from(t.direction).normalize(), t.length)
        }
    }

    pub fn body_radius(&self, body: usize) -> f64 {
        if body < self.dof() {
            self.link_radii[body]
        } else {
            self.tool.as_ref().map(|t| t.radius).unwrap_or(0.0)
        }
    }

    /// Tip of the tool, or of the last link without a tool.
    pub fn end_effector(&self, q: &[f64]) -> Point3<f64> {
        let frames = self.body_frames(q);
        let last = frames.len() - 1;
        self.body_segment(&frames, last).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar_two_link() -> ArmModel {
        let z = [0.0, 0.0, 1.0];
        ArmModel {
            link_lengths: vec![10.0, 8.0],
            link_dirs: vec![[1.0, 0.0, 0.0]; 2],
            link_radii: vec![1.0; 2],
            joint_axes: vec![z, z],
            joint_limits: vec![[-3.0, 3.0]; 2],
            base_position: [0.0; 3],
            base_yaw: 0.0,
            home: vec![0.0, 0.0],
            actuation_noise_std: 0.0,
            broken: None,
            tool: None,
        }
    }

    #[test]
    fn planar_forward_kinematics_closed_form() {
        let arm = planar_two_link();
        let (a, b) = (0.4, -0.9);
        let ee = arm.end_effector(&[a, b]);
        let want = (10.0 * a.cos() + 8.0 * (a + b).cos(), 10.0 * a.sin() + 8.0 * (a + b).sin());
        assert!((ee.x - want.0).abs() < 1e-12 && (ee.y - want.1).abs() < 1e-12);
        assert!(ee.z.abs() < 1e-12);
    }

    #[test]
    fn desk_arm_home_pose() {
        let arm = ArmModel::desk_arm();
        arm.validate().unwrap();
        let q = &arm.home;
        let ee = arm.end_effector(q);
        let (a1, a2, a3) = (q[1], q[1] + q[2], q[1] + q[2] + q[3]);
        let x = 10.0 * a1.cos() + 8.0 * a2.cos() + 4.0 * a3.cos();
        let z = 10.0 + 10.0 * a1.sin() + 8.0 * a2.sin() + 4.0 * a3.sin();
        assert!((ee.x - x).abs() < 1e-12 && (ee.z - z).abs() < 1e-12 && ee.y.abs() < 1e-12);
    }

    #[test]
    fn tool_extends_the_last_link() {
        let mut arm = ArmModel::desk_arm();
        let before = arm.end_effector(&arm.home);
        arm.tool = Some(ToolExtension {
            length: 6.0,
            radius: 0.4,
            direction: [1.0, 0.0, 0.0],
            loose_std: 0.0,
        });
        let after = arm.end_effector(&arm.home);
        assert!(((after - before).norm() - 6.0).abs() < 1e-12);
        assert_eq!(arm.end_region(), vec![3, 4]);
    }

    #[test]
    fn validation_catches_bad_models() {
        let mut arm = ArmModel::desk_arm();
        arm.link_lengths[2] = 0.0;
        assert!(arm.validate().is_err());
        let mut arm = ArmModel::desk_arm();
        arm.joint_limits[0] = [1.0, 1.0];
        assert!(arm.validate().is_err());
    }
}
