use nalgebra::{Isometry3, Point3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::arm::ArmModel;
use super::camera::CameraModel;
use crate::rng::{self, derive_seed, tags, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSlot {
    pub model: ArmModel,
    pub controlled: bool,
    /// Half-width of the uniform actions a decoy replays each step. Ignored
    /// for the controlled arm.
    pub action_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerModel {
    /// Per-frame measurement noise on tracked image positions (px).
    pub jitter_std: f64,
    /// Probability that a live track is lost at each frame. Lost tracks never
    /// come back.
    pub drop_prob_per_step: f64,
    pub seed: u64,
}

impl Default for TrackerModel {
    fn default() -> Self {
        Self {
            jitter_std: 0.0,
            drop_prob_per_step: 0.0,
            seed: 0,
        }
    }
}

/// Static scene surfaces behind the arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backdrop {
    pub wall_y: f64,
    pub table_z: f64,
}

impl Default for Backdrop {
    fn default() -> Self {
        Self {
            wall_y: 35.0,
            table_z: -2.0,
        }
    }
}

impl Backdrop {
    /// First backdrop hit along a ray, as a ray parameter.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut consider = |t: f64| {
            if t > 0.0 && t.is_finite() && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        };
        if dir.y.abs() > 1e-12 {
            consider((self.wall_y - origin.y) / dir.y);
        }
        if dir.z.abs() > 1e-12 {
            consider((self.table_z - origin.z) / dir.z);
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Host {
    /// Rigidly attached to body `body` of arm `arm`, at `offset` in the body frame (cm).
    Link { arm: usize, body: usize, offset: [f64; 3] },
    /// Fixed world point.
    Background { point: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleBinding {
    pub id: u64,
    pub host: Host,
}

impl ParticleBinding {
    pub fn on_arm(&self, arm: usize) -> bool {
        matches!(self.host, Host::Link { arm: a, .. } if a == arm)
    }

    pub fn on_body(&self, arm: usize, body: usize) -> bool {
        matches!(self.host, Host::Link { arm: a, body: b, .. } if a == arm && b == body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub arms: Vec<ArmSlot>,
    pub camera: CameraModel,
    pub tracker: TrackerModel,
    #[serde(default)]
    pub backdrop: Backdrop,
    pub particles: Vec<ParticleBinding>,
    pub seed: u64,
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let controlled = self.arms.iter().filter(|a| a.controlled).count();
        if controlled != 1 {
            return Err(Error::InvalidConfig(format!(
                "need exactly one controlled arm, found {controlled}"
            )));
        }
        for slot in &self.arms {
            slot.model.validate()?;
        }
        let t = &self.tracker;
        if !(0.0..1.0).contains(&t.drop_prob_per_step) {
            return Err(Error::InvalidConfig("drop probability must be in [0, 1)".into()));
        }
        for p in &self.particles {
            self.check_binding(p)?;
        }
        Ok(())
    }

    pub fn check_binding(&self, p: &ParticleBinding) -> Result<()> {
        match &p.host {
            Host::Link { arm, body, offset } => {
                let ok = self.arms.get(*arm).is_some_and(|s| *body < s.model.n_bodies())
                    && offset.iter().all(|v| v.is_finite());
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!("particle {} has an invalid host", p.id)))
                }
            }
            Host::Background { point } if point.iter().all(|v| v.is_finite()) => Ok(()),
            Host::Background { .. } => Err(Error::InvalidConfig(format!(
                "particle {} has a non-finite position",
                p.id
            ))),
        }
    }

    pub fn controlled_arm(&self) -> usize {
        self.arms.iter().position(|a| a.controlled).expect("validated")
    }

    pub fn decoy_arms(&self) -> Vec<usize> {
        (0..self.arms.len()).filter(|&i| !self.arms[i].controlled).collect()
    }

    pub fn dof(&self) -> usize {
        self.arms[self.controlled_arm()].model.dof()
    }

    pub fn home(&self) -> Vec<Vec<f64>> {
        self.arms.iter().map(|a| a.model.home.clone()).collect()
    }

    /// Frames of every body of every arm for a joint state.
    pub fn all_frames(&self, joints: &[Vec<f64>]) -> Vec<Vec<Isometry3<f64>>> {
        self.arms
            .iter()
            .zip(joints)
            .map(|(slot, q)| slot.model.body_frames(q))
            .collect()
    }

    /// World position of a particle, before any loose-tool perturbation.
    pub fn particle_world(&self, frames: &[Vec<Isometry3<f64>>], host: &Host) -> Point3<f64> {
        match host {
            Host::Link { arm, body, offset } => frames[*arm][*body] * Point3::from(*offset),
            Host::Background { point } => Point3::from(*point),
        }
    }

    fn loose_std(&self, host: &Host) -> f64 {
        match host {
            Host::Link { arm, body, .. } => {
                let m = &self.arms[*arm].model;
                match (&m.tool, m.tool_index()) {
                    (Some(t), Some(ti)) if ti == *body => t.loose_std,
                    _ => 0.0,
                }
            }
            Host::Background { .. } => 0.0,
        }
    }

    /// Ground-truth end-effector of an arm: world point and ideal image
    /// coordinates (no shake or noise).
    pub fn end_effector(&self, arm: usize, joints: &[f64]) -> (Point3<f64>, Option<[f64; 3]>) {
        let p = self.arms[arm].model.end_effector(joints);
        (p, self.camera.project_ideal(&p))
    }

    /// Renders one particle at one frame. Returns `None` when the point leaves
    /// the image. Noise is drawn from `noise` only when the point is visible.
    pub(crate) fn render(
        &self,
        binding: &ParticleBinding,
        frames: &[Vec<Isometry3<f64>>],
        shake: [f64; 2],
        frame_index: usize,
        noise: &mut SimRng,
    ) -> Option<[f64; 3]> {
        let mut world = self.particle_world(frames, &binding.host);
        let loose = self.loose_std(&binding.host);
        if loose > 0.0 {
            let mut r = rng::stream(derive_seed(self.seed, binding.id), tags::LOOSE ^ ((frame_index as u64) << 8));
            let n: [f64; 3] = [r.sample(StandardNormal), r.sample(StandardNormal), r.sample(StandardNormal)];
            world += Vector3::from(n) * loose;
        }
        let ideal = self.camera.project_ideal(&world)?;
        let cam = &self.camera;
        let xy_std = (cam.pixel_noise_std.powi(2) + self.tracker.jitter_std.powi(2)).sqrt();
        let mut obs = [ideal[0] + shake[0], ideal[1] + shake[1], ideal[2]];
        if xy_std > 0.0 {
            obs[0] += xy_std * noise.sample::<f64, _>(StandardNormal);
            obs[1] += xy_std * noise.sample::<f64, _>(StandardNormal);
        }
        if cam.depth_noise_std > 0.0 {
            obs[2] += cam.depth_noise_std * noise.sample::<f64, _>(StandardNormal);
        }
        if cam.in_bounds(&obs) {
            Some(obs)
        } else {
            None
        }
    }
}

/// Mutable simulator state: joint angles of every arm, camera shake, the
/// frame counter and which particle tracks are still alive.
#[derive(Debug, Clone)]
pub struct SimWorld {
    config: WorldConfig,
    joints: Vec<Vec<f64>>,
    shake: [f64; 2],
    frame: usize,
    alive: Vec<bool>,
    last_decoy_actions: Vec<Vec<f64>>,
    actuation_rng: SimRng,
    decoy_rng: SimRng,
    tracker_rng: SimRng,
    dropout_rng: SimRng,
    shake_rng: SimRng,
}

impl SimWorld {
    pub fn new(config: WorldConfig) -> Result<Self> {
        let joints = config.home();
        Self::with_state(config, joints, [0.0, 0.0])
    }

    /// Starts from an explicit joint state and camera offset.
    pub fn with_state(config: WorldConfig, joints: Vec<Vec<f64>>, shake: [f64; 2]) -> Result<Self> {
        config.validate()?;
        if joints.len() != config.arms.len()
            || joints.iter().zip(&config.arms).any(|(q, a)| q.len() != a.model.dof())
        {
            return Err(Error::InvalidConfig("joint state does not match the arms".into()));
        }
        let seed = config.seed;
        let tseed = derive_seed(seed, config.tracker.seed);
        Ok(Self {
            alive: vec![true; config.particles.len()],
            last_decoy_actions: Vec::new(),
            actuation_rng: rng::stream(seed, tags::ACTUATION),
            decoy_rng: rng::stream(seed, tags::DECOY),
            tracker_rng: rng::stream(tseed, tags::TRACKER),
            dropout_rng: rng::stream(tseed, tags::DROPOUT),
            shake_rng: rng::stream(seed, tags::SHAKE),
            config,
            joints,
            shake,
            frame: 0,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn joints(&self) -> &[Vec<f64>] {
        &self.joints
    }

    pub fn controlled_joints(&self) -> &[f64] {
        &self.joints[self.config.controlled_arm()]
    }

    pub fn shake(&self) -> [f64; 2] {
        self.shake
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    /// Actions the decoy arms executed in the last step, in arm order.
    pub fn last_decoy_actions(&self) -> &[Vec<f64>] {
        &self.last_decoy_actions
    }

    /// Advances one unit timestep. `action` is a joint-velocity command for
    /// the controlled arm; decoys draw their own uniform actions.
    pub fn step(&mut self, action: &[f64]) -> Result<()> {
        let c = self.config.controlled_arm();
        let d = self.config.arms[c].model.dof();
        if action.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: action.len(),
            });
        }
        if action.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action"));
        }
        let mut decoy_actions = Vec::new();
        for arm in 0..self.config.arms.len() {
            let slot = &self.config.arms[arm];
            let cmd: Vec<f64> = if arm == c {
                action.to_vec()
            } else {
                let s = slot.action_scale;
                let a: Vec<f64> = (0..slot.model.dof())
                    .map(|_| if s > 0.0 { self.decoy_rng.random_range(-s..=s) } else { 0.0 })
                    .collect();
                decoy_actions.push(a.clone());
                a
            };
            let model = &slot.model;
            let q = &mut self.joints[arm];
            for (j, &a) in cmd.iter().enumerate() {
                let n: f64 = self.actuation_rng.sample(StandardNormal);
                let mut dq = a + model.actuation_noise_std * a.abs() * n;
                if let Some(b) = model.broken.as_ref().filter(|b| b.joint == j) {
                    dq = b.std * n;
                }
                q[j] += dq;
            }
            model.clamp(q);
        }
        self.last_decoy_actions = decoy_actions;
        self.shake = self.config.camera.next_shake(self.shake, &mut self.shake_rng);
        self.frame += 1;
        Ok(())
    }

    /// Observes every particle: `(x px, y px, depth cm)` or `None` once the
    /// track is lost.
    pub fn observe(&mut self) -> Vec<Option<[f64; 3]>> {
        let frames = self.config.all_frames(&self.joints);
        let p = self.config.tracker.drop_prob_per_step;
        let mut out = Vec::with_capacity(self.config.particles.len());
        for (i, binding) in self.config.particles.iter().enumerate() {
            if !self.alive[i] {
                out.push(None);
                continue;
            }
            let dropped = p > 0.0 && self.frame > 0 && self.dropout_rng.random::<f64>() < p;
            let obs = if dropped {
                None
            } else {
                self.config
                    .render(binding, &frames, self.shake, self.frame, &mut self.tracker_rng)
            };
            if obs.is_none() {
                self.alive[i] = false;
            }
            out.push(obs);
        }
        out
    }

    /// Ground-truth end-effector of the controlled arm.
    pub fn end_effector(&self) -> (Point3<f64>, Option<[f64; 3]>) {
        let c = self.config.controlled_arm();
        self.config.end_effector(c, &self.joints[c])
    }
}
