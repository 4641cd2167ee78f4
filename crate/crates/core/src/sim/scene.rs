//! Scene presets: the desk arm, optional tools and decoy, seeded particle
//! placement on the arm surfaces and the backdrop.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arm::{ArmModel, BrokenJoint, ToolExtension};
use super::camera::CameraModel;
use super::world::{ArmSlot, Backdrop, Host, ParticleBinding, TrackerModel, WorldConfig};
use crate::rng::{self, tags};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    #[default]
    None,
    Wrench,
    Pliers,
    Pencil,
    Marker,
    /// Loosely attached, particles jiggle independently of the arm.
    Rope,
}

impl ToolKind {
    pub const REACHING_SET: [ToolKind; 5] = [
        ToolKind::None,
        ToolKind::Wrench,
        ToolKind::Pliers,
        ToolKind::Pencil,
        ToolKind::Marker,
    ];

    pub fn extension(self) -> Option<ToolExtension> {
        let (length, radius, direction, loose_std) = match self {
            ToolKind::None => return None,
            ToolKind::Wrench => (5.0, 0.7, [1.0, 0.0, -0.3], 0.0),
            ToolKind::Pliers => (6.0, 0.6, [1.0, 0.0, 0.0], 0.0),
            ToolKind::Pencil => (9.0, 0.35, [1.0, 0.0, -0.15], 0.0),
            ToolKind::Marker => (8.0, 0.6, [1.0, 0.0, 0.2], 0.0),
            ToolKind::Rope => (7.0, 0.4, [0.3, 0.0, -1.0], 0.6),
        };
        Some(ToolExtension {
            length,
            radius,
            direction,
            loose_std,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ToolKind::None => "no-tool",
            ToolKind::Wrench => "wrench",
            ToolKind::Pliers => "pliers",
            ToolKind::Pencil => "pencil",
            ToolKind::Marker => "marker",
            ToolKind::Rope => "rope",
        }
    }
}

/// Everything needed to generate a [`WorldConfig`] from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub tool: ToolKind,
    /// Adds a second, independently driven arm beside the controlled one.
    pub decoy: bool,
    pub decoy_action_scale: f64,
    pub actuation_noise_std: f64,
    pub pixel_noise_std: f64,
    pub depth_noise_std: f64,
    pub jitter_std: f64,
    pub drop_prob_per_step: f64,
    pub shake_amplitude: f64,
    pub link_particles: usize,
    pub background_particles: usize,
    /// Moves the controlled arm's base (cm) and heading (rad).
    pub base_offset: [f64; 3],
    pub base_yaw: f64,
    pub broken_joint: Option<usize>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            tool: ToolKind::None,
            decoy: false,
            decoy_action_scale: 0.08,
            actuation_noise_std: 0.05,
            pixel_noise_std: 0.3,
            depth_noise_std: 0.3,
            jitter_std: 0.4,
            drop_prob_per_step: 0.002,
            shake_amplitude: 0.0,
            link_particles: 40,
            background_particles: 40,
            base_offset: [0.0; 3],
            base_yaw: 0.0,
            broken_joint: None,
        }
    }
}

impl SceneSpec {
    /// Perfect actuation, sensing and tracking.
    pub fn noiseless() -> Self {
        Self {
            actuation_noise_std: 0.0,
            pixel_noise_std: 0.0,
            depth_noise_std: 0.0,
            jitter_std: 0.0,
            drop_prob_per_step: 0.0,
            ..Self::default()
        }
    }

    pub fn with_tool(mut self, tool: ToolKind) -> Self {
        self.tool = tool;
        self
    }

    pub fn build(&self, seed: u64) -> Result<WorldConfig> {
        let mut arm = ArmModel::desk_arm();
        arm.actuation_noise_std = self.actuation_noise_std;
        arm.tool = self.tool.extension();
        arm.base_position = self.base_offset;
        arm.base_yaw = self.base_yaw;
        arm.broken = self.broken_joint.map(|joint| BrokenJoint { joint, std: 0.05 });
        let mut arms = vec![ArmSlot {
            model: arm,
            controlled: true,
            action_scale: 0.0,
        }];
        let mut camera = CameraModel {
            pixel_noise_std: self.pixel_noise_std,
            depth_noise_std: self.depth_noise_std,
            shake_amplitude: self.shake_amplitude,
            ..CameraModel::default()
        };
        if self.decoy {
            let mut decoy = ArmModel::desk_arm();
            decoy.actuation_noise_std = self.actuation_noise_std;
            decoy.base_position = [34.0 + self.base_offset[0], self.base_offset[1], self.base_offset[2]];
            arms.push(ArmSlot {
                model: decoy,
                controlled: false,
                action_scale: self.decoy_action_scale,
            });
            camera.position = [22.0, -78.0, 18.0];
        }
        let tracker = TrackerModel {
            jitter_std: self.jitter_std,
            drop_prob_per_step: self.drop_prob_per_step,
            seed: 0,
        };
        let mut cfg = WorldConfig {
            arms,
            camera,
            tracker,
            backdrop: Backdrop::default(),
            particles: Vec::new(),
            seed,
        };
        cfg.particles = place_particles(&cfg, self.link_particles, self.background_particles, seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

const BORDER_PX: f64 = 20.0;

/// Scatters particles over the surfaces of every arm body, in proportion to
/// body length, plus background points on the backdrop.
pub fn place_particles(cfg: &WorldConfig, per_arm: usize, background: usize, seed: u64) -> Vec<ParticleBinding> {
    let mut r = rng::stream(seed, tags::SCENE);
    let mut out = Vec::new();
    let mut next_id = 0u64;
    for (a, slot) in cfg.arms.iter().enumerate() {
        let m = &slot.model;
        let lengths: Vec<f64> = (0..m.n_bodies()).map(|b| m.body_axis(b).1).collect();
        let total: f64 = lengths.iter().sum();
        let mut counts: Vec<usize> = lengths
            .iter()
            .map(|l| ((l / total) * per_arm as f64).floor() as usize)
            .collect();
        let mut assigned: usize = counts.iter().sum();
        // Leftovers go to the distal bodies first.
        let mut b = counts.len();
        while assigned < per_arm {
            b = if b == 0 { counts.len() - 1 } else { b - 1 };
            counts[b] += 1;
            assigned += 1;
        }
        for (body, &count) in counts.iter().enumerate() {
            let (dir, len) = m.body_axis(body);
            let radius = m.body_radius(body);
            let perp1 = dir.cross(&Vector3::y()).try_normalize(1e-9).unwrap_or_else(|| dir.cross(&Vector3::x()).normalize());
            let perp2 = dir.cross(&perp1);
            for _ in 0..count {
                let u: f64 = r.random_range(0.05..=1.0);
                let phi: f64 = r.random_range(0.0..std::f64::consts::TAU);
                let p = dir * (u * len) + (perp1 * phi.cos() + perp2 * phi.sin()) * radius;
                out.push(ParticleBinding {
                    id: next_id,
                    host: Host::Link {
                        arm: a,
                        body,
                        offset: [p.x, p.y, p.z],
                    },
                });
                next_id += 1;
            }
        }
    }
    let cam = &cfg.camera;
    let mut placed = 0;
    while placed < background {
        // Inset keeps noisy observations inside the frame.
        let px = [
            r.random_range(BORDER_PX..cam.image_size[0] - BORDER_PX),
            r.random_range(BORDER_PX..cam.image_size[1] - BORDER_PX),
        ];
        let (o, d) = cam.ray(px);
        let Some(t) = cfg.backdrop.intersect(&o, &d) else {
            continue;
        };
        let p: Point3<f64> = o + d * t;
        out.push(ParticleBinding {
            id: next_id,
            host: Host::Background { point: [p.x, p.y, p.z] },
        });
        next_id += 1;
        placed += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::SimWorld;

    #[test]
    fn default_scene_is_visible_and_valid() {
        for seed in 0..5 {
            let cfg = SceneSpec::default().build(seed).unwrap();
            assert_eq!(cfg.particles.len(), 80);
            let mut w = SimWorld::new(cfg).unwrap();
            let obs = w.observe();
            assert!(obs.iter().all(|o| o.is_some()), "seed {seed}");
        }
    }

    #[test]
    fn every_body_gets_particles() {
        let cfg = SceneSpec::noiseless().with_tool(ToolKind::Pencil).build(0).unwrap();
        for body in 0..5 {
            assert!(cfg.particles.iter().any(|p| p.on_body(0, body)), "body {body}");
        }
    }

    #[test]
    fn decoy_scene_fits_in_view() {
        let spec = SceneSpec {
            decoy: true,
            ..SceneSpec::noiseless()
        };
        let mut w = SimWorld::new(spec.build(1).unwrap()).unwrap();
        assert!(w.observe().iter().all(|o| o.is_some()));
        let (_, img) = w.config().end_effector(1, &w.config().arms[1].model.home);
        assert!(img.is_some_and(|p| w.config().camera.in_bounds(&p)));
    }
}
