use nalgebra::Point3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::world::{Host, ParticleBinding, SimWorld, WorldConfig};
use crate::rng::{self, derive_seed, mix64, tags};
use crate::{Error, Result};

/// One row per timestep, each a d-dimensional control input.
pub type ActionSequence = Vec<Vec<f64>>;

/// Observed positions of one tracked point. `None` marks frames after the
/// tracker lost it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleTrack {
    pub positions: Vec<Option<[f64; 3]>>,
}

impl ParticleTrack {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn alive(&self, t: usize) -> bool {
        self.positions.get(t).is_some_and(|p| p.is_some())
    }

    /// Alive at every frame.
    pub fn is_full(&self) -> bool {
        self.positions.iter().all(|p| p.is_some())
    }

    pub fn last(&self) -> Option<[f64; 3]> {
        self.positions.last().copied().flatten()
    }

    /// Every frame, or `None` if any frame is missing.
    pub fn full_positions(&self) -> Option<Vec<[f64; 3]>> {
        self.positions.iter().copied().collect()
    }
}

/// Joint angles of every arm plus the camera offset at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub joints: Vec<Vec<f64>>,
    pub shake: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// World position (cm).
    pub world: [f64; 3],
    /// Ideal camera coordinates (px, px, cm), without shake or noise.
    pub image: [f64; 3],
}

/// Everything recorded while the controlled arm executed random actions.
/// Track position `t + 1` reflects the state after `actions[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationLog {
    pub config: WorldConfig,
    pub action_scale: f64,
    pub actions: ActionSequence,
    /// Per decoy arm (in arm order), the actions it executed.
    pub decoy_actions: Vec<ActionSequence>,
    pub tracks: Vec<ParticleTrack>,
    pub frames: Vec<FrameState>,
    pub gt_ee: Vec<GroundTruth>,
    pub body_mask: Vec<bool>,
}

impl ExplorationLog {
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn bindings(&self) -> &[ParticleBinding] {
        &self.config.particles
    }

    /// Actions that drove `arm` during the exploration.
    pub fn actions_of(&self, arm: usize) -> Option<&ActionSequence> {
        if arm == self.config.controlled_arm() {
            return Some(&self.actions);
        }
        let pos = self.config.decoy_arms().iter().position(|&a| a == arm)?;
        self.decoy_actions.get(pos)
    }

    /// Ground-truth end-effector of any arm at frame `t`.
    pub fn end_effector(&self, arm: usize, t: usize) -> GroundTruth {
        let (w, img) = self.config.end_effector(arm, &self.frames[t].joints[arm]);
        GroundTruth {
            world: [w.x, w.y, w.z],
            image: img.unwrap_or([f64::NAN; 3]),
        }
    }

    /// Re-tracks `binding` over the logged state trajectory with fresh
    /// tracker noise. Replayed tracks are never dropped by the tracker; they
    /// only end if the point leaves the image.
    pub fn replay_point(&self, binding: &ParticleBinding) -> Result<ParticleTrack> {
        self.config.check_binding(binding)?;
        let mut noise = rng::stream(
            derive_seed(derive_seed(self.config.seed, tags::REPLAY), self.config.tracker.seed),
            binding.id,
        );
        let mut lost = false;
        let positions = self
            .frames
            .iter()
            .enumerate()
            .map(|(t, f)| {
                if lost {
                    return None;
                }
                let frames = self.config.all_frames(&f.joints);
                let p = self.config.render(binding, &frames, f.shake, t, &mut noise);
                lost = p.is_none();
                p
            })
            .collect();
        Ok(ParticleTrack { positions })
    }

    /// Lays a `grid`×`grid` pixel lattice centred on `center` over the first
    /// frame and binds each pixel to whatever it sees: the front-most arm body
    /// whose silhouette covers it, else the backdrop.
    pub fn bind_grid(&self, center: [f64; 2], grid: usize, spacing: f64) -> Vec<ParticleBinding> {
        let cam = &self.config.camera;
        let f0 = &self.frames[0];
        let frames = self.config.all_frames(&f0.joints);
        let half = (grid as f64 - 1.0) / 2.0;
        let salt = mix64(center[0].to_bits() ^ mix64(center[1].to_bits()) ^ spacing.to_bits());
        let mut out = Vec::with_capacity(grid * grid);
        for gy in 0..grid {
            for gx in 0..grid {
                let px = [
                    center[0] + (gx as f64 - half) * spacing,
                    center[1] + (gy as f64 - half) * spacing,
                ];
                if !cam.in_bounds(&[px[0], px[1], 1.0]) {
                    continue;
                }
                // Undo the camera offset baked into the observed frame.
                let ideal = [px[0] - f0.shake[0], px[1] - f0.shake[1]];
                let id = mix64(salt ^ ((gy * grid + gx) as u64)) | (1 << 63);
                let host = self.host_under_pixel(&frames, ideal);
                if let Some(host) = host {
                    out.push(ParticleBinding { id, host });
                }
            }
        }
        out
    }

    fn host_under_pixel(&self, frames: &[Vec<nalgebra::Isometry3<f64>>], px: [f64; 2]) -> Option<Host> {
        let cam = &self.config.camera;
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, slot) in self.config.arms.iter().enumerate() {
            let m = &slot.model;
            for body in 0..m.n_bodies() {
                let (p0, p1) = m.body_segment(&frames[a], body);
                let (Some(a2), Some(b2)) = (cam.project_ideal(&p0), cam.project_ideal(&p1)) else {
                    continue;
                };
                let seg = [b2[0] - a2[0], b2[1] - a2[1]];
                let len2 = seg[0] * seg[0] + seg[1] * seg[1];
                let u = if len2 > 0.0 {
                    (((px[0] - a2[0]) * seg[0] + (px[1] - a2[1]) * seg[1]) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let on_axis = p0 + (p1 - p0) * u;
                let Some(proj) = cam.project_ideal(&on_axis) else {
                    continue;
                };
                let dist = ((px[0] - proj[0]).powi(2) + (px[1] - proj[1]).powi(2)).sqrt();
                if dist <= m.body_radius(body) * cam.px_per_cm(proj[2]) && best.is_none_or(|(d, _, _)| proj[2] < d) {
                    best = Some((proj[2], a, body));
                }
            }
        }
        match best {
            Some((depth, arm, body)) => {
                let world = cam.backproject(&[px[0], px[1], depth]);
                let local = frames[arm][body].inverse() * world;
                Some(Host::Link {
                    arm,
                    body,
                    offset: [local.x, local.y, local.z],
                })
            }
            None => {
                let (o, d) = cam.ray(px);
                let t = self.config.backdrop.intersect(&o, &d)?;
                let p: Point3<f64> = o + d * t;
                Some(Host::Background { point: [p.x, p.y, p.z] })
            }
        }
    }
}

/// Executes `n_actions` i.i.d. uniform actions in `[-action_scale, action_scale]^d`
/// from the world's current state, observing after every step.
pub fn run_exploration(world: &mut SimWorld, n_actions: usize, action_scale: f64) -> Result<ExplorationLog> {
    if n_actions == 0 {
        return Err(Error::Domain("exploration needs at least one action".into()));
    }
    if !(action_scale >= 0.0) {
        return Err(Error::Domain("action scale must be >= 0".into()));
    }
    let config = world.config().clone();
    let d = config.dof();
    let c = config.controlled_arm();
    let n_decoys = config.decoy_arms().len();
    let mut action_rng = rng::stream(config.seed, tags::ACTIONS);

    let mut actions = Vec::with_capacity(n_actions);
    let mut decoy_actions = vec![Vec::with_capacity(n_actions); n_decoys];
    let mut frames = Vec::with_capacity(n_actions + 1);
    let mut gt_ee = Vec::with_capacity(n_actions + 1);
    let mut per_frame_obs = Vec::with_capacity(n_actions + 1);

    let record = |world: &mut SimWorld, frames: &mut Vec<FrameState>, gt: &mut Vec<GroundTruth>| {
        frames.push(FrameState {
            joints: world.joints().to_vec(),
            shake: world.shake(),
        });
        let (w, img) = world.config().end_effector(c, &world.joints()[c]);
        gt.push(GroundTruth {
            world: [w.x, w.y, w.z],
            image: img.unwrap_or([f64::NAN; 3]),
        });
        world.observe()
    };

    per_frame_obs.push(record(world, &mut frames, &mut gt_ee));
    for _ in 0..n_actions {
        let a: Vec<f64> = (0..d)
            .map(|_| {
                if action_scale > 0.0 {
                    action_rng.random_range(-action_scale..=action_scale)
                } else {
                    0.0
                }
            })
            .collect();
        world.step(&a)?;
        for (k, da) in world.last_decoy_actions().iter().enumerate() {
            decoy_actions[k].push(da.clone());
        }
        actions.push(a);
        per_frame_obs.push(record(world, &mut frames, &mut gt_ee));
    }

    let n_particles = config.particles.len();
    let tracks = (0..n_particles)
        .map(|i| ParticleTrack {
            positions: per_frame_obs.iter().map(|o| o[i]).collect(),
        })
        .collect();
    let body_mask = config.particles.iter().map(|p| p.on_arm(c)).collect();
    Ok(ExplorationLog {
        config,
        action_scale,
        actions,
        decoy_actions,
        tracks,
        frames,
        gt_ee,
        body_mask,
    })
}

/// Builds the scene for `seed` and runs one exploration in it.
pub fn explore_scene(spec: &super::SceneSpec, seed: u64, n_actions: usize, action_scale: f64) -> Result<ExplorationLog> {
    let mut world = SimWorld::new(spec.build(seed)?)?;
    run_exploration(&mut world, n_actions, action_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scene::{SceneSpec, ToolKind};

    fn log(spec: &SceneSpec, seed: u64, n: usize) -> ExplorationLog {
        let mut w = SimWorld::new(spec.build(seed).unwrap()).unwrap();
        run_exploration(&mut w, n, 0.05).unwrap()
    }

    #[test]
    fn shape_contract() {
        let l = log(&SceneSpec::default(), 1, 100);
        assert_eq!(l.actions.len(), 100);
        assert_eq!(l.frames.len(), 101);
        assert_eq!(l.gt_ee.len(), 101);
        assert!(l.tracks.iter().all(|t| t.len() == 101));
        assert!(l.actions.iter().all(|a| a.len() == 4 && a.iter().all(|v| v.abs() <= 0.05)));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = log(&SceneSpec::default(), 9, 40);
        let b = log(&SceneSpec::default(), 9, 40);
        assert_eq!(a, b);
        let c = log(&SceneSpec::default(), 10, 40);
        assert_ne!(a.actions, c.actions);
    }

    #[test]
    fn zero_exploration_rejected() {
        let mut w = SimWorld::new(SceneSpec::default().build(0).unwrap()).unwrap();
        assert!(run_exploration(&mut w, 0, 0.05).is_err());
    }

    #[test]
    fn rigid_bodies_keep_their_shape() {
        let l = log(&SceneSpec::noiseless(), 4, 50);
        let cfg = &l.config;
        let on_link2: Vec<&ParticleBinding> = cfg.particles.iter().filter(|p| p.on_body(0, 2)).collect();
        assert!(on_link2.len() >= 2);
        let dist = |f: &FrameState, a: &ParticleBinding, b: &ParticleBinding| {
            let frames = cfg.all_frames(&f.joints);
            (cfg.particle_world(&frames, &a.host) - cfg.particle_world(&frames, &b.host)).norm()
        };
        let d0 = dist(&l.frames[0], on_link2[0], on_link2[1]);
        for f in &l.frames {
            assert!((dist(f, on_link2[0], on_link2[1]) - d0).abs() < 1e-9);
        }
    }

    #[test]
    fn replay_reproduces_noiseless_tracks() {
        let l = log(&SceneSpec::noiseless(), 2, 30);
        for (b, t) in l.config.particles.iter().zip(&l.tracks).take(10) {
            assert_eq!(&l.replay_point(b).unwrap(), t);
        }
    }

    #[test]
    fn replayed_background_is_constant_without_shake() {
        let spec = SceneSpec {
            jitter_std: 0.0,
            pixel_noise_std: 0.0,
            depth_noise_std: 0.0,
            ..SceneSpec::default()
        };
        let l = log(&spec, 2, 20);
        let b = ParticleBinding {
            id: 77,
            host: Host::Background { point: [3.0, 35.0, 10.0] },
        };
        let t = l.replay_point(&b).unwrap();
        assert!(t.positions.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn replayed_tip_follows_ground_truth() {
        let spec = SceneSpec {
            jitter_std: 0.5,
            pixel_noise_std: 0.0,
            depth_noise_std: 0.0,
            ..SceneSpec::default()
        };
        let l = log(&spec, 3, 30);
        let len = l.config.arms[0].model.link_lengths[3];
        let tip = ParticleBinding {
            id: 5,
            host: Host::Link {
                arm: 0,
                body: 3,
                offset: [len, 0.0, 0.0],
            },
        };
        let t = l.replay_point(&tip).unwrap();
        for (p, gt) in t.positions.iter().zip(&l.gt_ee) {
            let p = p.unwrap();
            assert!((p[0] - gt.image[0]).abs() < 4.0 && (p[1] - gt.image[1]).abs() < 4.0);
            assert!((p[2] - gt.image[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_binding_rejected() {
        let l = log(&SceneSpec::noiseless(), 2, 5);
        let b = ParticleBinding {
            id: 1,
            host: Host::Link {
                arm: 3,
                body: 0,
                offset: [0.0; 3],
            },
        };
        assert!(l.replay_point(&b).is_err());
    }

    #[test]
    fn grid_counts_and_hosts() {
        let l = log(&SceneSpec::noiseless(), 1, 5);
        let cam = &l.config.camera;
        let tip = l.gt_ee[0].image;
        let grid = l.bind_grid([tip[0], tip[1]], 15, 1.0);
        assert_eq!(grid.len(), 225);
        let on_last = grid.iter().filter(|b| b.on_body(0, 3)).count();
        let on_arm = grid.iter().filter(|b| b.on_arm(0)).count();
        assert!(on_last as f64 > 0.5 * on_arm as f64, "{on_last} of {on_arm}");

        // Top-left corner of the image is empty backdrop.
        let bg = l.bind_grid([20.0, 20.0], 15, 2.0);
        assert_eq!(bg.len(), 225);
        assert!(bg.iter().all(|b| matches!(b.host, Host::Background { .. })));

        // Near the border only in-bounds pixels survive.
        let edge = l.bind_grid([0.0, 0.0], 15, 2.0);
        assert_eq!(edge.len(), 64);
        assert!(cam.in_bounds(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn grid_binding_reproduces_the_pixel() {
        let l = log(&SceneSpec::noiseless().with_tool(ToolKind::Marker), 1, 5);
        let tip = l.gt_ee[0].image;
        for b in l.bind_grid([tip[0], tip[1]], 5, 1.5) {
            let t = l.replay_point(&b).unwrap();
            assert!(t.positions[0].is_some());
        }
    }
}
