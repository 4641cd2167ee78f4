use nalgebra::{DMatrix, DVector, Point3};
use rand_distr::{Distribution, Normal};

use crate::rng::{self, tags, SimRng};
use crate::sim::{ExplorationLog, ParticleBinding, SimWorld};
use crate::{Error, Result};

/// Anything the servo loop can drive: it takes d-dimensional actions and
/// reports the tracked positions of the MRCP members.
pub trait Plant {
    fn action_dim(&self) -> usize;

    fn apply(&mut self, action: &[f64]) -> Result<()>;

    /// One entry per MRCP member; `None` once a member is lost.
    fn observe(&mut self) -> Vec<Option<[f64; 3]>>;

    /// Ground-truth distance (cm) from the controlled point to `goal`, when the
    /// plant knows it.
    fn ground_truth_error_cm(&self, _goal: &[f64; 3]) -> Option<f64> {
        None
    }
}

/// `S ← S + J A`, observed through `members` noisy copies.
#[derive(Debug, Clone)]
pub struct LinearPlant {
    pub j: DMatrix<f64>,
    pub position: DVector<f64>,
    pub members: usize,
    pub noise_std: f64,
    /// Actions are ignored while this is positive; each call decrements it.
    pub ignore_next: usize,
    rng: SimRng,
}

impl LinearPlant {
    pub fn new(j: DMatrix<f64>, start: [f64; 3]) -> Self {
        Self {
            j,
            position: DVector::from_column_slice(&start),
            members: 1,
            noise_std: 0.0,
            ignore_next: 0,
            rng: rng::stream(0, tags::ACTUATION),
        }
    }

    pub fn with_noise(mut self, std: f64, members: usize, seed: u64) -> Self {
        self.noise_std = std;
        self.members = members.max(1);
        self.rng = rng::stream(seed, tags::TRACKER);
        self
    }
}

impl Plant for LinearPlant {
    fn action_dim(&self) -> usize {
        self.j.ncols()
    }

    fn apply(&mut self, action: &[f64]) -> Result<()> {
        if action.len() != self.j.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.j.ncols(),
                got: action.len(),
            });
        }
        if self.ignore_next > 0 {
            self.ignore_next -= 1;
            return Ok(());
        }
        self.position += &self.j * DVector::from_column_slice(action);
        Ok(())
    }

    fn observe(&mut self) -> Vec<Option<[f64; 3]>> {
        let p = [self.position[0], self.position[1], self.position[2]];
        if self.noise_std == 0.0 {
            return vec![Some(p); self.members];
        }
        let n = Normal::new(0.0, self.noise_std).expect("finite std");
        (0..self.members)
            .map(|_| Some(p.map(|v| v + n.sample(&mut self.rng))))
            .collect()
    }
}

/// A simulated world whose tracked particles are exactly the MRCP members.
#[derive(Debug, Clone)]
pub struct SimPlant {
    world: SimWorld,
}

impl SimPlant {
    pub fn new(world: SimWorld) -> Self {
        Self { world }
    }

    /// Continues from the final state of an exploration, tracking `members`.
    pub fn from_log(log: &ExplorationLog, members: Vec<ParticleBinding>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Domain("servoing needs at least one member".into()));
        }
        let mut config = log.config.clone();
        config.particles = members;
        let last = log.frames.last().ok_or(Error::MalformedLog("no frames".into()))?;
        Ok(Self {
            world: SimWorld::with_state(config, last.joints.clone(), last.shake)?,
        })
    }

    /// Like [`Self::from_log`] but with every arm moved to its home pose.
    pub fn from_log_at_home(log: &ExplorationLog, members: Vec<ParticleBinding>) -> Result<Self> {
        let mut plant = Self::from_log(log, members)?;
        let world = &plant.world;
        let home = world.config().home();
        plant.world = SimWorld::with_state(world.config().clone(), home, world.shake())?;
        Ok(plant)
    }

    pub fn world(&self) -> &SimWorld {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut SimWorld {
        &mut self.world
    }

    /// True world position of the controlled point: the centroid of the
    /// members' rigid attachment points.
    pub fn control_point_world(&self) -> Point3<f64> {
        let cfg = self.world.config();
        let frames = cfg.all_frames(self.world.joints());
        let sum = cfg
            .particles
            .iter()
            .map(|b| cfg.particle_world(&frames, &b.host).coords)
            .sum::<nalgebra::Vector3<f64>>();
        Point3::from(sum / cfg.particles.len() as f64)
    }

    /// Ideal (noise- and shake-free) image position of the controlled point.
    pub fn control_point_image(&self) -> Option<[f64; 3]> {
        self.world.config().camera.project_ideal(&self.control_point_world())
    }
}

impl Plant for SimPlant {
    fn action_dim(&self) -> usize {
        self.world.config().dof()
    }

    fn apply(&mut self, action: &[f64]) -> Result<()> {
        self.world.step(action)
    }

    fn observe(&mut self) -> Vec<Option<[f64; 3]>> {
        self.world.observe()
    }

    /// Goals are camera coordinates in the current (possibly shaken) view.
    fn ground_truth_error_cm(&self, goal: &[f64; 3]) -> Option<f64> {
        let s = self.world.shake();
        let target = self
            .world
            .config()
            .camera
            .backproject(&[goal[0] - s[0], goal[1] - s[1], goal[2]]);
        Some((self.control_point_world() - target).norm())
    }
}
