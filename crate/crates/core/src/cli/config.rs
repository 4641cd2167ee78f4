//! Run configuration: a JSON document where every field is optional and
//! defaults as below, with command-line flags applied on top.
//!
//! ```json
//! {
//!   "scene": { "tool": "none", "decoy": false, ... },
//!   "n_actions": 100,
//!   "action_scale": 0.05,
//!   "selfrec": { "k_mi": 3, "noise_variance": 1.6, "top_k": 15, "stages": 2, ... },
//!   "servo": { "eta": 0.2, "max_steps": 150, "success_radius": 5.0, ... },
//!   "tasks": { "n_goals": 9, "goal_distance_cm": 15.0, ... },
//!   "source_scene": { "base_offset": [-4.0, 5.0, 0.0], "base_yaw": 0.25, ... },
//!   "seeds": [0],
//!   "out": "out",
//!   "workers": 1,
//!   "bench": { "stages": [1, 2], "noise_variance": [0.0, 0.4, 0.8, 1.6], ... }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::selfrec::SelfRecConfig;
use crate::servo::tasks::TaskConfig;
use crate::servo::ServoConfig;
use crate::sim::{SceneSpec, DEFAULT_ACTION_SCALE};
use crate::{Error, Result};

/// Axes of the benchmark matrix. Each axis is swept on its own while the
/// other settings stay at the run configuration's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchMatrix {
    pub stages: Vec<u8>,
    pub noise_variance: Vec<f64>,
    pub top_k: Vec<usize>,
    pub n_actions: Vec<usize>,
    pub outliers: Vec<bool>,
    /// Tool for the noise-variance cells; tip distance is what the sweep
    /// is meant to show.
    pub noise_sweep_tool: Option<crate::sim::ToolKind>,
    /// Tracker drop probability for the top-k cells.
    pub top_k_drop_prob: Option<f64>,
}

impl Default for BenchMatrix {
    fn default() -> Self {
        Self {
            stages: vec![1, 2],
            noise_variance: vec![0.0, 0.4, 0.8, 1.6],
            top_k: vec![1, 15],
            n_actions: vec![25, 50, 100],
            outliers: vec![true, false],
            noise_sweep_tool: Some(crate::sim::ToolKind::Marker),
            top_k_drop_prob: Some(0.004),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneSpec,
    pub n_actions: usize,
    pub action_scale: f64,
    pub selfrec: SelfRecConfig,
    pub servo: ServoConfig,
    pub tasks: TaskConfig,
    /// The arm whose drawing is imitated when no source file is given.
    pub source_scene: SceneSpec,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub workers: usize,
    pub bench: BenchMatrix,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneSpec::default(),
            n_actions: 100,
            action_scale: DEFAULT_ACTION_SCALE,
            selfrec: SelfRecConfig::default(),
            servo: ServoConfig::default(),
            tasks: TaskConfig::default(),
            source_scene: SceneSpec {
                base_offset: [-4.0, 5.0, 0.0],
                base_yaw: 0.25,
                ..SceneSpec::default()
            },
            seeds: vec![0],
            out: PathBuf::from("out"),
            workers: 1,
            bench: BenchMatrix::default(),
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub n_actions: Option<usize>,
    pub noise_variance: Option<f64>,
    pub top_k: Option<usize>,
    pub stages: Option<u8>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = &o.seeds {
            self.seeds = s.clone();
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        if let Some(n) = o.n_actions {
            self.n_actions = n;
        }
        if let Some(v) = o.noise_variance {
            self.selfrec.noise_variance = v;
        }
        if let Some(k) = o.top_k {
            self.selfrec.top_k = k;
        }
        if let Some(s) = o.stages {
            self.selfrec.stages = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if self.n_actions == 0 {
            return Err(Error::InvalidConfig("n_actions must be positive".into()));
        }
        if !(self.action_scale > 0.0) || !self.action_scale.is_finite() {
            return Err(Error::InvalidConfig("action_scale must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        self.selfrec.validate()?;
        self.servo.validate()?;
        self.scene.build(self.seeds[0])?;
        self.source_scene.build(self.seeds[0])?;
        if self.bench.n_actions.contains(&0) {
            return Err(Error::InvalidConfig("bench n_actions must be positive".into()));
        }
        for &s in &self.bench.stages {
            SelfRecConfig {
                stages: s,
                ..self.selfrec.clone()
            }
            .validate()?;
        }
        for &v in &self.bench.noise_variance {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig("bench noise variances must be finite and non-negative".into()));
            }
        }
        if self.bench.top_k.contains(&0) {
            return Err(Error::InvalidConfig("bench top_k must be positive".into()));
        }
        Ok(())
    }
}
