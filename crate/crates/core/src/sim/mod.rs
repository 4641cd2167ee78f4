//! Kinematic stand-in for the robot, camera and point tracker.
//!
//! A [`SimWorld`] owns the joint state of one controlled arm and any number
//! of decoys, a set of [`ParticleBinding`]s (points rigidly attached to an arm
//! body or fixed in the backdrop), an RGBD [`CameraModel`] and a
//! [`TrackerModel`] that adds jitter and permanently drops tracks. All noise
//! is drawn from seeded streams, so a `(config, seed)` pair always produces
//! the same [`ExplorationLog`].
//!
//! Units: world coordinates and depth are in cm, image coordinates in px,
//! actions are joint-velocity commands in rad per step.

pub mod arm;
pub mod camera;
pub mod explore;
pub mod io;
pub mod scene;
pub mod world;

pub use arm::{ArmModel, BrokenJoint, ToolExtension};
pub use camera::CameraModel;
pub use explore::{explore_scene, run_exploration, ActionSequence, ExplorationLog, FrameState, GroundTruth, ParticleTrack};
pub use io::{read_log, write_log};
pub use scene::{SceneSpec, ToolKind};
pub use world::{ArmSlot, Backdrop, Host, ParticleBinding, SimWorld, TrackerModel, WorldConfig};

/// Default half-width of exploration actions (rad).
pub const DEFAULT_ACTION_SCALE: f64 = 0.05;
