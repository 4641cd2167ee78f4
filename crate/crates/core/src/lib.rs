//! Morphology-agnostic visual control.
//!
//! The crate discovers which tracked points in a camera view belong to a
//! robot by measuring how much information their motion carries about the
//! control inputs ([`selfrec`]), then servos the most responsive point to
//! image-space goals with an online Jacobian estimate ([`servo`]). A small
//! kinematic arm simulator ([`sim`]) stands in for the robot, camera and
//! point tracker so the whole loop can be exercised deterministically.
//!
//! Start with the runnable programs under `examples/`.

pub mod cli;
pub mod error;
pub mod mi;
pub mod rng;
pub mod selfrec;
pub mod servo;
pub mod sim;

pub use error::{Error, Result};
