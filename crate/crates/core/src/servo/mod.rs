//! Uncalibrated visual servoing of the MRCP.
//!
//! The image Jacobian is never modelled: it is probed with small unit
//! actions, then tracked online with Broyden rank-1 updates and a ridge refit
//! over the last few steps. Control is a damped pseudo-inverse step towards
//! the goal.

mod control;
pub mod goals;
mod jacobian;
mod plant;
pub mod tasks;

pub use control::{
    follow_trajectory, imitate, init_jacobian, initial_estimate, mrcp, mrcp_delta, reach, reach_traced, servo_step,
    Goal, ImitationOutcome, ReachOutcome, ReachStatus, ServoConfig, Trace, TraceRecord,
};
pub use jacobian::JacobianEstimate;
pub use plant::{LinearPlant, Plant, SimPlant};
