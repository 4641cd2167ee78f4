//! Goal sets for the reaching and drawing tasks.

use nalgebra::Point3;

use super::control::Goal;
use super::plant::SimPlant;
use crate::{Error, Result};

/// Joint-space directions tried in order (yaw, shoulder, elbow, wrist) until
/// enough goals are found.
const DIRECTIONS: [[f64; 4]; 22] = [
    [1.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, -1.0, 1.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [-1.0, 1.0, 0.0, 0.0],
    [1.0, -1.0, 1.0, 0.0],
    [-1.0, -1.0, 1.0, 0.0],
    [0.0, 0.0, 1.0, 1.0],
    [0.0, 0.5, -1.0, 0.0],
    [0.5, 0.0, -1.0, 0.5],
    [-0.5, 0.0, -1.0, 0.5],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
    [1.0, 0.0, 1.0, 0.0],
    [-1.0, 0.0, 1.0, 0.0],
    [1.0, 0.0, -1.0, 0.0],
    [-1.0, 0.0, -1.0, 0.0],
    [0.5, 1.0, -1.0, 0.0],
    [-0.5, 1.0, -1.0, 0.0],
    [0.0, 1.0, 1.0, 1.0],
];

const EDGE_MARGIN_PX: f64 = 30.0;

fn control_point_at(plant: &SimPlant, arm_joints: &[f64]) -> Point3<f64> {
    let cfg = plant.world().config();
    let mut joints = plant.world().joints().to_vec();
    joints[cfg.controlled_arm()] = arm_joints.to_vec();
    let frames = cfg.all_frames(&joints);
    let sum = cfg
        .particles
        .iter()
        .map(|b| cfg.particle_world(&frames, &b.host).coords)
        .sum::<nalgebra::Vector3<f64>>();
    Point3::from(sum / cfg.particles.len() as f64)
}

/// Up to `count` goals obtained by moving the controlled arm along fixed
/// joint-space directions until its control point has travelled
/// `distance_cm`, then projecting that point. Goals are therefore reachable by
/// construction. Directions that hit a joint limit or leave the view are
/// skipped.
pub fn reaching_goals(plant: &SimPlant, count: usize, distance_cm: f64) -> Result<Vec<Goal>> {
    let cfg = plant.world().config();
    let arm = &cfg.arms[cfg.controlled_arm()].model;
    let q0 = plant.world().controlled_joints().to_vec();
    let p0 = control_point_at(plant, &q0);
    let cam = &cfg.camera;
    let mut goals = Vec::with_capacity(count);
    for dir in DIRECTIONS.iter().filter(|d| d.len() == arm.dof()) {
        if goals.len() == count {
            break;
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let at = |s: f64| -> Option<Vec<f64>> {
            let q: Vec<f64> = q0.iter().zip(dir).map(|(q, d)| q + s * d / norm).collect();
            let within = q
                .iter()
                .zip(&arm.joint_limits)
                .all(|(v, l)| *v >= l[0] && *v <= l[1]);
            within.then_some(q)
        };
        let dist = |s: f64| at(s).map(|q| (control_point_at(plant, &q) - p0).norm());
        // Bracket the first crossing of the target distance.
        let mut lo = 0.0;
        let mut hi = None;
        let mut s = 0.05;
        while s <= 2.5 {
            match dist(s) {
                Some(d) if d >= distance_cm => {
                    hi = Some(s);
                    break;
                }
                Some(_) => lo = s,
                None => break,
            }
            s += 0.05;
        }
        let Some(mut hi) = hi else { continue };
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if dist(mid).is_some_and(|d| d >= distance_cm) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let q = at(hi).expect("bracketed inside limits");
        let Some(img) = cam.project_ideal(&control_point_at(plant, &q)) else {
            continue;
        };
        let inside = img[0] >= EDGE_MARGIN_PX
            && img[0] <= cam.image_size[0] - EDGE_MARGIN_PX
            && img[1] >= EDGE_MARGIN_PX
            && img[1] <= cam.image_size[1] - EDGE_MARGIN_PX;
        if inside {
            let s = plant.world().shake();
            goals.push(Goal::new([img[0] + s[0], img[1] + s[1], img[2]]));
        }
    }
    if goals.is_empty() {
        return Err(Error::Domain("no reachable goal found".into()));
    }
    Ok(goals)
}

/// A "C": `n` waypoints on a circular arc of `radius_px` that opens to the
/// right, starting next to `start` and sweeping from 60° to 300°. Depth is
/// held at the start depth.
pub fn c_arc(start: [f64; 3], radius_px: f64, n: usize) -> Vec<Goal> {
    let (a0, a1) = (60f64.to_radians(), 300f64.to_radians());
    let centre = [start[0] - radius_px * a0.cos(), start[1] + radius_px * a0.sin()];
    (1..=n)
        .map(|i| {
            let a = a0 + (a1 - a0) * i as f64 / n as f64;
            Goal::new([centre[0] + radius_px * a.cos(), centre[1] - radius_px * a.sin(), start[2]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_exploration, SceneSpec, SimWorld};

    #[test]
    fn arc_shape() {
        let goals = c_arc([100.0, 100.0, 40.0], 40.0, 12);
        assert_eq!(goals.len(), 12);
        let centre = [100.0 - 20.0, 100.0 + 40.0 * 60f64.to_radians().sin()];
        for g in &goals {
            let r = ((g.position[0] - centre[0]).powi(2) + (g.position[1] - centre[1]).powi(2)).sqrt();
            assert!((r - 40.0).abs() < 1e-9);
            assert_eq!(g.position[2], 40.0);
        }
        // Ends at the mirror image of the start, below it.
        let last = goals[11].position;
        assert!((last[0] - 100.0).abs() < 1e-9);
        assert!(last[1] > 100.0);
        // Passes through the leftmost point.
        assert!(goals.iter().any(|g| (g.position[0] - (centre[0] - 40.0)).abs() < 1e-9));
    }

    #[test]
    fn reaching_goals_are_at_distance() {
        let mut w = SimWorld::new(SceneSpec::noiseless().build(1).unwrap()).unwrap();
        let log = run_exploration(&mut w, 10, 0.05).unwrap();
        let tip: Vec<_> = log
            .bindings()
            .iter()
            .filter(|b| b.on_body(0, 3))
            .cloned()
            .collect();
        let plant = SimPlant::from_log(&log, tip).unwrap();
        let goals = reaching_goals(&plant, 9, 15.0).unwrap();
        assert_eq!(goals.len(), 9);
        let p0 = plant.control_point_world();
        for g in &goals {
            let w = plant.world().config().camera.backproject(&g.position);
            assert!(((w - p0).norm() - 15.0).abs() < 1e-6);
        }
    }
}
