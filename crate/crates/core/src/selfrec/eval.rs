//! Ground-truth scoring of identification results against a simulated log.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::ResponsivenessReport;
use crate::sim::{ExplorationLog, ParticleBinding};

/// Camera offset at the final frame, which observed positions include.
pub fn final_shake(log: &ExplorationLog) -> [f64; 2] {
    log.frames.last().map(|f| f.shake).unwrap_or([0.0, 0.0])
}

/// Image-plane distance (px) between an observed position at the final frame
/// and the true end-effector of `arm`.
pub fn id_error_px(log: &ExplorationLog, position: [f64; 3], arm: usize) -> f64 {
    let gt = log.end_effector(arm, log.frames.len() - 1).image;
    let s = final_shake(log);
    ((position[0] - gt[0] - s[0]).powi(2) + (position[1] - gt[1] - s[1]).powi(2)).sqrt()
}

fn to_world(log: &ExplorationLog, position: [f64; 3]) -> Point3<f64> {
    let s = final_shake(log);
    log.config
        .camera
        .backproject(&[position[0] - s[0], position[1] - s[1], position[2]])
}

/// Euclidean distance (cm) between a back-projected final-frame position and
/// the true end-effector of `arm`.
pub fn id_error_cm(log: &ExplorationLog, position: [f64; 3], arm: usize) -> f64 {
    let gt = log.end_effector(arm, log.frames.len() - 1).world;
    (to_world(log, position) - Point3::from(gt)).norm()
}

/// Distance (cm) from a back-projected final-frame position to the surface of
/// the end-effector region of `arm` (last link plus tool); zero inside.
pub fn region_distance_cm(log: &ExplorationLog, position: [f64; 3], arm: usize) -> f64 {
    let p = to_world(log, position);
    let model = &log.config.arms[arm].model;
    let frames = model.body_frames(&log.frames[log.frames.len() - 1].joints[arm]);
    model
        .end_region()
        .into_iter()
        .map(|body| {
            let (a, b) = model.body_segment(&frames, body);
            let ab = b - a;
            let u = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            ((p - (a + ab * u)).norm() - model.body_radius(body)).max(0.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Slack (cm) allowed around the end-effector region when scoring success.
pub const REGION_MARGIN_CM: f64 = 0.5;

pub fn region_success(log: &ExplorationLog, position: [f64; 3], arm: usize, margin_cm: f64) -> bool {
    region_distance_cm(log, position, arm) <= margin_cm
}

/// Whether every MRCP member is bound to `body` of `arm`.
pub fn members_on_body(report: &ResponsivenessReport, arm: usize, body: usize) -> bool {
    report.mrcp.members.iter().all(|&i| report.bindings[i].on_body(arm, body))
}

pub fn members_on_arm(report: &ResponsivenessReport, arm: usize) -> bool {
    report.mrcp.members.iter().all(|&i| report.bindings[i].on_arm(arm))
}

/// True label of each candidate: bound to `arm`.
pub fn body_labels(bindings: &[ParticleBinding], arm: usize) -> Vec<bool> {
    bindings.iter().map(|b| b.on_arm(arm)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision and recall of body classification as δ sweeps down through the
/// ranked scores. Tracks absent from the ranking are never predicted positive
/// but still count towards recall's denominator.
pub fn precision_recall(report: &ResponsivenessReport, labels: &[bool]) -> Vec<PrPoint> {
    let positives = labels.iter().filter(|&&l| l).count().max(1) as f64;
    let mut tp = 0usize;
    let mut out = Vec::with_capacity(report.ranking.len());
    for (rank, &i) in report.ranking.iter().enumerate() {
        tp += usize::from(labels[i]);
        out.push(PrPoint {
            threshold: report.scores[i],
            precision: tp as f64 / (rank + 1) as f64,
            recall: tp as f64 / positives,
        });
    }
    out
}

/// Area under the precision-recall step curve (average precision).
pub fn average_precision(report: &ResponsivenessReport, labels: &[bool]) -> f64 {
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for p in precision_recall(report, labels) {
        area += p.precision * (p.recall - prev_recall);
        prev_recall = p.recall;
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfrec::{Mrcp, SelfRecConfig};
    use crate::sim::{run_exploration, Host, SceneSpec, SimWorld};

    fn report(scores: Vec<f64>, ranking: Vec<usize>) -> ResponsivenessReport {
        let n = scores.len();
        ResponsivenessReport {
            scores,
            ranking,
            mrcp: Mrcp {
                members: vec![],
                position: [0.0; 3],
            },
            body: vec![],
            low_confidence: false,
            bindings: (0..n)
                .map(|i| ParticleBinding {
                    id: i as u64,
                    host: Host::Background { point: [0.0; 3] },
                })
                .collect(),
            config: SelfRecConfig::default(),
            seed: 0,
        }
    }

    #[test]
    fn average_precision_hand_example() {
        // Ranking: T F T, one positive never ranked.
        let r = report(vec![0.9, 0.5, 0.3, 0.0], vec![0, 1, 2]);
        let labels = [true, false, true, true];
        // AP = 1 * 1/3 + 2/3 * 1/3
        let ap = average_precision(&r, &labels);
        assert!((ap - (1.0 / 3.0 + 2.0 / 9.0)).abs() < 1e-12);
        let pr = precision_recall(&r, &labels);
        assert_eq!(pr.len(), 3);
        assert!((pr[2].recall - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_ranking_has_unit_ap() {
        let r = report(vec![0.9, 0.8, 0.1], vec![0, 1, 2]);
        assert!((average_precision(&r, &[true, true, false]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_tip_has_zero_error() {
        let mut w = SimWorld::new(SceneSpec::noiseless().build(2).unwrap()).unwrap();
        let log = run_exploration(&mut w, 10, 0.05).unwrap();
        let gt = log.end_effector(0, 10);
        assert!(id_error_px(&log, gt.image, 0) < 1e-9);
        assert!(id_error_cm(&log, gt.image, 0) < 1e-9);
        assert_eq!(region_distance_cm(&log, gt.image, 0), 0.0);
        let base = log.config.camera.project_ideal(&Point3::new(0.0, 0.0, 0.0)).unwrap();
        assert!(!region_success(&log, base, 0, 0.5));
    }
}
