//! Figures drawn from logs, reports and traces.

use super::svg::{self, Svg};
use crate::selfrec::ResponsivenessReport;
use crate::servo::Trace;
use crate::sim::{ExplorationLog, ParticleTrack};
use crate::Result;

/// Tracks the report scored: the log's own, or replayed fine-grid points.
pub fn candidate_tracks(log: &ExplorationLog, report: &ResponsivenessReport) -> Result<Vec<ParticleTrack>> {
    if report.bindings.as_slice() == log.bindings() {
        return Ok(log.tracks.clone());
    }
    report.bindings.iter().map(|b| log.replay_point(b)).collect()
}

fn xy(track: &ParticleTrack) -> Vec<[f64; 2]> {
    track.positions.iter().flatten().map(|p| [p[0], p[1]]).collect()
}

/// Camera-view overlay: seed tracks in grey, candidates coloured by score,
/// MRCP members in green, the MRCP in red and the true end-effector as a
/// black ring.
pub fn identify_overlay(log: &ExplorationLog, report: &ResponsivenessReport, arm: usize) -> Result<String> {
    let [w, h] = log.config.camera.image_size;
    let mut doc = Svg::new(w, h);
    doc.rect(0.0, 0.0, w, h, "white");
    for t in &log.tracks {
        doc.polyline(&xy(t), "lightgray", 1.0, 0.8);
    }
    let tracks = candidate_tracks(log, report)?;
    let top = report.max_score().max(1e-12);
    for &i in report.ranking.iter().rev() {
        doc.polyline(&xy(&tracks[i]), &svg::ramp(report.scores[i] / top), 1.0, 0.7);
    }
    for &i in &report.mrcp.members {
        if let Some(p) = tracks[i].last() {
            doc.circle(p[0], p[1], 2.5, "limegreen", "none");
        }
    }
    let m = report.mrcp.position;
    doc.circle(m[0], m[1], 4.0, "red", "black");
    let gt = log.end_effector(arm, log.frames.len() - 1).image;
    let shake = crate::selfrec::eval::final_shake(log);
    doc.circle(gt[0] + shake[0], gt[1] + shake[1], 6.0, "none", "black");
    let flag = if report.low_confidence { " (low confidence)" } else { "" };
    doc.text(8.0, 16.0, 12.0, "start", &format!("MRCP ({:.1}, {:.1}){flag}", m[0], m[1]));
    Ok(doc.finish())
}

/// Image-space distance to the current goal over time.
pub fn trace_chart(trace: &Trace) -> String {
    let pts: Vec<[f64; 2]> = trace.records.iter().map(|r| [r.t as f64, r.distance_px]).collect();
    svg::line_chart("servo trace", "step", "distance (px)", &[("distance".into(), pts)])
}

/// Goals and measured MRCP path in the image plane.
pub fn path_chart(goals: &[[f64; 3]], trace: &Trace) -> String {
    let path: Vec<[f64; 2]> = trace.records.iter().map(|r| [r.s_star[0], -r.s_star[1]]).collect();
    let targets: Vec<[f64; 2]> = goals.iter().map(|g| [g[0], -g[1]]).collect();
    svg::line_chart("MRCP path (y up)", "x (px)", "-y (px)", &[("path".into(), path), ("goals".into(), targets)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfrec::{identify, SelfRecConfig};
    use crate::sim::{explore_scene, SceneSpec};

    #[test]
    fn overlay_marks_mrcp_and_members() {
        let log = explore_scene(&SceneSpec::noiseless(), 2, 40, 0.05).unwrap();
        let cfg = SelfRecConfig {
            stages: 1,
            ..SelfRecConfig::default()
        };
        let report = identify(&log, &log.actions, &cfg).unwrap();
        let doc = identify_overlay(&log, &report, 0).unwrap();
        assert!(doc.contains("fill=\"red\""));
        assert_eq!(doc.matches("limegreen").count(), cfg.top_k);
    }
}
