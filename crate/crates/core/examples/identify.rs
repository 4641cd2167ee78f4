//! Self-recognition on one noisy log: ranks tracks by responsiveness and
//! compares the MRCP with the simulator's ground truth.

use selfservo::selfrec::{eval, identify, SelfRecConfig};
use selfservo::sim::{explore_scene, Host, SceneSpec, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let seed = 5;
    let log = explore_scene(&SceneSpec::default(), seed, 100, DEFAULT_ACTION_SCALE)?;
    let report = identify(&log, &log.actions, &SelfRecConfig { seed, ..SelfRecConfig::default() })?;

    println!("top tracks:");
    for &i in report.ranking.iter().take(5) {
        let host = match report.bindings[i].host {
            Host::Link { arm, body, .. } => format!("arm {arm} body {body}"),
            Host::Background { .. } => "background".into(),
        };
        println!("  #{i:<4} {:.3} nats  {host}", report.scores[i]);
    }
    let p = report.mrcp.position;
    println!("MRCP ({:.1}, {:.1}) depth {:.1}, low confidence: {}", p[0], p[1], p[2], report.low_confidence);
    println!(
        "error to end-effector: {:.2} px, {:.2} cm; in end-effector region: {}",
        eval::id_error_px(&log, p, 0),
        eval::id_error_cm(&log, p, 0),
        eval::region_success(&log, p, 0, eval::REGION_MARGIN_CM)
    );
    println!("body set: {} of {} candidates above delta", report.body.len(), report.scores.len());
    Ok(())
}
