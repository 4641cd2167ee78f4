//! Robot-to-robot imitation: an arm on a shifted, rotated base draws a "C";
//! a second arm reproduces the recorded path from its own start.

use selfservo::selfrec::{identify, SelfRecConfig};
use selfservo::servo::tasks::{draw, imitation, recorded_trajectory, TaskConfig};
use selfservo::servo::ServoConfig;
use selfservo::sim::{explore_scene, SceneSpec, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let (tasks, servo) = (TaskConfig::default(), ServoConfig::default());
    let source_spec = SceneSpec { base_offset: [-4.0, 5.0, 0.0], base_yaw: 0.25, ..SceneSpec::default() };
    let slog = explore_scene(&source_spec, 4, 100, DEFAULT_ACTION_SCALE)?;
    let srep = identify(&slog, &slog.actions, &SelfRecConfig { seed: 4, ..SelfRecConfig::default() })?;
    let source = recorded_trajectory(&draw(&slog, &srep, None, &tasks, &servo)?);

    let tlog = explore_scene(&SceneSpec::default(), 9, 100, DEFAULT_ACTION_SCALE)?;
    let trep = identify(&tlog, &tlog.actions, &SelfRecConfig { seed: 9, ..SelfRecConfig::default() })?;
    let result = imitation(&source, &tlog, &trep, &tasks, &servo)?;

    let start = result.start.expect("imitation records its start");
    let mut worst: f64 = 0.0;
    for (s, o) in source.iter().zip(&result.outcomes) {
        let p = o.final_position.expect("tracking held");
        let d = ((p[0] - start[0]) - (s[0] - source[0][0])).hypot((p[1] - start[1]) - (s[1] - source[0][1]));
        worst = worst.max(d);
    }
    let hit = result.outcomes.iter().filter(|o| o.early_terminated).count();
    println!("{hit}/{} waypoints reached; largest deviation from the source shape {worst:.2} px", result.outcomes.len());
    Ok(())
}
