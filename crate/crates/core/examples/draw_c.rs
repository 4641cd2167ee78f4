//! Drawing a "C": twelve waypoints on an arc, each with its share of the
//! step budget. Writes the trace next to the other example outputs.

use selfservo::selfrec::{identify, SelfRecConfig};
use selfservo::servo::tasks::{draw, TaskConfig};
use selfservo::servo::ServoConfig;
use selfservo::sim::{explore_scene, SceneSpec, ToolKind, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let seed = 2;
    let log = explore_scene(&SceneSpec::default().with_tool(ToolKind::Marker), seed, 100, DEFAULT_ACTION_SCALE)?;
    let report = identify(&log, &log.actions, &SelfRecConfig { seed, ..SelfRecConfig::default() })?;
    let result = draw(&log, &report, None, &TaskConfig::default(), &ServoConfig::default())?;
    for (g, o) in result.goals.iter().zip(&result.outcomes) {
        println!(
            "waypoint ({:6.1}, {:6.1}): {:?} in {:>2} steps, {:.2} px off",
            g.position[0], g.position[1], o.status, o.steps, o.error_px
        );
    }
    let hit = result.outcomes.iter().filter(|o| o.early_terminated).count();
    println!("{hit}/{} waypoints within tolerance", result.outcomes.len());

    let dir = std::env::temp_dir().join("selfservo_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("draw_c_trace.jsonl");
    result.trace.write_jsonl(std::fs::File::create(&path)?)?;
    println!("trace -> {}", path.display());
    Ok(())
}
