//! The reaching suite: nine goals 15 cm away, for each tool the arm can hold.

use selfservo::selfrec::{identify, SelfRecConfig};
use selfservo::servo::tasks::{reaching_suite, ServoSummary, TaskConfig};
use selfservo::servo::ServoConfig;
use selfservo::sim::{explore_scene, SceneSpec, ToolKind, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let seed = 0;
    for tool in ToolKind::REACHING_SET {
        let log = explore_scene(&SceneSpec::default().with_tool(tool), seed, 100, DEFAULT_ACTION_SCALE)?;
        let report = identify(&log, &log.actions, &SelfRecConfig { seed, ..SelfRecConfig::default() })?;
        let result = reaching_suite(&log, &report, None, &TaskConfig::default(), &ServoConfig::default())?;
        let s = ServoSummary::from_outcomes(tool.name(), &result.outcomes);
        let steps: usize = result.outcomes.iter().map(|o| o.steps).sum();
        println!(
            "{:<8} median {:.2} cm, ETR {:.0}%, {:.1} steps per goal",
            s.task,
            s.median_error_cm,
            s.etr_percent,
            steps as f64 / s.runs as f64
        );
    }
    Ok(())
}
