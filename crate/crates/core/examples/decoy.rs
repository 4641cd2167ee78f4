//! Two arms in view, only one commanded. Scoring against either arm's action
//! sequence finds that arm; the max-motion baseline ignores the actions.

use selfservo::selfrec::{eval, identify, max_motion_baseline, SelfRecConfig};
use selfservo::sim::{explore_scene, SceneSpec, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let spec = SceneSpec { decoy: true, ..SceneSpec::default() };
    for seed in 0..3u64 {
        let log = explore_scene(&spec, seed, 100, DEFAULT_ACTION_SCALE)?;
        let cfg = SelfRecConfig { seed, ..SelfRecConfig::default() };
        for arm in [0, 1] {
            let actions = log.actions_of(arm).expect("both arms are logged");
            let r = identify(&log, actions, &cfg)?;
            println!(
                "seed {seed}: actions of arm {arm} -> MRCP on arm 0: {}, on arm 1: {} ({:.1} px from arm {arm}'s tip)",
                eval::members_on_arm(&r, 0),
                eval::members_on_arm(&r, 1),
                eval::id_error_px(&log, r.mrcp.position, arm)
            );
        }
        let mm = max_motion_baseline(&log.tracks, cfg.top_k)?;
        let decoy_members = mm.members.iter().filter(|&&i| log.bindings()[i].on_arm(1)).count();
        println!("seed {seed}: max-motion picks {decoy_members}/{} points on the faster decoy arm", mm.members.len());
    }
    Ok(())
}
