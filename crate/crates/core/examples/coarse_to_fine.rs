//! One-stage versus coarse-to-fine identification, and the effect of the
//! injected noise variance, on an arm holding a marker.

use selfservo::selfrec::{eval, identify, noise_sweep, SelfRecConfig};
use selfservo::sim::{explore_scene, SceneSpec, ToolKind, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let spec = SceneSpec::default().with_tool(ToolKind::Marker);
    let variances = [0.0, 0.4, 0.8, 1.6, 1e6];
    let mut sweep_cm = vec![0.0; variances.len()];
    let (mut one, mut two) = (0.0, 0.0);
    let seeds = 0..5u64;
    for seed in seeds.clone() {
        let log = explore_scene(&spec, seed, 100, DEFAULT_ACTION_SCALE)?;
        let cfg = SelfRecConfig { seed, ..SelfRecConfig::default() };
        let coarse = identify(&log, &log.actions, &SelfRecConfig { stages: 1, ..cfg.clone() })?;
        let fine = identify(&log, &log.actions, &cfg)?;
        one += eval::id_error_px(&log, coarse.mrcp.position, 0);
        two += eval::id_error_px(&log, fine.mrcp.position, 0);
        for (k, r) in noise_sweep(&log, &log.actions, &variances, &cfg)?.iter().enumerate() {
            sweep_cm[k] += eval::id_error_cm(&log, r.mrcp.position, 0);
        }
    }
    let n = seeds.count() as f64;
    println!("mean tip error: 1 stage {:.1} px, 2 stages {:.1} px", one / n, two / n);
    for (v, e) in variances.iter().zip(&sweep_cm) {
        println!("noise variance {v:>9}: tip distance {:.2} cm", e / n);
    }
    Ok(())
}
