//! Alternatives to responsiveness ranking on the same log: k-means over track
//! histories and the variance filter that drops near-static tracks.

use selfservo::selfrec::{cluster_links, position_variance, remove_outliers};
use selfservo::sim::{explore_scene, Host, SceneSpec, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let log = explore_scene(&SceneSpec::default(), 1, 100, DEFAULT_ACTION_SCALE)?;
    let full: Vec<usize> = (0..log.tracks.len()).filter(|&i| log.tracks[i].is_full()).collect();
    let tracks: Vec<_> = full.iter().map(|&i| log.tracks[i].clone()).collect();

    let k = 6;
    let labels = cluster_links(&tracks, k, 1)?;
    for c in 0..k {
        let mut bodies = Vec::new();
        for (j, &l) in labels.iter().enumerate() {
            if l == c {
                bodies.push(match log.bindings()[full[j]].host {
                    Host::Link { body, .. } => format!("b{body}"),
                    Host::Background { .. } => "bg".into(),
                });
            }
        }
        bodies.sort();
        bodies.dedup();
        println!("cluster {c}: {}", bodies.join(" "));
    }

    let kept = remove_outliers(&log.tracks, 0.6);
    let dropped: Vec<usize> = (0..log.tracks.len()).filter(|i| !kept.contains(i)).collect();
    let on_arm = dropped.iter().filter(|&&i| log.body_mask[i]).count();
    let largest = dropped.iter().map(|&i| position_variance(&log.tracks[i])).fold(0.0, f64::max);
    println!(
        "variance filter keeps {} of {} tracks; dropped {} ({on_arm} on the arm), largest dropped variance {largest:.3} px^2",
        kept.len(),
        log.tracks.len(),
        dropped.len()
    );
    Ok(())
}
