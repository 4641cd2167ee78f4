use serde::{Deserialize, Serialize};

use super::mean_position;
use crate::sim::ParticleTrack;
use crate::{Error, Result};

/// Control-agnostic reference: the points that travelled furthest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxMotion {
    pub members: Vec<usize>,
    /// Mean final `(x, y, depth)` of the members.
    pub position: [f64; 3],
}

/// Total image-plane path length of a track (px).
pub fn path_length(track: &ParticleTrack) -> f64 {
    let pts: Vec<[f64; 3]> = track.positions.iter().flatten().copied().collect();
    pts.windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .sum()
}

/// Picks the `top_k` full-duration tracks with the longest image-plane path.
pub fn max_motion_baseline(tracks: &[ParticleTrack], top_k: usize) -> Result<MaxMotion> {
    let full: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].is_full()).collect();
    if top_k == 0 || full.len() < top_k {
        return Err(Error::TooFewTracks {
            available: full.len(),
            needed: top_k.max(1),
        });
    }
    let lengths: Vec<f64> = tracks.iter().map(path_length).collect();
    let mut ranked = full;
    ranked.sort_by(|&a, &b| lengths[b].total_cmp(&lengths[a]).then(a.cmp(&b)));
    ranked.truncate(top_k);
    let position = mean_position(ranked.iter().map(|&i| tracks[i].last().expect("full track")));
    Ok(MaxMotion {
        members: ranked,
        position,
    })
}
