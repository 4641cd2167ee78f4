use crate::sim::ParticleTrack;

/// Sum of the x and y position variances over the frames where the track is
/// alive, in px².
pub fn position_variance(track: &ParticleTrack) -> f64 {
    let pts: Vec<[f64; 3]> = track.positions.iter().flatten().copied().collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    (0..2)
        .map(|c| {
            let mean = pts.iter().map(|p| p[c]).sum::<f64>() / n;
            pts.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / n
        })
        .sum()
}

/// Indices of the tracks that survive the variance filter. Tracks whose 2D
/// position variance is below `threshold` are discarded; a zero threshold
/// keeps everything.
pub fn remove_outliers(tracks: &[ParticleTrack], threshold: f64) -> Vec<usize> {
    if threshold <= 0.0 {
        return (0..tracks.len()).collect();
    }
    (0..tracks.len())
        .filter(|&i| position_variance(&tracks[i]) >= threshold)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_track_removed_moving_kept() {
        let still = ParticleTrack {
            positions: (0..20).map(|i| Some([10.0 + 0.1 * (i % 2) as f64, 5.0, 3.0])).collect(),
        };
        let moving = ParticleTrack {
            positions: (0..20).map(|i| Some([10.0 + i as f64, 5.0, 3.0])).collect(),
        };
        let tracks = vec![still, moving];
        assert_eq!(remove_outliers(&tracks, 0.5), vec![1]);
        assert_eq!(remove_outliers(&tracks, 0.0), vec![0, 1]);
    }

    #[test]
    fn variance_matches_hand_computation() {
        let t = ParticleTrack {
            positions: vec![Some([0.0, 0.0, 1.0]), Some([2.0, 4.0, 1.0]), None],
        };
        // var x = 1, var y = 4
        assert!((position_variance(&t) - 5.0).abs() < 1e-12);
    }
}
