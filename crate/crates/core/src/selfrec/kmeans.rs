//! Seeded k-means++ / Lloyd clustering of track position histories.

use rand::Rng;

use crate::rng::{self, tags};
use crate::sim::ParticleTrack;
use crate::{Error, Result};

const MAX_ITERS: usize = 50;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding. Returns one label per point.
/// Identical points may leave some centroids duplicated and empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::Domain(format!("cannot form {k} clusters from {} points", points.len())));
    }
    let mut r = rng::stream(seed, tags::KMEANS);
    let mut centroids: Vec<Vec<f64>> = vec![points[r.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = r.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            0
        };
        centroids.push(points[pick].clone());
    }

    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    for _ in 0..MAX_ITERS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(labels)
}

/// Groups full-duration tracks into rigid-link candidates. Each track's
/// feature is its concatenated (x, y) history, z-scored per time slice across
/// tracks.
pub fn cluster_links(tracks: &[ParticleTrack], n_clusters: usize, seed: u64) -> Result<Vec<usize>> {
    let histories: Vec<Vec<[f64; 3]>> = tracks
        .iter()
        .enumerate()
        .map(|(i, t)| t.full_positions().ok_or(Error::IncompleteTrack(i)))
        .collect::<Result<_>>()?;
    if n_clusters > tracks.len() {
        return Err(Error::Domain(format!(
            "{n_clusters} clusters requested for {} tracks",
            tracks.len()
        )));
    }
    let mut features: Vec<Vec<f64>> = histories
        .iter()
        .map(|h| h.iter().flat_map(|p| [p[0], p[1]]).collect())
        .collect();
    let dim = features.first().map(|f| f.len()).unwrap_or(0);
    let n = features.len() as f64;
    for c in 0..dim {
        let mean = features.iter().map(|f| f[c]).sum::<f64>() / n;
        let sd = (features.iter().map(|f| (f[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for f in &mut features {
            f[c] = if sd > 1e-12 { (f[c] - mean) / sd } else { 0.0 };
        }
    }
    kmeans(&features, n_clusters, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_obvious_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![100.0 + i as f64 * 0.01, 5.0]);
        }
        let labels = kmeans(&pts, 2, 3).unwrap();
        for i in 0..10 {
            assert_eq!(labels[2 * i], labels[0]);
            assert_eq!(labels[2 * i + 1], labels[1]);
        }
        assert_ne!(labels[0], labels[1]);
    }

    #[test]
    fn identical_tracks_share_a_cluster() {
        let t = ParticleTrack {
            positions: (0..8).map(|i| Some([i as f64, 1.0, 2.0])).collect(),
        };
        let tracks = vec![t; 6];
        let labels = cluster_links(&tracks, 4, 0).unwrap();
        assert!(labels.iter().all(|&l| l == labels[0]));
    }

    #[test]
    fn seeded_labels_are_stable() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 5) as f64]).collect();
        assert_eq!(kmeans(&pts, 4, 9).unwrap(), kmeans(&pts, 4, 9).unwrap());
    }

    #[test]
    fn too_many_clusters_rejected() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(kmeans(&pts, 3, 0).is_err());
    }
}
