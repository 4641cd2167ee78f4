//! Self-recognition: which tracked points belong to the robot, and where is
//! its most responsive control point (MRCP)?
//!
//! The responsiveness of a point is the mutual information between its
//! per-step displacement and the control input that caused it. Points whose
//! motion is independent of the controls (background, decoys, a broken link)
//! score near zero. Small Gaussian noise added to the displacements breaks
//! the tie between points on the same rigid body in favour of the ones that
//! move the most, which pushes the MRCP towards the tip.

mod baseline;
pub mod eval;
mod kmeans;
mod outliers;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use baseline::{max_motion_baseline, path_length, MaxMotion};
pub use kmeans::{cluster_links, kmeans};
pub use outliers::{position_variance, remove_outliers};

use crate::mi::{
    add_gaussian_noise, jitter_in_place, ksg_from_distances, pairwise_max_norm, SampleSet, X_JITTER_SALT, Y_JITTER_SALT,
};
use crate::rng::derive_seed;
use crate::sim::{ActionSequence, ExplorationLog, ParticleBinding, ParticleTrack};
use crate::{Error, Result};

/// Reports whose MRCP members score below this on average are flagged as
/// unreliable.
pub const LOW_CONFIDENCE_NATS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfRecConfig {
    /// Neighbour count of the MI estimator.
    pub k_mi: usize,
    /// Variance (px², applied in raw track units) of the tie-breaking noise.
    pub noise_variance: f64,
    /// Independent noise injections averaged per score.
    pub noise_draws: usize,
    /// Number of points averaged into the MRCP.
    pub top_k: usize,
    /// 1 = score the seed tracks only; 2 = coarse-to-fine.
    pub stages: u8,
    /// Coarse candidates that get a fine grid.
    pub coarse_keep: usize,
    /// Fine grid side length.
    pub grid: usize,
    pub grid_spacing: f64,
    /// Tracks whose 2D position variance (px²) is below this are discarded
    /// before scoring. Zero disables the filter.
    pub outlier_variance_threshold: f64,
    /// Body threshold δ (nats).
    pub delta: f64,
    pub seed: u64,
}

impl Default for SelfRecConfig {
    fn default() -> Self {
        Self {
            k_mi: 3,
            noise_variance: 1.6,
            noise_draws: 16,
            top_k: 15,
            stages: 2,
            coarse_keep: 5,
            grid: 15,
            grid_spacing: 2.0,
            outlier_variance_threshold: 0.6,
            delta: 0.2,
            seed: 0,
        }
    }
}

impl SelfRecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be >= 1".into()));
        }
        if !matches!(self.stages, 1 | 2) {
            return Err(Error::InvalidConfig("stages must be 1 or 2".into()));
        }
        if self.noise_draws == 0 {
            return Err(Error::InvalidConfig("noise_draws must be >= 1".into()));
        }
        if self.k_mi == 0 {
            return Err(Error::InvalidConfig("k_mi must be >= 1".into()));
        }
        if !(self.noise_variance >= 0.0) || !(self.outlier_variance_threshold >= 0.0) {
            return Err(Error::InvalidConfig("variances must be >= 0".into()));
        }
        if self.stages == 2 && (self.coarse_keep == 0 || self.grid == 0 || !(self.grid_spacing > 0.0)) {
            return Err(Error::InvalidConfig("fine stage needs coarse_keep, grid and spacing > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mrcp {
    pub members: Vec<usize>,
    /// Mean `(x, y, depth)` of the members at the final frame.
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsivenessReport {
    /// One score per candidate track (nats, clamped at 0). Tracks that were
    /// not eligible (incomplete or filtered out) score 0 and are not ranked.
    pub scores: Vec<f64>,
    /// Eligible track indices by descending score.
    pub ranking: Vec<usize>,
    pub mrcp: Mrcp,
    /// Eligible tracks scoring above δ.
    pub body: Vec<usize>,
    pub low_confidence: bool,
    /// What each candidate track was bound to.
    pub bindings: Vec<ParticleBinding>,
    pub config: SelfRecConfig,
    pub seed: u64,
}

impl ResponsivenessReport {
    pub fn max_score(&self) -> f64 {
        self.ranking.first().map(|&i| self.scores[i]).unwrap_or(0.0)
    }

    pub fn member_bindings(&self) -> Vec<ParticleBinding> {
        self.mrcp.members.iter().map(|&i| self.bindings[i].clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-step displacements `S(t+1) - S(t)` of a track that is alive at every
/// frame.
pub fn displacements(track: &ParticleTrack) -> Option<Vec<[f64; 3]>> {
    let pos = track.full_positions()?;
    Some(
        pos.windows(2)
            .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]])
            .collect(),
    )
}

fn standardize_columns(rows: &mut [Vec<f64>]) {
    let n = rows.len() as f64;
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    for c in 0..dim {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 1e-12 {
            for r in rows.iter_mut() {
                r[c] /= sd;
            }
        }
    }
}

/// Responsiveness of one track to an action sequence, in nats.
///
/// Noise of `config.noise_variance` is added to the raw displacements, then
/// every displacement and action coordinate is divided by its standard
/// deviation so that pixel, depth and command units weigh equally in the
/// max-norm neighbour search. The estimate is averaged over
/// `config.noise_draws` independent noise injections, the first seeded by
/// `noise_seed`.
pub fn responsiveness(
    track: &ParticleTrack,
    actions: &ActionSequence,
    config: &SelfRecConfig,
    noise_seed: u64,
) -> Result<f64> {
    if track.len() != actions.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: actions.len() + 1,
            got: track.len(),
        });
    }
    let ds = displacements(track).ok_or(Error::IncompleteTrack(0))?;
    // A point that never moves carries no information about the controls.
    if ds.iter().all(|d| *d == ds[0]) {
        return Ok(0.0);
    }
    if actions.len() <= config.k_mi {
        return Err(Error::InsufficientSamples {
            n: actions.len(),
            k: config.k_mi,
        });
    }
    let n = ds.len();
    let samples = SampleSet::from_rows(&ds, actions)?;
    let mut ys: Vec<Vec<f64>> = actions.clone();
    standardize_columns(&mut ys);
    let mut y_flat: Vec<f64> = ys.concat();
    jitter_in_place(&mut y_flat, Y_JITTER_SALT);
    let dy = pairwise_max_norm(&y_flat, samples.dy(), n);

    // Without injected noise every draw would be identical.
    let draws = if config.noise_variance > 0.0 { config.noise_draws } else { 1 };
    let mut total = 0.0;
    for draw in 0..draws {
        let seed = if draw == 0 { noise_seed } else { derive_seed(noise_seed, draw as u64) };
        let noisy = add_gaussian_noise(&samples, config.noise_variance, seed)?;
        let mut xs: Vec<Vec<f64>> = (0..n).map(|i| noisy.x(i).to_vec()).collect();
        standardize_columns(&mut xs);
        let mut x_flat: Vec<f64> = xs.concat();
        jitter_in_place(&mut x_flat, X_JITTER_SALT);
        let dx = pairwise_max_norm(&x_flat, 3, n);
        total += ksg_from_distances(&dx, &dy, n, config.k_mi);
    }
    let mi = total / draws as f64;
    Ok(mi.max(0.0))
}

/// Scores a set of candidate tracks and assembles the report.
pub fn score_tracks(
    tracks: &[ParticleTrack],
    bindings: &[ParticleBinding],
    actions: &ActionSequence,
    config: &SelfRecConfig,
) -> Result<ResponsivenessReport> {
    config.validate()?;
    if tracks.len() != bindings.len() {
        return Err(Error::DimensionMismatch {
            expected: bindings.len(),
            got: tracks.len(),
        });
    }
    if let Some(t) = tracks.iter().find(|t| t.len() != actions.len() + 1) {
        return Err(Error::DimensionMismatch {
            expected: actions.len() + 1,
            got: t.len(),
        });
    }
    let kept = remove_outliers(tracks, config.outlier_variance_threshold);
    let mut eligible = vec![false; tracks.len()];
    for i in kept {
        eligible[i] = tracks[i].is_full();
    }
    let n_eligible = eligible.iter().filter(|&&e| e).count();
    if n_eligible < config.top_k {
        return Err(Error::TooFewTracks {
            available: n_eligible,
            needed: config.top_k,
        });
    }

    let scores: Vec<f64> = (0..tracks.len())
        .into_par_iter()
        .map(|i| {
            if !eligible[i] {
                return Ok(0.0);
            }
            responsiveness(&tracks[i], actions, config, derive_seed(config.seed, bindings[i].id))
        })
        .collect::<Result<_>>()?;

    let mut ranking: Vec<usize> = (0..tracks.len()).filter(|&i| eligible[i]).collect();
    ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let members: Vec<usize> = ranking[..config.top_k].to_vec();
    let position = mean_position(members.iter().map(|&i| tracks[i].last().expect("full track")));
    let body = ranking.iter().copied().filter(|&i| scores[i] > config.delta).collect();
    let mean_member = members.iter().map(|&i| scores[i]).sum::<f64>() / members.len() as f64;
    let low_confidence = mean_member < LOW_CONFIDENCE_NATS;
    Ok(ResponsivenessReport {
        scores,
        ranking,
        mrcp: Mrcp { members, position },
        body,
        low_confidence,
        bindings: bindings.to_vec(),
        config: config.clone(),
        seed: config.seed,
    })
}

pub(crate) fn mean_position(points: impl Iterator<Item = [f64; 3]>) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut n = 0usize;
    for p in points {
        for c in 0..3 {
            acc[c] += p[c];
        }
        n += 1;
    }
    acc.map(|v| v / n.max(1) as f64)
}

/// Scores the log's own tracks against `actions`.
pub fn score_all(log: &ExplorationLog, actions: &ActionSequence, config: &SelfRecConfig) -> Result<ResponsivenessReport> {
    score_tracks(&log.tracks, log.bindings(), actions, config)
}

/// Lays fine grids around the best coarse candidates, replays them over the
/// logged trajectory and re-scores.
///
/// Grids are centred on each candidate's position in the first frame, where
/// the new tracks are initialised.
pub fn coarse_to_fine(
    log: &ExplorationLog,
    actions: &ActionSequence,
    config: &SelfRecConfig,
) -> Result<ResponsivenessReport> {
    let coarse = score_all(log, actions, config)?;
    let (tracks, bindings) = fine_candidates(log, &coarse, config)?;
    score_tracks(&tracks, &bindings, actions, config)
}

/// Grid bindings and their replayed tracks for the fine stage.
pub fn fine_candidates(
    log: &ExplorationLog,
    coarse: &ResponsivenessReport,
    config: &SelfRecConfig,
) -> Result<(Vec<ParticleTrack>, Vec<ParticleBinding>)> {
    let mut bindings = Vec::new();
    for &c in coarse.ranking.iter().take(config.coarse_keep) {
        let start = log.tracks[c].positions[0].ok_or(Error::IncompleteTrack(c))?;
        bindings.extend(log.bind_grid([start[0], start[1]], config.grid, config.grid_spacing));
    }
    let tracks = bindings
        .par_iter()
        .map(|b| log.replay_point(b))
        .collect::<Result<Vec<_>>>()?;
    Ok((tracks, bindings))
}

/// One- or two-stage identification, as selected by `config.stages`.
pub fn identify(log: &ExplorationLog, actions: &ActionSequence, config: &SelfRecConfig) -> Result<ResponsivenessReport> {
    match config.stages {
        1 => score_all(log, actions, config),
        _ => coarse_to_fine(log, actions, config),
    }
}

/// Repeats identification for each noise variance. Everything else,
/// including the noise seeds, is shared, so only the injected variance
/// differs between reports.
pub fn noise_sweep(
    log: &ExplorationLog,
    actions: &ActionSequence,
    variances: &[f64],
    config: &SelfRecConfig,
) -> Result<Vec<ResponsivenessReport>> {
    if variances.is_empty() {
        return Err(Error::Domain("noise sweep needs at least one variance".into()));
    }
    variances
        .iter()
        .map(|&v| {
            let cfg = SelfRecConfig {
                noise_variance: v,
                ..config.clone()
            };
            identify(log, actions, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sim::{run_exploration, SceneSpec, SimWorld};
    use crate::mi::{ksg_mi, MiConfig};
    use rand::Rng;

    fn uniform_actions(n: usize, d: usize, seed: u64) -> ActionSequence {
        let mut r = rng::stream(seed, 42);
        (0..n).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
    }

    fn track_from(start: [f64; 3], deltas: &[[f64; 3]]) -> ParticleTrack {
        let mut p = start;
        let mut positions = vec![Some(p)];
        for d in deltas {
            for c in 0..3 {
                p[c] += d[c];
            }
            positions.push(Some(p));
        }
        ParticleTrack { positions }
    }

    #[test]
    fn static_particle_scores_zero() {
        let acts = uniform_actions(100, 4, 1);
        let t = ParticleTrack {
            positions: vec![Some([100.0, 50.0, 40.0]); 101],
        };
        assert_eq!(responsiveness(&t, &acts, &SelfRecConfig::default(), 0).unwrap(), 0.0);
    }

    #[test]
    fn linear_response_scores_high() {
        let acts = uniform_actions(100, 3, 2);
        let j = [[12.0, -3.0, 1.0], [2.0, 9.0, -4.0], [0.5, 1.0, 3.0]];
        let deltas: Vec<[f64; 3]> = acts
            .iter()
            .map(|a| {
                let mut d = [0.0; 3];
                for r in 0..3 {
                    d[r] = (0..3).map(|c| j[r][c] * a[c]).sum();
                }
                d
            })
            .collect();
        let cfg = SelfRecConfig {
            noise_variance: 0.0,
            ..Default::default()
        };
        let r = responsiveness(&track_from([0.0; 3], &deltas), &acts, &cfg, 0).unwrap();
        // Oracle: the estimator on the same (JA, A) pairs with unit-scaled columns.
        let mut xs: Vec<Vec<f64>> = deltas.iter().map(|d| d.to_vec()).collect();
        let mut ys = acts.clone();
        standardize_columns(&mut xs);
        standardize_columns(&mut ys);
        let direct = ksg_mi(&SampleSet::from_rows(&xs, &ys).unwrap(), &MiConfig::default()).unwrap();
        assert!((r - direct).abs() < 1e-12);
        assert!(r >= 1.5, "{r}");
    }

    #[test]
    fn independent_motion_scores_near_zero() {
        let mut total = 0.0;
        for seed in 0..20 {
            let acts = uniform_actions(100, 4, 100 + seed);
            let mut r = rng::stream(seed, 7);
            let deltas: Vec<[f64; 3]> = (0..100)
                .map(|_| [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(-1.0..1.0)])
                .collect();
            total += responsiveness(&track_from([0.0; 3], &deltas), &acts, &SelfRecConfig::default(), seed).unwrap();
        }
        assert!(total / 20.0 < 0.1, "{}", total / 20.0);
    }

    #[test]
    fn gaps_and_length_are_checked() {
        let acts = uniform_actions(10, 2, 3);
        let mut t = ParticleTrack {
            positions: vec![Some([0.0; 3]); 11],
        };
        t.positions[4] = None;
        assert!(matches!(
            responsiveness(&t, &acts, &SelfRecConfig::default(), 0),
            Err(Error::IncompleteTrack(_))
        ));
        let short = ParticleTrack {
            positions: vec![Some([0.0; 3]); 5],
        };
        assert!(responsiveness(&short, &acts, &SelfRecConfig::default(), 0).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = SelfRecConfig {
            stages: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SelfRecConfig {
            top_k: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn small_log(spec: SceneSpec, seed: u64) -> ExplorationLog {
        let mut w = SimWorld::new(spec.build(seed).unwrap()).unwrap();
        run_exploration(&mut w, 100, 0.05).unwrap()
    }

    #[test]
    fn report_is_internally_consistent() {
        let log = small_log(SceneSpec::default(), 5);
        let cfg = SelfRecConfig {
            stages: 1,
            ..Default::default()
        };
        let rep = score_all(&log, &log.actions, &cfg).unwrap();
        assert!(rep.scores.iter().all(|&s| s >= 0.0));
        assert!(rep.ranking.windows(2).all(|w| rep.scores[w[0]] >= rep.scores[w[1]]));
        assert_eq!(rep.mrcp.members, rep.ranking[..15].to_vec());
        assert!(rep.body.iter().all(|&i| rep.scores[i] > cfg.delta));
        assert!(!rep.low_confidence);
        let again = score_all(&log, &log.actions, &cfg).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn too_few_tracks_is_an_error() {
        let log = small_log(SceneSpec::default(), 5);
        let cfg = SelfRecConfig {
            stages: 1,
            top_k: 500,
            ..Default::default()
        };
        assert!(matches!(
            score_all(&log, &log.actions, &cfg),
            Err(Error::TooFewTracks { needed: 500, .. })
        ));
    }

    #[test]
    fn background_only_world_is_low_confidence() {
        let spec = SceneSpec {
            link_particles: 0,
            ..SceneSpec::default()
        };
        let log = small_log(spec, 8);
        let cfg = SelfRecConfig {
            stages: 1,
            outlier_variance_threshold: 0.0,
            ..Default::default()
        };
        let rep = score_all(&log, &log.actions, &cfg).unwrap();
        assert!(rep.low_confidence);
        assert!(rep.scores.iter().all(|&s| s < 0.25), "max {}", rep.max_score());
    }

    #[test]
    fn single_variance_sweep_matches_scoring() {
        let log = small_log(SceneSpec::default(), 6);
        let cfg = SelfRecConfig {
            stages: 1,
            noise_variance: 0.8,
            ..Default::default()
        };
        let sweep = noise_sweep(&log, &log.actions, &[0.8], &cfg).unwrap();
        assert_eq!(sweep[0], score_all(&log, &log.actions, &cfg).unwrap());
        assert!(noise_sweep(&log, &log.actions, &[], &cfg).is_err());
    }
}
