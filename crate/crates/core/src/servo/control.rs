use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::jacobian::JacobianEstimate;
use super::plant::Plant;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServoConfig {
    /// Gain η of `A = η J† (G − S*)`.
    pub eta: f64,
    pub max_steps: usize,
    /// Image-plane success radius (px).
    pub success_radius: f64,
    /// Steps without improvement before the Jacobian is re-probed.
    pub reinit_patience: usize,
    /// Minimum decrease (px) of the goal distance that counts as progress.
    pub improvement_px: f64,
    /// Probe amplitude ε for Jacobian initialisation.
    pub probe_scale: f64,
    /// Pseudo-inverse damping, relative to the mean squared singular value.
    pub damping: f64,
    /// Upper bound on ‖A‖.
    pub max_action_norm: f64,
    /// Window T of the batched update.
    pub history_len: usize,
    pub batched: bool,
    pub batch_ridge: f64,
    /// Scale applied to a source trajectory before imitation.
    pub imitation_scale: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self {
            eta: 0.2,
            max_steps: 150,
            success_radius: 5.0,
            reinit_patience: 20,
            improvement_px: 0.5,
            probe_scale: 0.05,
            damping: 1e-3,
            max_action_norm: 0.1,
            history_len: 10,
            batched: true,
            batch_ridge: 1e-4,
            imitation_scale: 1.0,
        }
    }
}

impl ServoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be > 0".into()));
        }
        if !(self.success_radius > 0.0) {
            return Err(Error::InvalidConfig("success_radius must be > 0".into()));
        }
        if !(self.probe_scale > 0.0) {
            return Err(Error::InvalidConfig("probe_scale must be > 0".into()));
        }
        if !(self.damping >= 0.0) || !(self.batch_ridge >= 0.0) || !(self.max_action_norm >= 0.0) {
            return Err(Error::InvalidConfig("damping, ridge and action bound must be >= 0".into()));
        }
        if self.history_len == 0 || self.reinit_patience == 0 {
            return Err(Error::InvalidConfig("history_len and reinit_patience must be >= 1".into()));
        }
        if !(self.imitation_scale.is_finite()) {
            return Err(Error::InvalidConfig("imitation_scale must be finite".into()));
        }
        Ok(())
    }
}

/// Target for the MRCP in camera coordinates `(x px, y px, depth cm)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub position: [f64; 3],
    /// Overrides [`ServoConfig::success_radius`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Goal {
    pub fn new(position: [f64; 3]) -> Self {
        Self {
            position,
            tolerance: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("goal"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachStatus {
    Reached,
    BudgetExhausted,
    TrackingLost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachOutcome {
    pub status: ReachStatus,
    pub final_position: Option<[f64; 3]>,
    pub goal: [f64; 3],
    pub steps: usize,
    pub early_terminated: bool,
    pub error_px: f64,
    pub error_cm: Option<f64>,
    pub reinits: usize,
}

/// One line of a servo trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub s_star: [f64; 3],
    pub goal: [f64; 3],
    pub action: Vec<f64>,
    pub distance_px: f64,
    pub gt_error_cm: Option<f64>,
    pub reinit: bool,
}

/// Collects trace records across calls; the step counter keeps running.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Mean of the members that are alive.
pub fn mrcp(obs: &[Option<[f64; 3]>]) -> Option<[f64; 3]> {
    let alive: Vec<&[f64; 3]> = obs.iter().flatten().collect();
    if alive.is_empty() {
        return None;
    }
    let n = alive.len() as f64;
    Some([0, 1, 2].map(|c| alive.iter().map(|p| p[c]).sum::<f64>() / n))
}

/// MRCP displacement between two frames, over the members alive in both, so
/// that a member dropping out does not register as motion.
pub fn mrcp_delta(before: &[Option<[f64; 3]>], after: &[Option<[f64; 3]>]) -> Option<[f64; 3]> {
    let mut acc = [0.0; 3];
    let mut n = 0usize;
    for (b, a) in before.iter().zip(after) {
        if let (Some(b), Some(a)) = (b, a) {
            for c in 0..3 {
                acc[c] += a[c] - b[c];
            }
            n += 1;
        }
    }
    (n > 0).then(|| acc.map(|v| v / n as f64))
}

fn px_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Probes each control dimension with `ε e_i`, undoes it with `−ε e_i`, and
/// sets column `i` of `J₀` to the observed displacement divided by ε.
pub fn init_jacobian<P: Plant + ?Sized>(plant: &mut P, probe_scale: f64, history_len: usize) -> Result<JacobianEstimate> {
    if !(probe_scale > 0.0) || !probe_scale.is_finite() {
        return Err(Error::Domain(format!("probe scale must be > 0, got {probe_scale}")));
    }
    let d = plant.action_dim();
    let mut j = DMatrix::zeros(3, d);
    let mut obs = plant.observe();
    for i in 0..d {
        let mut a = vec![0.0; d];
        a[i] = probe_scale;
        plant.apply(&a)?;
        let moved = plant.observe();
        let ds = mrcp_delta(&obs, &moved).ok_or(Error::TrackingLost)?;
        for r in 0..3 {
            j[(r, i)] = ds[r] / probe_scale;
        }
        a[i] = -probe_scale;
        plant.apply(&a)?;
        obs = plant.observe();
        if mrcp(&obs).is_none() {
            return Err(Error::TrackingLost);
        }
    }
    JacobianEstimate::new(j, history_len)
}

/// Probe-initialised estimate with the window from `config`.
pub fn initial_estimate<P: Plant + ?Sized>(plant: &mut P, config: &ServoConfig) -> Result<JacobianEstimate> {
    init_jacobian(plant, config.probe_scale, config.history_len)
}

/// One control action towards `goal` from the measured MRCP `s_star`.
pub fn servo_step(est: &JacobianEstimate, s_star: &[f64; 3], goal: &Goal, config: &ServoConfig) -> Vec<f64> {
    let e = [0, 1, 2].map(|c| goal.position[c] - s_star[c]);
    if e.iter().all(|&v| v == 0.0) {
        return vec![0.0; est.dof()];
    }
    est.control(&e, config.eta, config.damping, config.max_action_norm)
        .as_slice()
        .to_vec()
}

pub fn reach<P: Plant + ?Sized>(
    plant: &mut P,
    est: &mut JacobianEstimate,
    goal: &Goal,
    config: &ServoConfig,
) -> Result<ReachOutcome> {
    reach_traced(plant, est, goal, config, config.max_steps, &mut Trace::default())
}

/// The closed loop: act, measure ΔS over surviving members, update the
/// Jacobian, and re-probe after `reinit_patience` steps without progress.
pub fn reach_traced<P: Plant + ?Sized>(
    plant: &mut P,
    est: &mut JacobianEstimate,
    goal: &Goal,
    config: &ServoConfig,
    budget: usize,
    trace: &mut Trace,
) -> Result<ReachOutcome> {
    config.validate()?;
    goal.validate()?;
    if est.dof() != plant.action_dim() {
        return Err(Error::DimensionMismatch {
            expected: plant.action_dim(),
            got: est.dof(),
        });
    }
    let radius = goal.tolerance.unwrap_or(config.success_radius);
    let mut obs = plant.observe();
    let mut reinits = 0;
    let outcome = |status, pos: Option<[f64; 3]>, steps, reinits, plant: &P| ReachOutcome {
        status,
        final_position: pos,
        goal: goal.position,
        steps,
        early_terminated: status == ReachStatus::Reached,
        error_px: pos.map(|p| px_distance(&p, &goal.position)).unwrap_or(f64::INFINITY),
        error_cm: plant.ground_truth_error_cm(&goal.position),
        reinits,
    };
    let Some(mut s) = mrcp(&obs) else {
        return Ok(outcome(ReachStatus::TrackingLost, None, 0, 0, plant));
    };
    let mut dist = px_distance(&s, &goal.position);
    if dist <= radius {
        return Ok(outcome(ReachStatus::Reached, Some(s), 0, 0, plant));
    }
    est.best_distance = dist;
    est.steps_since_improvement = 0;

    for step in 1..=budget {
        let action = servo_step(est, &s, goal, config);
        plant.apply(&action)?;
        let next = plant.observe();
        let Some(s_next) = mrcp(&next) else {
            return Ok(outcome(ReachStatus::TrackingLost, None, step, reinits, plant));
        };
        if let Some(ds) = mrcp_delta(&obs, &next) {
            if action.iter().any(|&v| v != 0.0) {
                est.broyden_update(&action, &ds)?;
                if config.batched {
                    est.batched_update(config.batch_ridge)?;
                }
            }
        }
        obs = next;
        s = s_next;
        dist = px_distance(&s, &goal.position);
        if dist < est.best_distance - config.improvement_px {
            est.best_distance = dist;
            est.steps_since_improvement = 0;
        } else {
            est.steps_since_improvement += 1;
        }

        let mut reinit = false;
        if dist > radius && est.steps_since_improvement >= config.reinit_patience {
            match init_jacobian(plant, config.probe_scale, config.history_len) {
                Ok(fresh) => *est = fresh,
                Err(Error::TrackingLost) => {
                    return Ok(outcome(ReachStatus::TrackingLost, None, step, reinits + 1, plant));
                }
                Err(e) => return Err(e),
            }
            est.best_distance = dist;
            reinits += 1;
            reinit = true;
            obs = plant.observe();
            match mrcp(&obs) {
                Some(p) => s = p,
                None => return Ok(outcome(ReachStatus::TrackingLost, None, step, reinits, plant)),
            }
            dist = px_distance(&s, &goal.position);
        }
        trace.records.push(TraceRecord {
            t: trace.records.len(),
            s_star: s,
            goal: goal.position,
            action,
            distance_px: dist,
            gt_error_cm: plant.ground_truth_error_cm(&goal.position),
            reinit,
        });
        if dist <= radius {
            return Ok(outcome(ReachStatus::Reached, Some(s), step, reinits, plant));
        }
    }
    Ok(outcome(ReachStatus::BudgetExhausted, Some(s), budget, reinits, plant))
}

/// Visits waypoints in order with a per-waypoint budget of
/// `max(max_steps / n, 10)` steps, moving on regardless of success.
pub fn follow_trajectory<P: Plant + ?Sized>(
    plant: &mut P,
    est: &mut JacobianEstimate,
    waypoints: &[Goal],
    config: &ServoConfig,
    trace: &mut Trace,
) -> Result<Vec<ReachOutcome>> {
    if waypoints.is_empty() {
        return Err(Error::Domain("trajectory needs at least one waypoint".into()));
    }
    let budget = if waypoints.len() == 1 {
        config.max_steps
    } else {
        (config.max_steps / waypoints.len()).max(10)
    };
    let mut out = Vec::with_capacity(waypoints.len());
    for w in waypoints {
        let r = reach_traced(plant, est, w, config, budget, trace)?;
        let lost = r.status == ReachStatus::TrackingLost;
        out.push(r);
        if lost {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImitationOutcome {
    /// Source trajectory mapped onto the target.
    pub waypoints: Vec<[f64; 3]>,
    pub outcomes: Vec<ReachOutcome>,
}

/// Maps a source MRCP trajectory onto the target by translating its first
/// point onto the target's current MRCP (after scaling by
/// `config.imitation_scale` about that point), then follows it.
pub fn imitate<P: Plant + ?Sized>(
    source: &[[f64; 3]],
    plant: &mut P,
    est: &mut JacobianEstimate,
    config: &ServoConfig,
    trace: &mut Trace,
) -> Result<ImitationOutcome> {
    if source.is_empty() {
        return Err(Error::Domain("source trajectory is empty".into()));
    }
    if source.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("source trajectory"));
    }
    let start = mrcp(&plant.observe()).ok_or(Error::TrackingLost)?;
    let origin = source[0];
    let k = config.imitation_scale;
    let waypoints: Vec<[f64; 3]> = source
        .iter()
        .map(|p| [0, 1, 2].map(|c| start[c] + k * (p[c] - origin[c])))
        .collect();
    let goals: Vec<Goal> = waypoints.iter().map(|&p| Goal::new(p)).collect();
    let outcomes = follow_trajectory(plant, est, &goals, config, trace)?;
    Ok(ImitationOutcome { waypoints, outcomes })
}
