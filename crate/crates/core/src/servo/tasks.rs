//! The three servoing tasks run on a simulated arm after self-recognition:
//! point reaching, drawing a "C", and imitating another arm's trajectory.

use serde::{Deserialize, Serialize};

use super::control::{follow_trajectory, initial_estimate, mrcp, reach_traced, Goal, ReachOutcome, ServoConfig, Trace};
use super::goals::{c_arc, reaching_goals};
use super::plant::{Plant, SimPlant};
use super::imitate;
use crate::selfrec::ResponsivenessReport;
use crate::sim::ExplorationLog;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub n_goals: usize,
    pub goal_distance_cm: f64,
    pub arc_radius_px: f64,
    pub arc_waypoints: usize,
    /// Start every task from the arm's home pose rather than where the
    /// exploration left it.
    pub from_home: bool,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            n_goals: 9,
            goal_distance_cm: 15.0,
            arc_radius_px: 40.0,
            arc_waypoints: 12,
            from_home: true,
        }
    }
}

/// Aggregate in the shape of a reaching-benchmark table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoSummary {
    pub task: String,
    pub runs: usize,
    /// Median ground-truth error (cm) at termination.
    pub median_error_cm: f64,
    /// Early-termination rate, i.e. share of runs (or waypoints) that ended
    /// inside the success radius.
    pub etr_percent: f64,
    pub status: String,
}

impl ServoSummary {
    pub fn from_outcomes(task: &str, outcomes: &[ReachOutcome]) -> Self {
        let mut errs: Vec<f64> = outcomes.iter().filter_map(|o| o.error_cm).collect();
        errs.sort_by(f64::total_cmp);
        let median = match errs.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => errs[n / 2],
            n => 0.5 * (errs[n / 2 - 1] + errs[n / 2]),
        };
        let hits = outcomes.iter().filter(|o| o.early_terminated).count();
        let lost = outcomes.iter().any(|o| o.status == super::ReachStatus::TrackingLost);
        Self {
            task: task.to_string(),
            runs: outcomes.len(),
            median_error_cm: median,
            etr_percent: if outcomes.is_empty() {
                0.0
            } else {
                100.0 * hits as f64 / outcomes.len() as f64
            },
            status: if lost { "tracking_lost" } else { "ok" }.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    /// MRCP when the task began, for tasks that start from one point.
    pub start: Option<[f64; 3]>,
    pub goals: Vec<Goal>,
    pub outcomes: Vec<ReachOutcome>,
    pub trace: Trace,
}

/// The plant a task starts from: the identified members on the explored arm.
pub fn task_plant(log: &ExplorationLog, report: &ResponsivenessReport, tasks: &TaskConfig) -> Result<SimPlant> {
    let members = report.member_bindings();
    if tasks.from_home {
        SimPlant::from_log_at_home(log, members)
    } else {
        SimPlant::from_log(log, members)
    }
}

/// Independent reaches from the same start to each goal of the suite, or to
/// `goals` when given.
pub fn reaching_suite(
    log: &ExplorationLog,
    report: &ResponsivenessReport,
    goals: Option<&[Goal]>,
    tasks: &TaskConfig,
    config: &ServoConfig,
) -> Result<TaskResult> {
    let start = task_plant(log, report, tasks)?;
    let goals = match goals {
        Some(g) => g.to_vec(),
        None => reaching_goals(&start, tasks.n_goals, tasks.goal_distance_cm)?,
    };
    let mut trace = Trace::default();
    let mut outcomes = Vec::with_capacity(goals.len());
    for g in &goals {
        let mut plant = start.clone();
        let mut est = initial_estimate(&mut plant, config)?;
        outcomes.push(reach_traced(&mut plant, &mut est, g, config, config.max_steps, &mut trace)?);
    }
    Ok(TaskResult {
        start: None,
        goals,
        outcomes,
        trace,
    })
}

/// Follows `waypoints`, or a "C" starting at the current MRCP.
pub fn draw(
    log: &ExplorationLog,
    report: &ResponsivenessReport,
    waypoints: Option<&[Goal]>,
    tasks: &TaskConfig,
    config: &ServoConfig,
) -> Result<TaskResult> {
    let mut plant = task_plant(log, report, tasks)?;
    let start = mrcp(&plant.observe()).ok_or(Error::TrackingLost)?;
    let goals = match waypoints {
        Some(w) => w.to_vec(),
        None => c_arc(start, tasks.arc_radius_px, tasks.arc_waypoints),
    };
    let mut est = initial_estimate(&mut plant, config)?;
    let mut trace = Trace::default();
    let outcomes = follow_trajectory(&mut plant, &mut est, &goals, config, &mut trace)?;
    Ok(TaskResult {
        start: Some(start),
        goals,
        outcomes,
        trace,
    })
}

/// The source trajectory of a finished drawing: where the MRCP ended up for
/// each waypoint, preceded by its start.
pub fn recorded_trajectory(result: &TaskResult) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = result.start.into_iter().collect();
    out.extend(result.outcomes.iter().filter_map(|o| o.final_position));
    out
}

/// Per-waypoint trajectory from a servo trace: the last measured MRCP before
/// each change of goal.
pub fn trajectory_from_trace(trace: &Trace) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = Vec::new();
    for (i, r) in trace.records.iter().enumerate() {
        let last_of_goal = trace.records.get(i + 1).is_none_or(|n| n.goal != r.goal);
        if last_of_goal {
            out.push(r.s_star);
        }
    }
    out
}

pub fn imitation(
    source: &[[f64; 3]],
    log: &ExplorationLog,
    report: &ResponsivenessReport,
    tasks: &TaskConfig,
    config: &ServoConfig,
) -> Result<TaskResult> {
    let mut plant = task_plant(log, report, tasks)?;
    let mut est = initial_estimate(&mut plant, config)?;
    let mut trace = Trace::default();
    let out = imitate(source, &mut plant, &mut est, config, &mut trace)?;
    Ok(TaskResult {
        start: out.waypoints.first().copied(),
        goals: out.waypoints.into_iter().map(Goal::new).collect(),
        outcomes: out.outcomes,
        trace,
    })
}
