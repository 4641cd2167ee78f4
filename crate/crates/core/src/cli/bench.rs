//! Identification benchmark: one-axis-at-a-time sweeps over the matrix in
//! [`BenchMatrix`], every cell run for every seed.
//!
//! The outlier cells score the seed tracks only (one stage), since body
//! classification is measured on those.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::svg;
use crate::selfrec::eval::{self, PrPoint, REGION_MARGIN_CM};
use crate::selfrec::{identify, SelfRecConfig};
use crate::sim::{explore_scene, SceneSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub axis: &'static str,
    pub value: String,
    pub scene: SceneSpec,
    pub n_actions: usize,
    pub selfrec: SelfRecConfig,
}

impl Cell {
    pub fn setting(&self) -> String {
        format!("{}={}", self.axis, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub setting: String,
    pub axis: String,
    pub value: String,
    pub seed: u64,
    pub status: String,
    pub error_px: Option<f64>,
    pub error_cm: Option<f64>,
    pub success: Option<bool>,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub setting: String,
    pub axis: String,
    pub value: String,
    pub runs: usize,
    pub failures: usize,
    pub mean_error_px: f64,
    pub std_error_px: f64,
    pub mean_error_cm: f64,
    pub std_error_cm: f64,
    pub success_rate: f64,
    pub mean_ap: f64,
}

pub fn cells(config: &RunConfig) -> Vec<Cell> {
    let m = &config.bench;
    let base = Cell {
        axis: "",
        value: String::new(),
        scene: config.scene.clone(),
        n_actions: config.n_actions,
        selfrec: config.selfrec.clone(),
    };
    let mut out = Vec::new();
    for &s in &m.stages {
        let mut c = base.clone();
        c.axis = "stages";
        c.value = s.to_string();
        c.selfrec.stages = s;
        out.push(c);
    }
    for &v in &m.noise_variance {
        let mut c = base.clone();
        c.axis = "noise_variance";
        c.value = v.to_string();
        c.selfrec.noise_variance = v;
        if let Some(tool) = m.noise_sweep_tool {
            c.scene.tool = tool;
        }
        out.push(c);
    }
    for &k in &m.top_k {
        let mut c = base.clone();
        c.axis = "top_k";
        c.value = k.to_string();
        c.selfrec.top_k = k;
        if let Some(p) = m.top_k_drop_prob {
            c.scene.drop_prob_per_step = p;
        }
        out.push(c);
    }
    for &n in &m.n_actions {
        let mut c = base.clone();
        c.axis = "n_actions";
        c.value = n.to_string();
        c.n_actions = n;
        out.push(c);
    }
    for &on in &m.outliers {
        let mut c = base.clone();
        c.axis = "outliers";
        c.value = if on { "on" } else { "off" }.to_string();
        c.selfrec.stages = 1;
        c.selfrec.outlier_variance_threshold = match (on, config.selfrec.outlier_variance_threshold) {
            (false, _) => 0.0,
            (true, t) if t > 0.0 => t,
            (true, _) => SelfRecConfig::default().outlier_variance_threshold,
        };
        out.push(c);
    }
    out
}

struct RunResult {
    row: BenchRow,
    pr: Option<Vec<PrPoint>>,
}

fn run_one(cell: &Cell, seed: u64, action_scale: f64) -> Result<(BenchRow, Vec<PrPoint>)> {
    let log = explore_scene(&cell.scene, seed, cell.n_actions, action_scale)?;
    let cfg = SelfRecConfig {
        seed,
        ..cell.selfrec.clone()
    };
    let report = identify(&log, &log.actions, &cfg)?;
    let arm = log.config.controlled_arm();
    let labels = eval::body_labels(&report.bindings, arm);
    let pos = report.mrcp.position;
    let row = BenchRow {
        setting: cell.setting(),
        axis: cell.axis.to_string(),
        value: cell.value.clone(),
        seed,
        status: "ok".into(),
        error_px: Some(eval::id_error_px(&log, pos, arm)),
        error_cm: Some(eval::id_error_cm(&log, pos, arm)),
        success: Some(eval::region_success(&log, pos, arm, REGION_MARGIN_CM)),
        ap: Some(eval::average_precision(&report, &labels)),
    };
    Ok((row, eval::precision_recall(&report, &labels)))
}

pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<CellSummary>,
    /// PR curve of the first seed for each outlier setting.
    pub pr_curves: Vec<(String, Vec<PrPoint>)>,
}

/// Runs every (cell, seed) pair on a pool of `config.workers` threads.
/// Results are gathered in matrix order, so the output does not depend on
/// the worker count.
pub fn run_bench(config: &RunConfig) -> Result<BenchOutput> {
    let cells = cells(config);
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| config.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let first_seed = config.seeds[0];
    let results: Vec<RunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, seed)| {
                let cell = &cells[c];
                match run_one(cell, seed, config.action_scale) {
                    Ok((row, pr)) => RunResult {
                        row,
                        pr: (cell.axis == "outliers" && seed == first_seed).then_some(pr),
                    },
                    Err(e) => RunResult {
                        row: BenchRow {
                            setting: cell.setting(),
                            axis: cell.axis.to_string(),
                            value: cell.value.clone(),
                            seed,
                            status: format!("failed: {e}"),
                            error_px: None,
                            error_cm: None,
                            success: None,
                            ap: None,
                        },
                        pr: None,
                    },
                }
            })
            .collect()
    });
    let mut pr_curves = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        if let Some(pr) = r.pr {
            pr_curves.push((r.row.setting.clone(), pr));
        }
        rows.push(r.row);
    }
    Ok(BenchOutput {
        summary: summarize(&rows),
        rows,
        pr_curves,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation per setting over its successful runs,
/// in first-appearance order.
pub fn summarize(rows: &[BenchRow]) -> Vec<CellSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.setting.as_str()) {
            order.push(&r.setting);
        }
    }
    order
        .into_iter()
        .map(|setting| {
            let cell: Vec<&BenchRow> = rows.iter().filter(|r| r.setting == setting).collect();
            let px: Vec<f64> = cell.iter().filter_map(|r| r.error_px).collect();
            let cm: Vec<f64> = cell.iter().filter_map(|r| r.error_cm).collect();
            let ap: Vec<f64> = cell.iter().filter_map(|r| r.ap).collect();
            let succ: Vec<bool> = cell.iter().filter_map(|r| r.success).collect();
            let (mean_error_px, std_error_px) = mean_std(&px);
            let (mean_error_cm, std_error_cm) = mean_std(&cm);
            CellSummary {
                setting: setting.to_string(),
                axis: cell[0].axis.clone(),
                value: cell[0].value.clone(),
                runs: cell.len(),
                failures: cell.len() - px.len(),
                mean_error_px,
                std_error_px,
                mean_error_cm,
                std_error_cm,
                success_rate: if succ.is_empty() {
                    f64::NAN
                } else {
                    succ.iter().filter(|&&s| s).count() as f64 / succ.len() as f64
                },
                mean_ap: mean_std(&ap).0,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::MalformedLog(format!("csv: {e}"))
    }
}

/// One chart per swept axis: mean tip error with a one-sigma whisker.
pub fn axis_charts(summary: &[CellSummary]) -> Vec<(String, String)> {
    let mut axes: Vec<&str> = Vec::new();
    for s in summary {
        if !axes.contains(&s.axis.as_str()) {
            axes.push(&s.axis);
        }
    }
    axes.into_iter()
        .map(|axis| {
            let cells: Vec<&CellSummary> = summary.iter().filter(|s| s.axis == axis).collect();
            let labels: Vec<String> = cells.iter().map(|c| c.value.clone()).collect();
            let means: Vec<f64> = cells.iter().map(|c| c.mean_error_cm).collect();
            let stds: Vec<f64> = cells.iter().map(|c| c.std_error_cm).collect();
            let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
            let doc = match numeric {
                Some(xs) if axis == "noise_variance" || axis == "n_actions" => {
                    let pts: Vec<[f64; 2]> = xs.iter().zip(&means).map(|(&x, &m)| [x, m]).collect();
                    svg::line_chart(&format!("tip error vs {axis}"), axis, "error (cm)", &[("mean".into(), pts)])
                }
                _ => svg::bar_chart(&format!("tip error by {axis}"), "error (cm)", &labels, &means, &stds),
            };
            (format!("bench_{axis}.svg"), doc)
        })
        .collect()
}

pub fn pr_chart(curves: &[(String, Vec<PrPoint>)]) -> String {
    let series: Vec<(String, Vec<[f64; 2]>)> = curves
        .iter()
        .map(|(name, pts)| (name.clone(), pts.iter().map(|p| [p.recall, p.precision]).collect()))
        .collect();
    svg::line_chart("body classification", "recall", "precision", &series)
}
