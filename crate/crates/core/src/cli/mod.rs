//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code: 0 when the command ran (task failures
//! are reported in its outputs), 1 for usage or configuration errors and 2
//! for I/O errors or unreadable input files.

pub mod bench;
pub mod config;
pub mod plots;
pub mod svg;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::selfrec::eval::{self, REGION_MARGIN_CM};
use crate::selfrec::{identify, ResponsivenessReport, SelfRecConfig};
use crate::servo::tasks::{self, ServoSummary, TaskResult};
use crate::servo::{Goal, Trace, TraceRecord};
use crate::sim::{explore_scene, read_log, write_log, ExplorationLog};
use crate::{Error, Result};
pub use config::{BenchMatrix, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "selfservo", version, about = "Self-recognition and visual servoing on a simulated arm")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_actions: Option<usize>,
    #[arg(long)]
    pub noise_variance: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub stages: Option<u8>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run random exploration and write one JSONL log per seed.
    Explore(Common),
    /// Score the tracks of a log and write a report plus an SVG overlay.
    Identify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: PathBuf,
        /// Arm whose actions are scored against (default: the controlled one).
        #[arg(long)]
        arm: Option<usize>,
    },
    /// Point reaching: the generated goal suite, one --goal, or a --goals file.
    Servo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Image goal as x,y,depth.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "goals")]
        goal: Option<Vec<f64>>,
        /// JSON array of [x, y, depth] goals.
        #[arg(long)]
        goals: Option<PathBuf>,
    },
    /// Follow a waypoint file, or draw a "C" by default.
    Follow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        /// JSON array of [x, y, depth] waypoints.
        #[arg(long)]
        waypoints: Option<PathBuf>,
    },
    /// Reproduce a source trajectory (JSON points or a trace JSONL). Without
    /// --source, a second arm with a shifted base draws one first.
    Imitate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Identification benchmark over the configured matrix.
    Bench(Common),
    /// Redraw a figure from a bench CSV, a trace JSONL or a report JSON (with --log).
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Output file, or directory for bench CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::MalformedLog(_) => 2,
        _ => 1,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seeds: common.seed.map(|s| vec![s]).or_else(|| common.seeds.clone()),
        out: common.out.clone(),
        n_actions: common.n_actions,
        noise_variance: common.noise_variance,
        top_k: common.top_k,
        stages: common.stages,
        workers: common.workers,
    });
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Explore(common) => cmd_explore(&load_config(&common)?),
        Command::Identify { common, log, arm } => cmd_identify(&load_config(&common)?, &log, arm),
        Command::Servo { common, log, goal, goals } => {
            let cfg = load_config(&common)?;
            let goals = match (goal, goals) {
                (Some(g), _) if g.len() != 3 => {
                    return Err(Error::InvalidConfig("--goal takes x,y,depth".into()));
                }
                (Some(g), _) => Some(vec![Goal::new([g[0], g[1], g[2]])]),
                (None, Some(p)) => Some(read_points(&p)?.into_iter().map(Goal::new).collect()),
                (None, None) => None,
            };
            cmd_servo(&cfg, log.as_deref(), goals.as_deref())
        }
        Command::Follow { common, log, waypoints } => {
            let cfg = load_config(&common)?;
            let waypoints: Option<Vec<Goal>> = match waypoints {
                Some(p) => Some(read_points(&p)?.into_iter().map(Goal::new).collect()),
                None => None,
            };
            cmd_follow(&cfg, log.as_deref(), waypoints.as_deref())
        }
        Command::Imitate { common, log, source } => {
            let cfg = load_config(&common)?;
            let source = source.map(|p| read_source(&p)).transpose()?;
            cmd_imitate(&cfg, log.as_deref(), source.as_deref())
        }
        Command::Bench(common) => cmd_bench(&load_config(&common)?),
        Command::Plot { input, log, out } => cmd_plot(&input, log.as_deref(), out.as_deref()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn load_log(path: &Path) -> Result<ExplorationLog> {
    read_log(BufReader::new(File::open(path)?))
}

/// A JSON array of `[x, y, depth]` points.
pub fn read_points(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = fs::read_to_string(path)?;
    let pts: Vec<[f64; 3]> = serde_json::from_str(&text)?;
    if pts.is_empty() {
        return Err(Error::MalformedLog(format!("{}: no points", path.display())));
    }
    Ok(pts)
}

/// A point list, or the per-waypoint positions of a servo trace (`.jsonl`).
pub fn read_source(path: &Path) -> Result<Vec<[f64; 3]>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let text = fs::read_to_string(path)?;
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<TraceRecord>)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let pts = tasks::trajectory_from_trace(&Trace { records });
        if pts.is_empty() {
            return Err(Error::MalformedLog(format!("{}: empty trace", path.display())));
        }
        Ok(pts)
    } else {
        read_points(path)
    }
}

fn cmd_explore(cfg: &RunConfig) -> Result<()> {
    for &seed in &cfg.seeds {
        let log = explore_scene(&cfg.scene, seed, cfg.n_actions, cfg.action_scale)?;
        let path = cfg.out.join(format!("explore_seed{seed}.jsonl"));
        let mut f = BufWriter::new(File::create(&path)?);
        write_log(&log, &mut f)?;
        let survivors = log.tracks.iter().filter(|t| t.is_full()).count();
        println!(
            "seed {seed}: {} actions, {} tracks, {survivors} alive throughout -> {}",
            log.n_actions(),
            log.tracks.len(),
            path.display()
        );
    }
    Ok(())
}

fn selfrec_for(cfg: &RunConfig, seed: u64) -> SelfRecConfig {
    SelfRecConfig {
        seed,
        ..cfg.selfrec.clone()
    }
}

fn cmd_identify(cfg: &RunConfig, log_path: &Path, arm: Option<usize>) -> Result<()> {
    let log = load_log(log_path)?;
    let arm = arm.unwrap_or_else(|| log.config.controlled_arm());
    let actions = log
        .actions_of(arm)
        .ok_or_else(|| Error::InvalidConfig(format!("log has no arm {arm}")))?
        .clone();
    let seed = log.config.seed;
    let stem = log_path.file_stem().and_then(|s| s.to_str()).unwrap_or("log");
    let report_path = cfg.out.join(format!("{stem}_report.json"));
    match identify(&log, &actions, &selfrec_for(cfg, seed)) {
        Ok(report) => {
            write_text(&report_path, &(report.to_json()? + "\n"))?;
            let svg_path = cfg.out.join(format!("{stem}_overlay.svg"));
            write_text(&svg_path, &plots::identify_overlay(&log, &report, arm)?)?;
            let pos = report.mrcp.position;
            println!(
                "seed {seed}: MRCP ({:.2}, {:.2}, {:.2}), max score {:.3} nats{}, {:.2} px from arm {arm}'s end-effector -> {}",
                pos[0],
                pos[1],
                pos[2],
                report.max_score(),
                if report.low_confidence { " (low confidence)" } else { "" },
                eval::id_error_px(&log, pos, arm),
                report_path.display()
            );
        }
        Err(e @ (Error::Io(_) | Error::Json(_) | Error::MalformedLog(_))) => return Err(e),
        Err(e) => {
            write_json(&report_path, &json!({ "status": "failed", "error": e.to_string() }))?;
            println!("seed {seed}: identification failed: {e}");
        }
    }
    Ok(())
}

/// Exploration (or a supplied log) plus identification for one seed.
fn prepare(cfg: &RunConfig, seed: u64, log_path: Option<&Path>) -> Result<(ExplorationLog, ResponsivenessReport)> {
    let log = match log_path {
        Some(p) => load_log(p)?,
        None => explore_scene(&cfg.scene, seed, cfg.n_actions, cfg.action_scale)?,
    };
    let seed = log.config.seed;
    let report = identify(&log, &log.actions, &selfrec_for(cfg, seed))?;
    Ok((log, report))
}

fn seeds_for(cfg: &RunConfig, log_path: Option<&Path>) -> Vec<u64> {
    match log_path {
        Some(_) => vec![cfg.seeds[0]],
        None => cfg.seeds.clone(),
    }
}

#[derive(Serialize)]
struct SeedRun {
    seed: u64,
    status: String,
    summary: Option<ServoSummary>,
    low_confidence: Option<bool>,
    outcomes: Vec<crate::servo::ReachOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_deviation_px: Option<f64>,
}

#[derive(Serialize)]
struct TaskReport {
    task: String,
    overall: ServoSummary,
    runs: Vec<SeedRun>,
}

/// Runs `task` per seed, writing one trace per seed and one summary. Task
/// errors other than I/O become failed entries.
fn run_task<F>(cfg: &RunConfig, name: &str, log_path: Option<&Path>, mut task: F) -> Result<()>
where
    F: FnMut(u64, &ExplorationLog, &ResponsivenessReport) -> Result<(TaskResult, Option<f64>)>,
{
    let mut runs = Vec::new();
    let mut all = Vec::new();
    for seed in seeds_for(cfg, log_path) {
        let result = prepare(cfg, seed, log_path).and_then(|(log, report)| {
            let low = report.low_confidence;
            task(log.config.seed, &log, &report).map(|r| (log.config.seed, low, r))
        });
        match result {
            Ok((seed, low, (res, deviation))) => {
                let trace_path = cfg.out.join(format!("{name}_seed{seed}_trace.jsonl"));
                let mut f = BufWriter::new(File::create(&trace_path)?);
                res.trace.write_jsonl(&mut f)?;
                f.flush()?;
                let summary = ServoSummary::from_outcomes(name, &res.outcomes);
                println!(
                    "seed {seed}: {name} median {:.2} cm, ETR {:.0}% over {} -> {}",
                    summary.median_error_cm,
                    summary.etr_percent,
                    summary.runs,
                    trace_path.display()
                );
                all.extend(res.outcomes.iter().cloned());
                runs.push(SeedRun {
                    seed,
                    status: summary.status.clone(),
                    summary: Some(summary),
                    low_confidence: Some(low),
                    outcomes: res.outcomes,
                    max_deviation_px: deviation,
                });
            }
            Err(e @ (Error::Io(_) | Error::Json(_) | Error::MalformedLog(_))) => return Err(e),
            Err(e) => {
                println!("seed {seed}: {name} failed: {e}");
                runs.push(SeedRun {
                    seed,
                    status: format!("failed: {e}"),
                    summary: None,
                    low_confidence: None,
                    outcomes: Vec::new(),
                    max_deviation_px: None,
                });
            }
        }
    }
    let mut overall = ServoSummary::from_outcomes(name, &all);
    if runs.iter().any(|r| r.status.starts_with("failed")) {
        overall.status = "partial".into();
    }
    let path = cfg.out.join(format!("{name}_summary.json"));
    write_json(
        &path,
        &TaskReport {
            task: name.to_string(),
            overall,
            runs,
        },
    )
}

fn cmd_servo(cfg: &RunConfig, log_path: Option<&Path>, goals: Option<&[Goal]>) -> Result<()> {
    run_task(cfg, "reach", log_path, |_, log, report| {
        Ok((tasks::reaching_suite(log, report, goals, &cfg.tasks, &cfg.servo)?, None))
    })
}

fn cmd_follow(cfg: &RunConfig, log_path: Option<&Path>, waypoints: Option<&[Goal]>) -> Result<()> {
    run_task(cfg, "follow", log_path, |_, log, report| {
        Ok((tasks::draw(log, report, waypoints, &cfg.tasks, &cfg.servo)?, None))
    })
}

/// Largest image-plane gap between where the target went, relative to its
/// start, and the source's relative waypoints scaled by `scale`.
pub fn congruence_px(source: &[[f64; 3]], result: &TaskResult, scale: f64) -> Option<f64> {
    let start = result.start?;
    let origin = source.first()?;
    result
        .outcomes
        .iter()
        .zip(source)
        .map(|(o, s)| {
            o.final_position.map(|p| {
                let dx = (p[0] - start[0]) - scale * (s[0] - origin[0]);
                let dy = (p[1] - start[1]) - scale * (s[1] - origin[1]);
                dx.hypot(dy)
            })
        })
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
}

fn cmd_imitate(cfg: &RunConfig, log_path: Option<&Path>, source: Option<&[[f64; 3]]>) -> Result<()> {
    run_task(cfg, "imitate", log_path, |seed, log, report| {
        let src = match source {
            Some(s) => s.to_vec(),
            None => {
                let slog = explore_scene(&cfg.source_scene, seed, cfg.n_actions, cfg.action_scale)?;
                let srep = identify(&slog, &slog.actions, &selfrec_for(cfg, seed))?;
                let drawing = tasks::draw(&slog, &srep, None, &cfg.tasks, &cfg.servo)?;
                let pts = tasks::recorded_trajectory(&drawing);
                write_json(&cfg.out.join(format!("imitate_seed{seed}_source.json")), &pts)?;
                pts
            }
        };
        let res = tasks::imitation(&src, log, report, &cfg.tasks, &cfg.servo)?;
        let dev = congruence_px(&src, &res, cfg.servo.imitation_scale);
        Ok((res, dev))
    })
}

fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let out = bench::run_bench(cfg)?;
    bench::write_csv(&cfg.out.join("bench_rows.csv"), &out.rows)?;
    bench::write_csv(&cfg.out.join("bench_summary.csv"), &out.summary)?;
    for (name, doc) in bench::axis_charts(&out.summary) {
        write_text(&cfg.out.join(name), &doc)?;
    }
    if !out.pr_curves.is_empty() {
        write_text(&cfg.out.join("bench_pr.svg"), &bench::pr_chart(&out.pr_curves))?;
    }
    for s in &out.summary {
        println!(
            "{:<22} error {:.3} ± {:.3} cm, {:.2} ± {:.2} px, success {:.0}%, AP {:.3}, failures {}/{}",
            s.setting,
            s.mean_error_cm,
            s.std_error_cm,
            s.mean_error_px,
            s.std_error_px,
            100.0 * s.success_rate,
            s.mean_ap,
            s.failures,
            s.runs
        );
    }
    println!("region success margin {REGION_MARGIN_CM} cm; rows -> {}", cfg.out.join("bench_rows.csv").display());
    Ok(())
}

fn cmd_plot(input: &Path, log: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let ext = input.extension().and_then(|e| e.to_str()).unwrap_or("");
    let default_out = input.with_extension("svg");
    match ext {
        "csv" => {
            let rows = bench::read_rows(input)?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
            fs::create_dir_all(&dir)?;
            for (name, doc) in bench::axis_charts(&bench::summarize(&rows)) {
                let path = dir.join(name);
                write_text(&path, &doc)?;
                println!("{}", path.display());
            }
        }
        "jsonl" => {
            let text = fs::read_to_string(input)?;
            let records = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str::<TraceRecord>)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let trace = Trace { records };
            let path = out.map(Path::to_path_buf).unwrap_or(default_out);
            write_text(&path, &plots::trace_chart(&trace))?;
            let goals: Vec<[f64; 3]> = {
                let mut g: Vec<[f64; 3]> = trace.records.iter().map(|r| r.goal).collect();
                g.dedup();
                g
            };
            let path_svg = path.with_file_name(format!(
                "{}_path.svg",
                path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace")
            ));
            write_text(&path_svg, &plots::path_chart(&goals, &trace))?;
            println!("{}\n{}", path.display(), path_svg.display());
        }
        "json" => {
            let log_path = log.ok_or_else(|| Error::InvalidConfig("plotting a report needs --log".into()))?;
            let report: ResponsivenessReport = serde_json::from_str(&fs::read_to_string(input)?)?;
            let log = load_log(log_path)?;
            let path = out.map(Path::to_path_buf).unwrap_or(default_out);
            write_text(&path, &plots::identify_overlay(&log, &report, log.config.controlled_arm())?)?;
            println!("{}", path.display());
        }
        _ => return Err(Error::InvalidConfig(format!("cannot plot {}: expected .csv, .jsonl or .json", input.display()))),
    }
    Ok(())
}
