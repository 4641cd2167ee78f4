//! JSON Lines encoding of an [`ExplorationLog`]: one header record, then one
//! record per frame. `obs` holds `[x, y, depth]` per particle or `null` once
//! the track is lost; `action` is the command applied after the frame (`null`
//! on the final frame).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::explore::{ExplorationLog, FrameState, GroundTruth, ParticleTrack};
use super::world::{ArmSlot, Backdrop, ParticleBinding, TrackerModel, WorldConfig};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct HeaderConfig {
    arms: Vec<ArmSlot>,
    camera: CameraModel,
    tracker: TrackerModel,
    backdrop: Backdrop,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    record: String,
    config: HeaderConfig,
    seed: u64,
    d: usize,
    action_scale: f64,
    n_actions: usize,
    bindings: Vec<ParticleBinding>,
    body_mask: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StepRecord {
    t: usize,
    action: Option<Vec<f64>>,
    obs: Vec<Option<[f64; 3]>>,
    gt_ee: [f64; 3],
    gt_ee_world: [f64; 3],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    decoy_actions: Vec<Vec<f64>>,
    state: FrameState,
}

pub fn write_log<W: Write>(log: &ExplorationLog, mut out: W) -> Result<()> {
    let cfg = &log.config;
    let header = Header {
        record: "header".into(),
        config: HeaderConfig {
            arms: cfg.arms.clone(),
            camera: cfg.camera.clone(),
            tracker: cfg.tracker,
            backdrop: cfg.backdrop,
        },
        seed: cfg.seed,
        d: cfg.dof(),
        action_scale: log.action_scale,
        n_actions: log.n_actions(),
        bindings: cfg.particles.clone(),
        body_mask: log.body_mask.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for t in 0..log.frames.len() {
        let rec = StepRecord {
            t,
            action: log.actions.get(t).cloned(),
            obs: log.tracks.iter().map(|tr| tr.positions[t]).collect(),
            gt_ee: log.gt_ee[t].image,
            gt_ee_world: log.gt_ee[t].world,
            decoy_actions: log.decoy_actions.iter().filter_map(|seq| seq.get(t).cloned()).collect(),
            state: log.frames[t].clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_log<R: BufRead>(input: R) -> Result<ExplorationLog> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::MalformedLog("empty log".into()))??;
    let header: Header = serde_json::from_str(&first)?;
    if header.record != "header" {
        return Err(Error::MalformedLog("first record is not a header".into()));
    }
    let config = WorldConfig {
        arms: header.config.arms,
        camera: header.config.camera,
        tracker: header.config.tracker,
        backdrop: header.config.backdrop,
        particles: header.bindings,
        seed: header.seed,
    };
    config.validate()?;
    let n_particles = config.particles.len();
    let n_decoys = config.decoy_arms().len();

    let mut actions = Vec::with_capacity(header.n_actions);
    let mut decoy_actions = vec![Vec::with_capacity(header.n_actions); n_decoys];
    let mut frames = Vec::new();
    let mut gt_ee = Vec::new();
    let mut tracks = vec![ParticleTrack { positions: Vec::new() }; n_particles];
    for (expected_t, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StepRecord = serde_json::from_str(&line)?;
        if rec.t != expected_t {
            return Err(Error::MalformedLog(format!("expected t={expected_t}, found {}", rec.t)));
        }
        if rec.obs.len() != n_particles {
            return Err(Error::MalformedLog(format!("frame {} has {} observations", rec.t, rec.obs.len())));
        }
        if let Some(a) = rec.action {
            if a.len() != header.d {
                return Err(Error::MalformedLog(format!("action at t={} has wrong dimension", rec.t)));
            }
            actions.push(a);
            if rec.decoy_actions.len() != n_decoys {
                return Err(Error::MalformedLog(format!("decoy actions missing at t={}", rec.t)));
            }
            for (k, a) in rec.decoy_actions.into_iter().enumerate() {
                decoy_actions[k].push(a);
            }
        }
        for (track, o) in tracks.iter_mut().zip(rec.obs) {
            track.positions.push(o);
        }
        gt_ee.push(GroundTruth {
            world: rec.gt_ee_world,
            image: rec.gt_ee,
        });
        frames.push(rec.state);
    }
    if actions.len() != header.n_actions || frames.len() != header.n_actions + 1 {
        return Err(Error::MalformedLog(format!(
            "header announces {} actions, found {} actions and {} frames",
            header.n_actions,
            actions.len(),
            frames.len()
        )));
    }
    if header.body_mask.len() != n_particles {
        return Err(Error::MalformedLog("body mask length mismatch".into()));
    }
    Ok(ExplorationLog {
        config,
        action_scale: header.action_scale,
        actions,
        decoy_actions,
        tracks,
        frames,
        gt_ee,
        body_mask: header.body_mask,
    })
}
