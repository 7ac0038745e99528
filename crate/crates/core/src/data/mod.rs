//! Demonstration collection and bit-exact dataset serialization.
//!
//! One episode is one directory:
//!
//! ```text
//! ep_000/
//!   meta.json        episode manifest (env kind, seed, camera, outcome)
//!   frames.pgm.seq   concatenated binary P5 images, one per step
//!   depth.f32        raw little-endian f32 depth targets, 55x74 per step
//!   actions.csv      step, expert_yaw, applied_yaw, x, y, heading
//! ```
//!
//! Floats in text files carry 17 significant digits, so persist -> load
//! reproduces every value bit for bit.

pub mod acd;

use std::path::Path;

use crate::expert::{ExpertController, ExpertParams};
use crate::procgen::{generate, GenParams};
use crate::render::{
    read_pgm_seq, render_depth, write_pgm, CameraModel, DepthFrame, Frame, DEPTH_COLS, DEPTH_ROWS,
};
use crate::rng::{derive3, stream};
use crate::sim::{
    run_episode, Action, DroneState, EnvKind, EpisodeConfig, ObsCtx, Pose, StepObserver,
    Termination, World,
};
use crate::util::fmt_f64;
use crate::{Error, Result};

/// Per-episode manifest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RecordManifest {
    pub env_kind: EnvKind,
    pub seed: u64,
    pub fps: f64,
    pub frames: usize,
    pub camera: CameraModel,
    /// "training" or "held_out".
    pub style_pool: String,
    pub termination: Termination,
    pub distance_traveled: f64,
}

/// One recorded demonstration flight.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub manifest: RecordManifest,
    pub frames: Vec<Frame>,
    pub depths: Vec<DepthFrame>,
    pub expert_yaw: Vec<f64>,
    pub applied_yaw: Vec<f64>,
    /// Pose at which each frame was rendered.
    pub poses: Vec<Pose>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn persist(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("meta.json"), crate::util::to_json_vec(&self.manifest)?)?;

        let mut pgm = Vec::new();
        for f in &self.frames {
            write_pgm(&mut pgm, f)?;
        }
        std::fs::write(dir.join("frames.pgm.seq"), pgm)?;

        let mut depth = Vec::with_capacity(self.depths.len() * DEPTH_ROWS * DEPTH_COLS * 4);
        for d in &self.depths {
            for v in &d.data {
                depth.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(dir.join("depth.f32"), depth)?;

        let mut csv = String::from("step,expert_yaw,applied_yaw,x,y,heading\n");
        for i in 0..self.len() {
            let p = &self.poses[i];
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i,
                fmt_f64(self.expert_yaw[i]),
                fmt_f64(self.applied_yaw[i]),
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.heading)
            ));
        }
        std::fs::write(dir.join("actions.csv"), csv)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<EpisodeRecord> {
        let manifest: RecordManifest =
            crate::util::from_json_slice(&std::fs::read(dir.join("meta.json"))?)?;
        let frames = read_pgm_seq(&std::fs::read(dir.join("frames.pgm.seq"))?)?;

        let depth_bytes = std::fs::read(dir.join("depth.f32"))?;
        let per = DEPTH_ROWS * DEPTH_COLS * 4;
        if depth_bytes.len() % per != 0 {
            return Err(Error::Format(format!(
                "{}: depth.f32 length {} is not a whole number of frames",
                dir.display(),
                depth_bytes.len()
            )));
        }
        let depths: Vec<DepthFrame> = depth_bytes
            .chunks_exact(per)
            .map(|chunk| DepthFrame {
                data: chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            })
            .collect();

        let csv = std::fs::read_to_string(dir.join("actions.csv"))?;
        let mut expert_yaw = Vec::new();
        let mut applied_yaw = Vec::new();
        let mut poses = Vec::new();
        for (ln, line) in csv.lines().enumerate() {
            if ln == 0 {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(Error::Format(format!(
                    "{}: actions.csv line {ln} has {} columns",
                    dir.display(),
                    cols.len()
                )));
            }
            let f = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Format(format!("bad float '{s}' in actions.csv")))
            };
            expert_yaw.push(f(cols[1])?);
            applied_yaw.push(f(cols[2])?);
            poses.push(Pose {
                x: f(cols[3])?,
                y: f(cols[4])?,
                heading: f(cols[5])?,
            });
        }

        let rec = EpisodeRecord {
            manifest,
            frames,
            depths,
            expert_yaw,
            applied_yaw,
            poses,
        };
        if rec.frames.len() != rec.manifest.frames
            || rec.depths.len() != rec.manifest.frames
            || rec.expert_yaw.len() != rec.manifest.frames
        {
            return Err(Error::Format(format!(
                "{}: inconsistent sequence lengths",
                dir.display()
            )));
        }
        Ok(rec)
    }
}

/// Stacked training sample: frames `(t-2, t-1, t)` in order, with the expert
/// action and depth target at `t` (the depth target is absent when the
/// record was loaded without depth frames).
pub fn stack_frames(
    record: &EpisodeRecord,
    t: usize,
) -> Result<([&Frame; 3], f64, Option<&DepthFrame>)> {
    if t < 2 || t >= record.len() {
        return Err(Error::invalid(format!(
            "stack_frames: step {t} out of range for episode of length {}",
            record.len()
        )));
    }
    Ok((
        [&record.frames[t - 2], &record.frames[t - 1], &record.frames[t]],
        record.expert_yaw[t],
        record.depths.get(t),
    ))
}

// --- Collection ------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CollectConfig {
    pub flights_per_kind: usize,
    pub kinds: Vec<EnvKind>,
    pub master_seed: u64,
    pub expert: ExpertParams,
    pub cam: CameraModel,
    pub episode: EpisodeConfig,
    pub gen: GenParams,
    pub drone: DroneState,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            flights_per_kind: 100,
            kinds: EnvKind::TRAINING.to_vec(),
            master_seed: 0,
            expert: ExpertParams::default(),
            cam: CameraModel::default(),
            episode: EpisodeConfig::default(),
            gen: GenParams::default(),
            drone: DroneState::default(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct KindSummary {
    pub kind: EnvKind,
    pub flights: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub total_frames: usize,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CollectionSummary {
    pub master_seed: u64,
    pub per_kind: Vec<KindSummary>,
}

/// The world seed for flight `i` of `kind` under `master_seed`.
pub fn collect_world_seed(master_seed: u64, kind: EnvKind, i: usize) -> u64 {
    derive3(master_seed, stream::COLLECT, kind.index(), i as u64)
}

/// Observer that captures the full demonstration record.
struct Recorder<'a> {
    expert: ExpertParams,
    cam: &'a CameraModel,
    frames: Vec<Frame>,
    depths: Vec<DepthFrame>,
    expert_yaw: Vec<f64>,
    applied_yaw: Vec<f64>,
    poses: Vec<Pose>,
}

impl StepObserver for Recorder<'_> {
    fn on_step(&mut self, _step: usize, ctx: &ObsCtx<'_>, action: Action) {
        self.frames.push(ctx.frame.clone());
        self.depths.push(render_depth(ctx.world, ctx.pose, self.cam));
        // The pilot is the demonstrator, so the applied action is the expert
        // action; both columns are recorded for controllers that diverge.
        let _ = &self.expert;
        self.expert_yaw.push(action.yaw_rate);
        self.applied_yaw.push(action.yaw_rate);
        self.poses.push(*ctx.pose);
    }
}

/// Fly one demonstration episode and build its record.
pub fn record_flight(cfg: &CollectConfig, kind: EnvKind, index: usize) -> Result<EpisodeRecord> {
    let world_seed = collect_world_seed(cfg.master_seed, kind, index);
    let world = generate(kind, world_seed, &cfg.gen)?;
    record_flight_in_world(cfg, &world, world_seed)
}

pub fn record_flight_in_world(
    cfg: &CollectConfig,
    world: &World,
    world_seed: u64,
) -> Result<EpisodeRecord> {
    let mut recorder = Recorder {
        expert: cfg.expert,
        cam: &cfg.cam,
        frames: Vec::new(),
        depths: Vec::new(),
        expert_yaw: Vec::new(),
        applied_yaw: Vec::new(),
        poses: Vec::new(),
    };
    let mut pilot = ExpertController::new(cfg.expert);
    let result = run_episode(
        world,
        &cfg.cam,
        &cfg.drone,
        &mut pilot,
        &cfg.episode,
        Some(&mut recorder),
    )?;
    Ok(EpisodeRecord {
        manifest: RecordManifest {
            env_kind: world.env_kind,
            seed: world_seed,
            fps: 1.0 / cfg.episode.dt,
            frames: recorder.frames.len(),
            camera: cfg.cam,
            style_pool: if world.env_kind == EnvKind::Corridor {
                "held_out".to_string()
            } else {
                "training".to_string()
            },
            termination: result.termination,
            distance_traveled: result.distance_traveled,
        },
        frames: recorder.frames,
        depths: recorder.depths,
        expert_yaw: recorder.expert_yaw,
        applied_yaw: recorder.applied_yaw,
        poses: recorder.poses,
    })
}

pub fn episode_dir(out_root: &Path, kind: EnvKind, index: usize) -> std::path::PathBuf {
    out_root.join(kind.name()).join(format!("ep_{index:03}"))
}

/// Run one collection job and persist it.
pub fn run_collect_job(
    cfg: &CollectConfig,
    kind: EnvKind,
    index: usize,
    out_root: &Path,
) -> Result<(Termination, usize)> {
    let record = record_flight(cfg, kind, index)?;
    record.persist(&episode_dir(out_root, kind, index))?;
    Ok((record.manifest.termination, record.len()))
}

/// Collect `flights_per_kind` expert demonstrations per kind, persisting
/// every episode (including collisions) plus a `summary.json`. Fully
/// deterministic in the master seed.
pub fn collect(cfg: &CollectConfig, out_root: &Path) -> Result<CollectionSummary> {
    let mut results = Vec::new();
    for &kind in &cfg.kinds {
        for i in 0..cfg.flights_per_kind {
            results.push((kind, run_collect_job(cfg, kind, i, out_root)?));
        }
    }
    write_summary(cfg, &results, out_root)
}

/// Aggregate per-job outcomes (in job order) into the summary file.
pub fn write_summary(
    cfg: &CollectConfig,
    results: &[(EnvKind, (Termination, usize))],
    out_root: &Path,
) -> Result<CollectionSummary> {
    let mut per_kind = Vec::new();
    for &kind in &cfg.kinds {
        let mut s = KindSummary {
            kind,
            flights: 0,
            successes: 0,
            collisions: 0,
            timeouts: 0,
            total_frames: 0,
        };
        for (k, (term, frames)) in results {
            if *k != kind {
                continue;
            }
            s.flights += 1;
            s.total_frames += frames;
            match term {
                Termination::Success => s.successes += 1,
                Termination::Collision => s.collisions += 1,
                Termination::Timeout => s.timeouts += 1,
            }
        }
        per_kind.push(s);
    }
    let summary = CollectionSummary {
        master_seed: cfg.master_seed,
        per_kind,
    };
    if cfg.flights_per_kind > 0 {
        std::fs::create_dir_all(out_root)?;
        std::fs::write(out_root.join("summary.json"), crate::util::to_json_vec(&summary)?)?;
    }
    Ok(summary)
}

// --- Dataset assembly -------------------------------------------------------

/// In-memory training dataset: episodes plus the stacked-sample index.
pub struct Dataset {
    pub episodes: Vec<EpisodeRecord>,
    /// `(episode, t)` pairs with `t >= 2`, stride-subsampled; episodes that
    /// ended in collision contribute no samples from their final 10 steps.
    pub samples: Vec<(u32, u32)>,
    pub with_depth: bool,
}

/// Steps excluded from the end of collision-terminated demonstrations.
pub const COLLISION_TRIM: usize = 10;

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        let cam = &self.episodes[0].manifest.camera;
        (cam.image_height, cam.image_width)
    }

    /// Build the sample index for one episode.
    fn index_episode(record: &EpisodeRecord, ep: u32, stride: usize, out: &mut Vec<(u32, u32)>) {
        let n = record.len();
        let t_max = if record.manifest.termination == Termination::Collision {
            n.saturating_sub(COLLISION_TRIM)
        } else {
            n
        };
        let mut t = 2;
        while t < t_max {
            out.push((ep, t as u32));
            t += stride;
        }
    }

    /// Load every episode under `root` (sorted by kind directory then
    /// episode name, so the order is deterministic).
    pub fn load(root: &Path, stride: usize, with_depth: bool) -> Result<Dataset> {
        if stride == 0 {
            return Err(Error::invalid("dataset stride must be at least 1"));
        }
        let mut episode_dirs = Vec::new();
        let mut kind_dirs: Vec<_> = std::fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        kind_dirs.sort();
        for kd in kind_dirs {
            let mut eps: Vec<_> = std::fs::read_dir(&kd)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_dir() && p.join("meta.json").exists())
                .collect();
            eps.sort();
            episode_dirs.extend(eps);
        }
        if episode_dirs.is_empty() {
            return Err(Error::invalid(format!(
                "no episodes found under {}",
                root.display()
            )));
        }
        let mut episodes = Vec::with_capacity(episode_dirs.len());
        let mut samples = Vec::new();
        for dir in &episode_dirs {
            let mut rec = EpisodeRecord::load(dir)?;
            if !with_depth {
                rec.depths.clear();
                rec.depths.shrink_to_fit();
            }
            Dataset::index_episode(&rec, episodes.len() as u32, stride, &mut samples);
            episodes.push(rec);
        }
        Ok(Dataset {
            episodes,
            samples,
            with_depth,
        })
    }

    pub fn from_records(records: Vec<EpisodeRecord>, stride: usize, with_depth: bool) -> Dataset {
        let mut samples = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            Dataset::index_episode(rec, i as u32, stride, &mut samples);
        }
        Dataset {
            episodes: records,
            samples,
            with_depth,
        }
    }
}
