//! Run configuration: built-in defaults, optional TOML file, command-line
//! overrides. The fully resolved configuration is echoed into every output
//! directory as `config.resolved` so artifacts are reproducible from their
//! on-disk description alone.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use driftbench_core::data::CollectConfig;
use driftbench_core::expert::ExpertParams;
use driftbench_core::nn::OptAlgo;
use driftbench_core::policy::{Arch, PolicySpec, TrainHyper};
use driftbench_core::procgen::{CanyonParams, CorridorParams, ForestParams, GenParams, SandboxParams};
use driftbench_core::render::CameraModel;
use driftbench_core::sim::{DroneState, EnvKind, EpisodeConfig, Pose};

/// Everything a run needs, with documented defaults.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stage derives its own sub-streams from it.
    pub master_seed: u64,
    /// Worker threads for collection / population runs; 0 = all cores.
    pub jobs: usize,
    pub sim: SimSection,
    pub camera: CameraModel,
    pub canyon: CanyonParams,
    pub forest: ForestParams,
    pub sandbox: SandboxParams,
    pub corridor: CorridorParams,
    pub expert: ExpertParams,
    pub policy: PolicySection,
    pub train: TrainSection,
    pub collect: CollectSection,
    pub eval: EvalSection,
    pub bench: BenchSection,
    pub acd: AcdSection,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub max_steps: usize,
    pub forward_speed: f64,
    pub body_radius: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 0.05,
            max_steps: 1200,
            forward_speed: 1.3,
            body_radius: 0.25,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub conv_channels: Vec<usize>,
    pub hidden: usize,
    pub depth_hidden: usize,
    pub beta: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        let spec = PolicySpec::default();
        PolicySection {
            conv_channels: spec.conv_channels,
            hidden: spec.hidden,
            depth_hidden: spec.depth_hidden,
            beta: spec.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub algorithm: OptAlgoName,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Every n-th stacked sample enters the dataset.
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptAlgoName {
    Adam,
    Sgd,
    SgdMomentum,
}

impl OptAlgoName {
    pub fn to_algo(self) -> OptAlgo {
        match self {
            OptAlgoName::Adam => OptAlgo::Adam,
            OptAlgoName::Sgd => OptAlgo::SgdMomentum { momentum: 0.0 },
            OptAlgoName::SgdMomentum => OptAlgo::SgdMomentum { momentum: 0.9 },
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            algorithm: OptAlgoName::Adam,
            lr: 1e-4,
            batch_size: 32,
            epochs: 20,
            stride: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectSection {
    pub flights_per_kind: usize,
}

impl Default for CollectSection {
    fn default() -> Self {
        CollectSection {
            flights_per_kind: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub runs: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { runs: 10 }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// Policies trained per architecture.
    pub population: usize,
    /// Demonstration flights collected per training kind for the shared
    /// benchmark dataset.
    pub flights_per_kind: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            population: 10,
            flights_per_kind: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcdSection {
    pub trajectories: usize,
}

impl Default for AcdSection {
    fn default() -> Self {
        AcdSection { trajectories: 25 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            jobs: 0,
            sim: SimSection::default(),
            camera: CameraModel::default(),
            canyon: CanyonParams::default(),
            forest: ForestParams::default(),
            sandbox: SandboxParams::default(),
            corridor: CorridorParams::default(),
            expert: ExpertParams::default(),
            policy: PolicySection::default(),
            train: TrainSection::default(),
            collect: CollectSection::default(),
            eval: EvalSection::default(),
            bench: BenchSection::default(),
            acd: AcdSection::default(),
        }
    }
}

impl RunConfig {
    /// Load from a TOML file, or the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    /// Serialize the resolved configuration (TOML).
    pub fn resolved_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Write `config.resolved` into an output directory.
    pub fn echo_into(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.resolved"), self.resolved_toml()?)?;
        Ok(())
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            canyon: self.canyon,
            forest: self.forest,
            sandbox: self.sandbox,
            corridor: self.corridor,
        }
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            dt: self.sim.dt,
            max_steps: self.sim.max_steps,
        }
    }

    pub fn drone(&self) -> DroneState {
        DroneState {
            pose: Pose::origin(),
            forward_speed: self.sim.forward_speed,
            body_radius: self.sim.body_radius,
        }
    }

    pub fn policy_spec(&self, arch: Arch) -> PolicySpec {
        PolicySpec {
            arch,
            input_height: self.camera.image_height,
            input_width: self.camera.image_width,
            conv_channels: self.policy.conv_channels.clone(),
            hidden: self.policy.hidden,
            depth_hidden: self.policy.depth_hidden,
            beta: self.policy.beta,
            ..PolicySpec::default()
        }
    }

    pub fn train_hyper(&self, seed: u64) -> TrainHyper {
        TrainHyper {
            algorithm: self.train.algorithm.to_algo(),
            lr: self.train.lr,
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            seed,
        }
    }

    pub fn collect_config(&self, kinds: Vec<EnvKind>, flights: usize) -> CollectConfig {
        CollectConfig {
            flights_per_kind: flights,
            kinds,
            master_seed: self.master_seed,
            expert: self.expert,
            cam: self.camera,
            episode: self.episode(),
            gen: self.gen_params(),
            drone: self.drone(),
        }
    }

    /// Worker thread count (0 means all available cores).
    pub fn effective_jobs(&self) -> usize {
        if self.jobs == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.jobs
        }
    }
}

/// Fallback data root from the environment when a path flag is omitted.
pub fn data_root() -> Option<PathBuf> {
    std::env::var_os("DRIFTBENCH_DATA").map(PathBuf::from)
}

/// Resolve an optional path flag against `DRIFTBENCH_DATA/<subdir>`.
pub fn resolve_path(flag: Option<PathBuf>, subdir: &str, what: &str) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p);
    }
    if let Some(root) = data_root() {
        return Ok(root.join(subdir));
    }
    anyhow::bail!("no {what} path given and DRIFTBENCH_DATA is not set")
}
