//! The evaluation protocol: online distance metrics, policy populations,
//! top-k selection, percentile curves, and almost-collision classification.

mod report;

pub use report::{acd_md, curve_svg, emit_report, population_csv, topk_md_from_csv, BenchReport};

use crate::data::acd::{AcdSet, Cue};
use crate::data::Dataset;
use crate::expert::AvoidLabel;
use crate::policy::{bc_train, build, Arch, PolicyController, PolicyNet, PolicySpec, TrainHyper};
use crate::procgen::{generate, CorridorParams, GenParams};
use crate::render::{CameraModel, Frame};
use crate::rng::{derive3, stream};
use crate::sim::{
    run_episode, Controller, DroneState, EnvKind, EpisodeConfig, EpisodeResult, Termination,
};
use crate::{Error, Result};

/// Discretize a continuous yaw command with thresholds at exactly +-0.3
/// (strict inequalities; positive yaw turns left).
pub fn discretize(yaw_rate: f64) -> AvoidLabel {
    if yaw_rate > 0.3 {
        AvoidLabel::Left
    } else if yaw_rate < -0.3 {
        AvoidLabel::Right
    } else {
        AvoidLabel::Straight
    }
}

// --- Online evaluation -------------------------------------------------------

/// Configuration of one online evaluation (one environment kind).
#[derive(Debug, Clone)]
pub struct OnlineEvalConfig {
    pub kind: EnvKind,
    /// Number of runs averaged (default 10).
    pub runs: usize,
    /// Eval world seeds derive from this master seed on the evaluation
    /// stream, disjoint from every collection stream seed.
    pub master_seed: u64,
    pub cam: CameraModel,
    pub episode: EpisodeConfig,
    pub drone: DroneState,
    pub gen: GenParams,
}

impl OnlineEvalConfig {
    pub fn new(kind: EnvKind, master_seed: u64) -> OnlineEvalConfig {
        OnlineEvalConfig {
            kind,
            runs: 10,
            master_seed,
            cam: CameraModel::default(),
            episode: EpisodeConfig::default(),
            drone: DroneState::default(),
            gen: GenParams::default(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RunOutcome {
    pub run: usize,
    pub world_seed: u64,
    /// Corridor direction for this run (always false elsewhere).
    pub reverse: bool,
    pub distance: f64,
    pub termination: Termination,
    pub steps: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OnlineEval {
    pub kind: EnvKind,
    pub avg_distance: f64,
    pub runs: Vec<RunOutcome>,
}

/// The world seed used for evaluation run `run` of `kind`.
pub fn eval_world_seed(master_seed: u64, kind: EnvKind, run: usize) -> u64 {
    derive3(master_seed, stream::EVAL, kind.index(), run as u64)
}

/// The world for one evaluation run. Canyon/forest/sandbox worlds are
/// freshly generated from evaluation seeds; the corridor is fixed and only
/// its direction alternates, splitting the runs evenly between the two ends.
pub fn eval_world(cfg: &OnlineEvalConfig, run: usize) -> Result<crate::sim::World> {
    let seed = eval_world_seed(cfg.master_seed, cfg.kind, run);
    if cfg.kind == EnvKind::Corridor {
        let gen = GenParams {
            corridor: CorridorParams {
                reverse: run % 2 == 1,
            },
            ..cfg.gen.clone()
        };
        generate(EnvKind::Corridor, seed, &gen)
    } else {
        generate(cfg.kind, seed, &cfg.gen)
    }
}

/// Average collision-free distance over the configured runs. The controller
/// factory builds one fresh controller per run.
pub fn eval_online(
    make_controller: &mut dyn FnMut() -> Box<dyn Controller>,
    cfg: &OnlineEvalConfig,
) -> Result<OnlineEval> {
    if cfg.runs == 0 {
        return Err(Error::invalid("online evaluation needs at least one run"));
    }
    let mut runs = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let world = eval_world(cfg, run)?;
        let mut controller = make_controller();
        let result: EpisodeResult = run_episode(
            &world,
            &cfg.cam,
            &cfg.drone,
            controller.as_mut(),
            &cfg.episode,
            None,
        )?;
        runs.push(RunOutcome {
            run,
            world_seed: world.seed,
            reverse: cfg.kind == EnvKind::Corridor && run % 2 == 1,
            distance: result.distance_traveled,
            termination: result.termination,
            steps: result.steps,
        });
    }
    let avg_distance = runs.iter().map(|r| r.distance).sum::<f64>() / runs.len() as f64;
    Ok(OnlineEval {
        kind: cfg.kind,
        avg_distance,
        runs,
    })
}

/// Error if any seed appears in both sets (asserted at bench time: training
/// and evaluation world seeds come from different streams).
pub fn assert_seed_hygiene(train_seeds: &[u64], eval_seeds: &[u64]) -> Result<()> {
    let train: std::collections::BTreeSet<u64> = train_seeds.iter().copied().collect();
    for s in eval_seeds {
        if train.contains(s) {
            return Err(Error::invalid(format!(
                "seed hygiene violation: world seed {s} used for both training and evaluation"
            )));
        }
    }
    Ok(())
}

// --- Populations --------------------------------------------------------------

/// One trained policy's online performance across all environment kinds.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PolicyEval {
    pub index: usize,
    pub train_seed: u64,
    /// Average distances indexed by `EnvKind::index()`:
    /// canyon, forest, sandbox, corridor.
    pub distances: [f64; 4],
}

impl PolicyEval {
    pub fn corridor(&self) -> f64 {
        self.distances[EnvKind::Corridor.index() as usize]
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PopulationResult {
    pub arch: Arch,
    pub policies: Vec<PolicyEval>,
    /// Permutation of policy positions, best corridor distance first.
    pub ranking: Vec<usize>,
    /// `(percent of ranked population, corridor distance)` samples.
    pub percentile_curve: Vec<(f64, f64)>,
    /// Policies whose training aborted, with the reason; excluded above.
    pub failures: Vec<(usize, String)>,
}

impl PopulationResult {
    /// Rank evaluated policies by corridor distance (descending; ties keep
    /// training order) and derive the percentile curve.
    pub fn assemble(arch: Arch, policies: Vec<PolicyEval>, failures: Vec<(usize, String)>) -> Self {
        let mut ranking: Vec<usize> = (0..policies.len()).collect();
        ranking.sort_by(|&a, &b| {
            policies[b]
                .corridor()
                .partial_cmp(&policies[a].corridor())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let n = policies.len();
        let percentile_curve = ranking
            .iter()
            .enumerate()
            .map(|(j, &idx)| {
                (
                    100.0 * (j + 1) as f64 / n as f64,
                    policies[idx].corridor(),
                )
            })
            .collect();
        PopulationResult {
            arch,
            policies,
            ranking,
            percentile_curve,
            failures,
        }
    }

    /// Mean distance in `kind` over the `k` policies with the best corridor
    /// distance (the paper's selection rule: selection is always by corridor
    /// performance, reporting is per environment).
    pub fn top_k_mean(&self, k: usize, kind: EnvKind) -> f64 {
        let k = k.min(self.ranking.len());
        if k == 0 {
            return f64::NAN;
        }
        self.ranking[..k]
            .iter()
            .map(|&i| self.policies[i].distances[kind.index() as usize])
            .sum::<f64>()
            / k as f64
    }

    /// Rank positions of the top-k policies.
    pub fn top_k_indices(&self, k: usize) -> &[usize] {
        &self.ranking[..k.min(self.ranking.len())]
    }

    pub fn median_corridor(&self) -> f64 {
        let mut d: Vec<f64> = self.policies.iter().map(|p| p.corridor()).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if d.is_empty() {
            return f64::NAN;
        }
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        }
    }
}

/// Population training configuration.
#[derive(Debug, Clone)]
pub struct PopulationConfig {
    pub n_policies: usize,
    pub master_seed: u64,
    pub spec: PolicySpec,
    pub hyper: TrainHyper,
    pub eval_runs: usize,
    pub cam: CameraModel,
    pub episode: EpisodeConfig,
    pub drone: DroneState,
    pub gen: GenParams,
}

impl PopulationConfig {
    pub fn new(arch: Arch, n_policies: usize, master_seed: u64) -> PopulationConfig {
        PopulationConfig {
            n_policies,
            master_seed,
            spec: PolicySpec::with_arch(arch),
            hyper: TrainHyper::default(),
            eval_runs: 10,
            cam: CameraModel::default(),
            episode: EpisodeConfig::default(),
            drone: DroneState::default(),
            gen: GenParams::default(),
        }
    }

    pub fn train_seed(&self, policy_index: usize) -> u64 {
        derive3(
            self.master_seed,
            stream::TRAIN,
            self.spec.arch as u64,
            policy_index as u64,
        )
    }

    fn eval_cfg(&self, kind: EnvKind) -> OnlineEvalConfig {
        OnlineEvalConfig {
            kind,
            runs: self.eval_runs,
            master_seed: self.master_seed,
            cam: self.cam,
            episode: self.episode,
            drone: self.drone,
            gen: self.gen.clone(),
        }
    }
}

/// Train one population member and evaluate it online in all four kinds.
/// Returns the trained net too so callers can classify or persist it.
pub fn train_and_eval_one(
    cfg: &PopulationConfig,
    data: &Dataset,
    policy_index: usize,
) -> Result<(PolicyEval, PolicyNet<f32>)> {
    let seed = cfg.train_seed(policy_index);
    let mut net = build::<f32>(&cfg.spec, seed)?;
    let hyper = TrainHyper { seed, ..cfg.hyper };
    bc_train(&mut net, data, &hyper)?;
    let mut distances = [0.0f64; 4];
    for kind in EnvKind::ALL {
        let eval = eval_policy_online(&net, &cfg.eval_cfg(kind))?;
        distances[kind.index() as usize] = eval.avg_distance;
    }
    Ok((
        PolicyEval {
            index: policy_index,
            train_seed: seed,
            distances,
        },
        net,
    ))
}

/// Evaluate one policy online (fresh controller per run).
pub fn eval_policy_online(net: &PolicyNet<f32>, cfg: &OnlineEvalConfig) -> Result<OnlineEval> {
    let mut make = || -> Box<dyn Controller> { Box::new(PolicyController::new(net.clone())) };
    eval_online(&mut make, cfg)
}

/// Train and evaluate a whole population (serially). Training failures are
/// recorded and the policy excluded from the ranking.
pub fn run_population(cfg: &PopulationConfig, data: &Dataset) -> Result<PopulationResult> {
    if cfg.n_policies == 0 {
        return Err(Error::invalid("population needs at least one policy"));
    }
    let mut policies = Vec::new();
    let mut failures = Vec::new();
    for j in 0..cfg.n_policies {
        match train_and_eval_one(cfg, data, j) {
            Ok((eval, _)) => policies.push(eval),
            Err(e) => failures.push((j, e.to_string())),
        }
    }
    Ok(PopulationResult::assemble(cfg.spec.arch, policies, failures))
}

// --- Almost-collision classification -----------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrajectoryOutcome {
    pub dir: String,
    pub location_id: u32,
    pub cue: Cue,
    pub target: AvoidLabel,
    pub predicted: AvoidLabel,
    pub correct: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ClassificationResult {
    /// Accuracy (percent) per location id, 7 rows.
    pub per_location: Vec<(u32, f64)>,
    /// Accuracy (percent) per visual cue, 3 rows.
    pub per_cue: Vec<(Cue, f64)>,
    /// Unweighted mean of the location accuracies.
    pub location_avg: f64,
    /// Unweighted mean of the cue accuracies.
    pub cue_avg: f64,
    /// Fraction of all prediction windows that matched the label, percent.
    pub per_frame_accuracy: f64,
    pub trajectories: Vec<TrajectoryOutcome>,
}

/// Number of final windows (1 s at 20 fps) whose majority vote scores a
/// trajectory.
const DECISION_WINDOWS: usize = 20;

/// Classify every trajectory with an arbitrary frame-based predictor:
/// `predict(newest, prev, prev2)` returns a yaw command.
pub fn classify_eval_with(
    predict: &mut dyn FnMut(&Frame, &Frame, &Frame) -> Result<f64>,
    set: &AcdSet,
) -> Result<ClassificationResult> {
    let mut outcomes = Vec::with_capacity(set.trajectories.len());
    let mut window_hits = 0usize;
    let mut window_total = 0usize;

    for traj in &set.trajectories {
        let frames = &traj.frames;
        if frames.len() < 3 {
            return Err(Error::invalid(format!(
                "trajectory {} has fewer than 3 frames",
                traj.meta.dir
            )));
        }
        let mut labels = Vec::with_capacity(frames.len() - 2);
        for t in 2..frames.len() {
            let yaw = predict(&frames[t], &frames[t - 1], &frames[t - 2])?;
            let label = discretize(yaw);
            if label == traj.meta.label {
                window_hits += 1;
            }
            window_total += 1;
            labels.push(label);
        }
        // Majority vote over the final second of windows; ties go to the
        // most recent window's label among the tied counts.
        let tail = &labels[labels.len().saturating_sub(DECISION_WINDOWS)..];
        let count = |l: AvoidLabel| tail.iter().filter(|&&x| x == l).count();
        let counts = [
            (AvoidLabel::Left, count(AvoidLabel::Left)),
            (AvoidLabel::Straight, count(AvoidLabel::Straight)),
            (AvoidLabel::Right, count(AvoidLabel::Right)),
        ];
        let best = counts.iter().map(|&(_, c)| c).max().unwrap();
        let predicted = *tail
            .iter()
            .rev()
            .find(|&&l| count(l) == best)
            .expect("nonempty tail");
        outcomes.push(TrajectoryOutcome {
            dir: traj.meta.dir.clone(),
            location_id: traj.meta.location_id,
            cue: traj.meta.cue,
            target: traj.meta.label,
            predicted,
            correct: predicted == traj.meta.label,
        });
    }

    let accuracy_over = |pred: &dyn Fn(&TrajectoryOutcome) -> bool| -> f64 {
        let group: Vec<&TrajectoryOutcome> = outcomes.iter().filter(|o| pred(o)).collect();
        if group.is_empty() {
            return f64::NAN;
        }
        100.0 * group.iter().filter(|o| o.correct).count() as f64 / group.len() as f64
    };

    let mut per_location = Vec::new();
    for loc in 1..=crate::data::acd::LOCATION_COUNT {
        per_location.push((loc, accuracy_over(&|o| o.location_id == loc)));
    }
    let mut per_cue = Vec::new();
    for cue in [Cue::Perspective, Cue::Vertical, Cue::Strange] {
        per_cue.push((cue, accuracy_over(&|o| o.cue == cue)));
    }
    let location_avg =
        per_location.iter().map(|&(_, a)| a).sum::<f64>() / per_location.len() as f64;
    let cue_avg = per_cue.iter().map(|&(_, a)| a).sum::<f64>() / per_cue.len() as f64;

    Ok(ClassificationResult {
        per_location,
        per_cue,
        location_avg,
        cue_avg,
        per_frame_accuracy: 100.0 * window_hits as f64 / window_total.max(1) as f64,
        trajectories: outcomes,
    })
}

/// Classify with a trained policy (depth head ignored).
pub fn classify_eval(net: &PolicyNet<f32>, set: &AcdSet) -> Result<ClassificationResult> {
    let mut predict = |newest: &Frame, prev: &Frame, prev2: &Frame| -> Result<f64> {
        Ok(net.act(newest, prev, prev2)?.yaw_rate)
    };
    classify_eval_with(&mut predict, set)
}
