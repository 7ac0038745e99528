use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use driftbench_core::data::Dataset;
use driftbench_core::policy::{bc_train, build, Arch};
use driftbench_core::rng::{derive3, stream};

use crate::config::resolve_path;
use crate::Common;

pub struct Overrides {
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub stride: Option<usize>,
    pub beta: Option<f64>,
}

pub fn run(
    common: &Common,
    arch: &str,
    data: Option<PathBuf>,
    out: &Path,
    ov: Overrides,
) -> Result<()> {
    let mut cfg = super::resolve_config(common)?;
    if let Some(epochs) = ov.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(lr) = ov.lr {
        cfg.train.lr = lr;
    }
    if let Some(batch) = ov.batch {
        cfg.train.batch_size = batch;
    }
    if let Some(stride) = ov.stride {
        cfg.train.stride = stride;
    }
    if let Some(beta) = ov.beta {
        cfg.policy.beta = beta;
    }

    let arch: Arch = arch.parse()?;
    let data_root = resolve_path(data, "dataset", "data")?;
    let spec = cfg.policy_spec(arch);
    let with_depth = arch == Arch::Auxd && spec.beta != 0.0;

    eprintln!("loading dataset from {}", data_root.display());
    let dataset = Dataset::load(&data_root, cfg.train.stride, with_depth)?;
    eprintln!(
        "training {arch} on {} samples from {} episodes ({} epochs)",
        dataset.n_samples(),
        dataset.episodes.len(),
        cfg.train.epochs
    );

    let train_seed = derive3(cfg.master_seed, stream::TRAIN, arch as u64, 0);
    let mut net = build::<f32>(&spec, train_seed)?;
    let report = bc_train(&mut net, &dataset, &cfg.train_hyper(train_seed))?;
    net.save(out)
        .with_context(|| format!("writing model {}", out.display()))?;

    // Report next to the model; wall time goes to stderr only so reruns are
    // byte-identical.
    let report_path = out.with_extension("train_report.json");
    let doc = serde_json::json!({
        "report": report,
        "config": toml::to_string_pretty(&cfg)?,
    });
    std::fs::write(&report_path, serde_json::to_vec_pretty(&doc)?)?;

    eprintln!(
        "final control mse {:.5} (depth mse {:.5}) in {:.1}s -> {} + {}",
        report.final_control_loss,
        report.final_depth_loss,
        report.wall_time_s,
        out.display(),
        report_path.display()
    );
    Ok(())
}
