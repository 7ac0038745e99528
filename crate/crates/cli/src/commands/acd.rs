use std::path::{Path, PathBuf};

use anyhow::Result;
use driftbench_core::bench::classify_eval;
use driftbench_core::data::acd::{gen_almost_collision, AcdConfig, AcdSet};
use driftbench_core::policy::PolicyNet;

use crate::config::resolve_path;
use crate::Common;

pub fn run_gen(common: &Common, out: Option<PathBuf>, trajectories: Option<usize>) -> Result<()> {
    let cfg = super::resolve_config(common)?;
    let out_root = resolve_path(out, "acd", "output")?;
    let acd_cfg = AcdConfig {
        master_seed: cfg.master_seed,
        trajectories: trajectories.unwrap_or(cfg.acd.trajectories),
        expert: cfg.expert,
        cam: cfg.camera,
        episode: cfg.episode(),
        drone: cfg.drone(),
    };
    let index = gen_almost_collision(&acd_cfg, &out_root)?;
    cfg.echo_into(&out_root)?;
    eprintln!(
        "almost-collision set: {} trajectories ({} left / {} right / {} straight), {} frames -> {}",
        index.trajectories.len(),
        index.left,
        index.right,
        index.straight,
        index.total_frames,
        out_root.display()
    );
    Ok(())
}

pub fn run_eval(common: &Common, model: &Path, data: Option<PathBuf>) -> Result<()> {
    let _cfg = super::resolve_config(common)?;
    let data_root = resolve_path(data, "acd", "data")?;
    let net = PolicyNet::load(model)?;
    let set = AcdSet::load(&data_root)?;
    let result = classify_eval(&net, &set)?;

    // Tables as CSV on stdout.
    println!("section,key,accuracy_pct");
    for (loc, acc) in &result.per_location {
        println!("location,{loc},{acc:.1}");
    }
    println!("location_avg,,{:.1}", result.location_avg);
    for (cue, acc) in &result.per_cue {
        println!("cue,{cue},{acc:.1}");
    }
    println!("cue_avg,,{:.1}", result.cue_avg);
    println!("per_frame,,{:.1}", result.per_frame_accuracy);
    for t in &result.trajectories {
        println!(
            "trajectory,{},{}",
            t.dir,
            if t.correct { "100.0" } else { "0.0" }
        );
    }
    eprintln!(
        "classified {} trajectories: location avg {:.1}%, cue avg {:.1}%",
        result.trajectories.len(),
        result.location_avg,
        result.cue_avg
    );
    Ok(())
}
