use std::path::Path;

use anyhow::Result;
use driftbench_core::bench::{eval_policy_online, OnlineEvalConfig};
use driftbench_core::policy::PolicyNet;
use driftbench_core::sim::EnvKind;

use crate::Common;

pub fn run(common: &Common, model: &Path, env: &str, runs: Option<usize>) -> Result<()> {
    let cfg = super::resolve_config(common)?;
    let kind: EnvKind = env.parse()?;
    let net = PolicyNet::load(model)?;
    let eval_cfg = OnlineEvalConfig {
        kind,
        runs: runs.unwrap_or(cfg.eval.runs),
        master_seed: cfg.master_seed,
        cam: cfg.camera,
        episode: cfg.episode(),
        drone: cfg.drone(),
        gen: cfg.gen_params(),
    };
    let eval = eval_policy_online(&net, &eval_cfg)?;

    println!("run,env,world_seed,reverse,distance_m,termination,steps");
    for r in &eval.runs {
        println!(
            "{},{},{},{},{:.6},{},{}",
            r.run,
            kind,
            r.world_seed,
            r.reverse,
            r.distance,
            match r.termination {
                driftbench_core::sim::Termination::Success => "success",
                driftbench_core::sim::Termination::Collision => "collision",
                driftbench_core::sim::Termination::Timeout => "timeout",
            },
            r.steps
        );
    }
    println!("avg,{},,,{:.6},,", kind, eval.avg_distance);
    eprintln!(
        "{kind}: average distance {:.2} m over {} runs",
        eval.avg_distance,
        eval.runs.len()
    );
    Ok(())
}
