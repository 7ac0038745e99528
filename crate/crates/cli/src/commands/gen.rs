use std::path::Path;

use anyhow::{Context, Result};
use driftbench_core::procgen::generate;
use driftbench_core::sim::EnvKind;

use crate::Common;

pub fn run(common: &Common, env: &str, out: &Path, reverse: bool) -> Result<()> {
    let mut cfg = super::resolve_config(common)?;
    cfg.corridor.reverse = reverse;
    let kind: EnvKind = env.parse()?;
    let world = generate(kind, cfg.master_seed, &cfg.gen_params())?;
    world
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "generated {kind} world (seed {}, {} obstacles) -> {}",
        cfg.master_seed,
        world.obstacles.len(),
        out.display()
    );
    Ok(())
}
