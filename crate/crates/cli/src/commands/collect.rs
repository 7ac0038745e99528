use std::path::PathBuf;

use anyhow::{Context, Result};
use driftbench_core::data::{run_collect_job, write_summary};
use driftbench_core::sim::EnvKind;
use rayon::prelude::*;

use crate::config::resolve_path;
use crate::Common;

pub fn run(
    common: &Common,
    flights: Option<usize>,
    kinds: Option<&str>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = super::resolve_config(common)?;
    let out_root = resolve_path(out, "dataset", "output")?;
    let kinds: Vec<EnvKind> = match kinds {
        None => EnvKind::TRAINING.to_vec(),
        Some(s) => s
            .split(',')
            .map(|k| k.trim().parse())
            .collect::<driftbench_core::Result<_>>()?,
    };
    let flights = flights.unwrap_or(cfg.collect.flights_per_kind);
    let collect_cfg = cfg.collect_config(kinds.clone(), flights);

    let jobs: Vec<(EnvKind, usize)> = kinds
        .iter()
        .flat_map(|&k| (0..flights).map(move |i| (k, i)))
        .collect();
    eprintln!(
        "collecting {} flights ({} per kind) with {} workers -> {}",
        jobs.len(),
        flights,
        cfg.effective_jobs(),
        out_root.display()
    );

    // Episodes are independent; results are aggregated in job order so the
    // summary is identical at any worker count.
    let results: Vec<(EnvKind, (driftbench_core::sim::Termination, usize))> =
        super::with_pool(&cfg, || {
            jobs.par_iter()
                .map(|&(kind, i)| {
                    run_collect_job(&collect_cfg, kind, i, &out_root).map(|r| (kind, r))
                })
                .collect::<driftbench_core::Result<Vec<_>>>()
        })?
        .context("collection failed; output tree is partial")?;

    let summary = write_summary(&collect_cfg, &results, &out_root)?;
    if flights > 0 {
        cfg.echo_into(&out_root)?;
    }
    for k in &summary.per_kind {
        eprintln!(
            "  {:8} {} flights: {} success, {} collision, {} timeout, {} frames",
            k.kind.to_string(),
            k.flights,
            k.successes,
            k.collisions,
            k.timeouts,
            k.total_frames
        );
    }
    Ok(())
}
