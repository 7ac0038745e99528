//! The full protocol: shared demonstration dataset, per-architecture policy
//! populations, online evaluation in all four environments, almost-collision
//! classification of the top policies, and report emission.

use std::path::Path;

use anyhow::{Context, Result};
use driftbench_core::bench::{
    assert_seed_hygiene, classify_eval, emit_report, eval_world_seed, train_and_eval_one,
    BenchReport, ClassificationResult, PolicyEval, PopulationConfig, PopulationResult,
};
use driftbench_core::data::acd::{gen_almost_collision, AcdConfig, AcdSet};
use driftbench_core::data::{collect_world_seed, run_collect_job, write_summary, Dataset};
use driftbench_core::policy::{Arch, PolicyNet};
use driftbench_core::sim::EnvKind;
use rayon::prelude::*;

use crate::Common;

pub fn run(
    common: &Common,
    arch: Option<&str>,
    population: Option<usize>,
    flights: Option<usize>,
    out: &Path,
) -> Result<()> {
    let mut cfg = super::resolve_config(common)?;
    if let Some(p) = population {
        cfg.bench.population = p;
    }
    if let Some(f) = flights {
        cfg.bench.flights_per_kind = f;
    }
    let arches: Vec<Arch> = match arch {
        None => vec![Arch::Naux, Arch::Auxd],
        Some(s) => s
            .split(',')
            .map(|a| a.trim().parse())
            .collect::<driftbench_core::Result<_>>()?,
    };
    std::fs::create_dir_all(out)?;
    cfg.echo_into(out)?;

    // 1. Shared demonstration dataset.
    let data_dir = out.join("dataset");
    let kinds = EnvKind::TRAINING.to_vec();
    let collect_cfg = cfg.collect_config(kinds.clone(), cfg.bench.flights_per_kind);
    let jobs: Vec<(EnvKind, usize)> = kinds
        .iter()
        .flat_map(|&k| (0..cfg.bench.flights_per_kind).map(move |i| (k, i)))
        .collect();
    eprintln!(
        "[1/5] collecting {} demonstration flights -> {}",
        jobs.len(),
        data_dir.display()
    );
    let results = super::with_pool(&cfg, || {
        jobs.par_iter()
            .map(|&(kind, i)| run_collect_job(&collect_cfg, kind, i, &data_dir).map(|r| (kind, r)))
            .collect::<driftbench_core::Result<Vec<_>>>()
    })??;
    write_summary(&collect_cfg, &results, &data_dir)?;

    // Training and evaluation world seeds must never overlap.
    let train_seeds: Vec<u64> = jobs
        .iter()
        .map(|&(k, i)| collect_world_seed(cfg.master_seed, k, i))
        .collect();
    let eval_seeds: Vec<u64> = EnvKind::ALL
        .iter()
        .flat_map(|&k| (0..cfg.eval.runs).map(move |r| eval_world_seed(cfg.master_seed, k, r)))
        .collect();
    assert_seed_hygiene(&train_seeds, &eval_seeds)?;

    let with_depth = arches.contains(&Arch::Auxd) && cfg.policy.beta != 0.0;
    let dataset = Dataset::load(&data_dir, cfg.train.stride, with_depth)?;
    eprintln!(
        "      dataset: {} stacked samples from {} episodes",
        dataset.n_samples(),
        dataset.episodes.len()
    );

    // 2. Almost-collision set for offline classification.
    let acd_dir = out.join("acd");
    eprintln!("[2/5] generating the almost-collision set -> {}", acd_dir.display());
    let acd_cfg = AcdConfig {
        master_seed: cfg.master_seed,
        trajectories: cfg.acd.trajectories,
        expert: cfg.expert,
        cam: cfg.camera,
        episode: cfg.episode(),
        drone: cfg.drone(),
    };
    gen_almost_collision(&acd_cfg, &acd_dir)?;
    let acd_set = AcdSet::load(&acd_dir)?;

    // 3. Populations per architecture.
    let mut populations = Vec::new();
    let mut classifications: Vec<Vec<ClassificationResult>> = Vec::new();
    let models_dir = out.join("models");
    std::fs::create_dir_all(&models_dir)?;

    for arch in &arches {
        let pop_cfg = PopulationConfig {
            n_policies: cfg.bench.population,
            master_seed: cfg.master_seed,
            spec: cfg.policy_spec(*arch),
            hyper: cfg.train_hyper(0),
            eval_runs: cfg.eval.runs,
            cam: cfg.camera,
            episode: cfg.episode(),
            drone: cfg.drone(),
            gen: cfg.gen_params(),
        };
        eprintln!(
            "[3/5] training + evaluating {} {} policies",
            pop_cfg.n_policies, arch
        );
        let t0 = std::time::Instant::now();
        let outcomes: Vec<(usize, driftbench_core::Result<(PolicyEval, PolicyNet<f32>)>)> =
            super::with_pool(&cfg, || {
                (0..pop_cfg.n_policies)
                    .into_par_iter()
                    .map(|j| (j, train_and_eval_one(&pop_cfg, &dataset, j)))
                    .collect()
            })?;

        let mut policies = Vec::new();
        let mut nets = std::collections::BTreeMap::new();
        let mut failures = Vec::new();
        for (j, outcome) in outcomes {
            match outcome {
                Ok((eval, net)) => {
                    eprintln!(
                        "      {arch} policy {j}: canyon {:.1} forest {:.1} sandbox {:.1} corridor {:.1}",
                        eval.distances[0], eval.distances[1], eval.distances[2], eval.distances[3]
                    );
                    policies.push(eval);
                    nets.insert(j, net);
                }
                Err(e) => {
                    eprintln!("      {arch} policy {j}: training failed: {e}");
                    failures.push((j, e.to_string()));
                }
            }
        }
        let pop = PopulationResult::assemble(*arch, policies, failures);
        eprintln!(
            "      {arch}: median corridor {:.2} m, top-1 {:.2} m [{:.0}s]",
            pop.median_corridor(),
            pop.top_k_mean(1, EnvKind::Corridor),
            t0.elapsed().as_secs_f64()
        );

        // 4. Classify the top-5 policies on the almost-collision set.
        eprintln!("[4/5] classifying top {} policies on the almost-collision set", 5.min(pop.ranking.len()));
        let mut cls = Vec::new();
        for (rank, &pos) in pop.top_k_indices(5).iter().enumerate() {
            let j = pop.policies[pos].index;
            let net = &nets[&j];
            if rank == 0 {
                let mut best = net.clone();
                best.save(&models_dir.join(format!("{arch}_top1.dshc")))?;
            }
            cls.push(classify_eval(net, &acd_set)?);
        }
        classifications.push(cls);
        populations.push(pop);
    }

    // 5. Reports.
    eprintln!("[5/5] emitting reports -> {}", out.display());
    let report = BenchReport {
        populations,
        classifications,
    };
    emit_report(&report, out).context("emitting reports")?;
    std::fs::write(
        out.join("population.json"),
        serde_json::to_vec_pretty(&serde_json::json!({
            "populations": report.populations,
            "classifications": report.classifications,
        }))?,
    )?;

    for pop in &report.populations {
        eprintln!(
            "  {}: corridor top1/top3/top5 = {:.2} / {:.2} / {:.2} m",
            pop.arch,
            pop.top_k_mean(1, EnvKind::Corridor),
            pop.top_k_mean(3, EnvKind::Corridor),
            pop.top_k_mean(5, EnvKind::Corridor),
        );
    }
    Ok(())
}
