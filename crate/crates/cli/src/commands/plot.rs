use std::path::Path;

use anyhow::{Context, Result};
use driftbench_core::bench::{PolicyEval, PopulationResult};
use driftbench_core::policy::Arch;

use crate::Common;

/// Rebuild the percentile curve SVG from an emitted `population.csv`.
pub fn run(common: &Common, input: &Path, out: &Path) -> Result<()> {
    let _cfg = super::resolve_config(common)?;
    let csv_path = input.join("population.csv");
    let csv = std::fs::read_to_string(&csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;

    let mut by_arch: Vec<(Arch, Vec<PolicyEval>)> = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(cols.len() == 7, "{csv_path:?} line {i}: expected 7 columns");
        let arch: Arch = cols[0].parse()?;
        let f = |s: &str| -> Result<f64> { Ok(s.parse()?) };
        let eval = PolicyEval {
            index: cols[1].parse()?,
            train_seed: cols[2].parse()?,
            distances: [f(cols[3])?, f(cols[4])?, f(cols[5])?, f(cols[6])?],
        };
        match by_arch.iter_mut().find(|(a, _)| *a == arch) {
            Some((_, v)) => v.push(eval),
            None => by_arch.push((arch, vec![eval])),
        }
    }

    let populations: Vec<PopulationResult> = by_arch
        .into_iter()
        .map(|(arch, policies)| PopulationResult::assemble(arch, policies, vec![]))
        .collect();
    let svg = driftbench_core::bench::curve_svg(&populations);
    std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "curve with {} polyline(s) -> {}",
        populations.len(),
        out.display()
    );
    Ok(())
}
