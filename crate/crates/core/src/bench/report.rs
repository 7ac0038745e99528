//! Report emission: per-policy CSV, top-k markdown tables, the
//! almost-collision accuracy table, and the percentile-curve SVG.
//!
//! The top-k table is computed from the rounded values in the emitted CSV
//! (not from internal doubles), so every reported average recomputes exactly
//! from `population.csv`.

use std::path::Path;

use super::{ClassificationResult, PopulationResult};
use crate::data::acd::Cue;
use crate::policy::Arch;
use crate::sim::EnvKind;
use crate::Result;

/// Everything one benchmark run reports.
#[derive(Debug)]
pub struct BenchReport {
    pub populations: Vec<PopulationResult>,
    /// Classification results of each population's top-5 policies (ranked
    /// best first); may be empty when no almost-collision set was evaluated.
    pub classifications: Vec<Vec<ClassificationResult>>,
}

const TOP_KS: [usize; 3] = [5, 3, 1];

/// Write `population.csv`, `topk.md`, `acd.md` (when classifications are
/// present) and `curve.svg` into `out_dir`.
pub fn emit_report(report: &BenchReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let csv = population_csv(&report.populations);
    std::fs::write(out_dir.join("population.csv"), &csv)?;
    std::fs::write(out_dir.join("topk.md"), topk_md_from_csv(&csv)?)?;
    if report.classifications.iter().any(|c| !c.is_empty()) {
        std::fs::write(out_dir.join("acd.md"), acd_md(report))?;
    }
    std::fs::write(out_dir.join("curve.svg"), curve_svg(&report.populations))?;
    Ok(())
}

/// One row per policy; floats with 6 decimals.
pub fn population_csv(populations: &[PopulationResult]) -> String {
    let mut out = String::from("arch,policy,train_seed,canyon_m,forest_m,sandbox_m,corridor_m\n");
    for pop in populations {
        for p in &pop.policies {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
                pop.arch,
                p.index,
                p.train_seed,
                p.distances[0],
                p.distances[1],
                p.distances[2],
                p.distances[3],
            ));
        }
    }
    out
}

#[derive(Debug, Clone)]
struct CsvRow {
    arch: String,
    distances: [f64; 4],
}

fn parse_population_csv(csv: &str) -> Result<Vec<CsvRow>> {
    let mut rows = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(crate::Error::Format(format!(
                "population.csv line {i}: expected 7 columns, got {}",
                cols.len()
            )));
        }
        let f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| crate::Error::Format(format!("bad float '{s}' in population.csv")))
        };
        rows.push(CsvRow {
            arch: cols[0].to_string(),
            distances: [f(cols[3])?, f(cols[4])?, f(cols[5])?, f(cols[6])?],
        });
    }
    Ok(rows)
}

/// Build the top-k table from CSV text: per architecture, rank rows by
/// corridor distance (descending, ties keep file order) and average the
/// top-k rows per environment.
pub fn topk_md_from_csv(csv: &str) -> Result<String> {
    let rows = parse_population_csv(csv)?;
    let mut arches: Vec<String> = Vec::new();
    for r in &rows {
        if !arches.contains(&r.arch) {
            arches.push(r.arch.clone());
        }
    }

    let mut out = String::from("# Online performance: average distance [m]\n\n");
    out.push_str(
        "Selection is by average corridor distance; reporting is per environment.\n\n",
    );
    let mut header = String::from("| Env |");
    let mut rule = String::from("| --- |");
    for k in TOP_KS {
        for arch in &arches {
            header.push_str(&format!(" {} top{k} |", arch.to_uppercase()));
            rule.push_str(" ---: |");
        }
    }
    out.push_str(&header);
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');

    for kind in EnvKind::ALL {
        let mut line = format!("| {} |", capitalize(kind.name()));
        for k in TOP_KS {
            for arch in &arches {
                let mut mine: Vec<&CsvRow> = rows.iter().filter(|r| &r.arch == arch).collect();
                mine.sort_by(|a, b| {
                    b.distances[3]
                        .partial_cmp(&a.distances[3])
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                let kk = k.min(mine.len());
                if kk == 0 {
                    line.push_str(" n/a |");
                } else {
                    let mean = mine[..kk]
                        .iter()
                        .map(|r| r.distances[kind.index() as usize])
                        .sum::<f64>()
                        / kk as f64;
                    line.push_str(&format!(" {mean:.2} |"));
                }
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

/// Almost-collision accuracy table: rows per location and per cue with
/// equal-weight averages, columns top-5/3/1 per architecture.
pub fn acd_md(report: &BenchReport) -> String {
    let mut out = String::from("# Almost-collision classification accuracy [%]\n\n");
    let arches: Vec<String> = report
        .populations
        .iter()
        .map(|p| p.arch.to_string().to_uppercase())
        .collect();

    let mut header = String::from("| |");
    let mut rule = String::from("| --- |");
    for k in TOP_KS {
        for arch in &arches {
            header.push_str(&format!(" {arch} top{k} |"));
            rule.push_str(" ---: |");
        }
    }
    out.push_str(&header);
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');

    // Mean of a statistic over the top-k classified policies.
    let cell = |pi: usize, k: usize, get: &dyn Fn(&ClassificationResult) -> f64| -> String {
        let cls = &report.classifications[pi];
        let kk = k.min(cls.len());
        if kk == 0 {
            return "n/a".to_string();
        }
        let mean = cls[..kk].iter().map(|c| get(c)).sum::<f64>() / kk as f64;
        format!("{mean:.1}")
    };

    for loc in 1..=crate::data::acd::LOCATION_COUNT {
        let mut line = format!("| Location {loc} |");
        for k in TOP_KS {
            for pi in 0..report.populations.len() {
                let v = cell(pi, k, &|c| {
                    c.per_location
                        .iter()
                        .find(|(l, _)| *l == loc)
                        .map(|(_, a)| *a)
                        .unwrap_or(f64::NAN)
                });
                line.push_str(&format!(" {v} |"));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    let mut line = String::from("| Avg. Loc. |");
    for k in TOP_KS {
        for pi in 0..report.populations.len() {
            line.push_str(&format!(" {} |", cell(pi, k, &|c| c.location_avg)));
        }
    }
    out.push_str(&line);
    out.push('\n');

    for cue in [Cue::Perspective, Cue::Vertical, Cue::Strange] {
        let mut line = format!("| {} |", capitalize(cue.name()));
        for k in TOP_KS {
            for pi in 0..report.populations.len() {
                let v = cell(pi, k, &|c| {
                    c.per_cue
                        .iter()
                        .find(|(cc, _)| *cc == cue)
                        .map(|(_, a)| *a)
                        .unwrap_or(f64::NAN)
                });
                line.push_str(&format!(" {v} |"));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    let mut line = String::from("| Avg. Cue |");
    for k in TOP_KS {
        for pi in 0..report.populations.len() {
            line.push_str(&format!(" {} |", cell(pi, k, &|c| c.cue_avg)));
        }
    }
    out.push_str(&line);
    out.push('\n');

    out.push_str("\nPer-frame accuracy (every prediction window, top-5 policies): ");
    let frames: Vec<String> = (0..report.populations.len())
        .map(|pi| {
            format!(
                "{} {}",
                arches[pi],
                cell(pi, 5, &|c| c.per_frame_accuracy)
            )
        })
        .collect();
    out.push_str(&frames.join(", "));
    out.push('\n');
    out
}

/// Percentile curve: x is percent of the ranked population, y is corridor
/// distance; one polyline per architecture on a fixed 800x500 canvas.
pub fn curve_svg(populations: &[PopulationResult]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 70.0;
    const MR: f64 = 25.0;
    const MT: f64 = 25.0;
    const MB: f64 = 60.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;

    let y_max = populations
        .iter()
        .flat_map(|p| p.percentile_curve.iter().map(|&(_, d)| d))
        .fold(10.0f64, f64::max)
        .ceil()
        .max(10.0)
        * 1.05;

    let x_of = |pct: f64| ML + pct / 100.0 * plot_w;
    let y_of = |d: f64| MT + (1.0 - d / y_max) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    s.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // Axes.
    s.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    s.push_str(&format!(
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    // X ticks every 20%.
    for i in 0..=5 {
        let pct = 20.0 * i as f64;
        let x = x_of(pct);
        s.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        s.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{pct:.0}</text>\n",
            H - MB + 20.0
        ));
    }
    // Y ticks at 5 even divisions.
    for i in 0..=5 {
        let d = y_max * i as f64 / 5.0;
        let y = y_of(d);
        s.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y:.1}\" x2=\"{ML}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            ML - 5.0
        ));
        s.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{d:.0}</text>\n",
            ML - 9.0,
            y + 4.0
        ));
    }
    s.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">percent of ranked population</text>\n",
        ML + plot_w / 2.0,
        H - 15.0
    ));
    s.push_str(&format!(
        "  <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">distance [m]</text>\n",
        MT + plot_h / 2.0,
        MT + plot_h / 2.0
    ));

    for pop in populations {
        let color = match pop.arch {
            Arch::Naux => "#1f6fb4",
            Arch::Auxd => "#d62728",
        };
        if pop.percentile_curve.is_empty() {
            continue;
        }
        let points: Vec<String> = pop
            .percentile_curve
            .iter()
            .map(|&(pct, d)| format!("{:.2},{:.2}", x_of(pct), y_of(d)))
            .collect();
        s.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }
    // Legend.
    for (i, pop) in populations.iter().enumerate() {
        let color = match pop.arch {
            Arch::Naux => "#1f6fb4",
            Arch::Auxd => "#d62728",
        };
        let y = MT + 18.0 + 20.0 * i as f64;
        s.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            W - MR - 140.0,
            W - MR - 110.0
        ));
        s.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.1}\">{}</text>\n",
            W - MR - 102.0,
            y + 4.0,
            pop.arch.to_string().to_uppercase()
        ));
    }
    s.push_str("</svg>\n");
    s
}
