//! Subcommand implementations. Each writes its artifacts into `out`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use qfi_core::evolution::{evolve, GenerationStats, Individual};
use qfi_core::io;
use qfi_core::qfi::build_qfi_curve;
use qfi_core::sampling::sample_ensemble_streaming;
use qfi_core::{Objective, ObjectiveMode, QfiCurve};
use serde_json::json;

use crate::config::RunConfig;
use crate::svg::{self, Mark, Series, PALETTE};

/// Failure class, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Failure {
        Failure::Runtime(e)
    }
}

impl From<qfi_core::Error> for Failure {
    fn from(e: qfi_core::Error) -> Failure {
        match e {
            qfi_core::Error::Config(_) => Failure::Config(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Runtime(e.into())
    }
}

pub type CmdResult = Result<(), Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(out: &Path, name: &str, text: &str) -> CmdResult {
    let path = out.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn prepare_out(out: &Path) -> CmdResult {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    Ok(())
}

pub const SAMPLES_CSV: &str = "samples.csv";
pub const BINS_CSV: &str = "bins.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const QFI_CSV: &str = "qfi.csv";
pub const CURVE_JSON: &str = "curve.json";
pub const QFI_SVG: &str = "qfi.svg";
pub const HISTORY_CSV: &str = "history.csv";
pub const BEST_JSON: &str = "best.json";
pub const EVOLUTION_SVG: &str = "evolution.svg";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const BOXPLOT_SVG: &str = "boxplot.svg";
pub const SCATTER_SVG: &str = "scatter.svg";

/// Writes `samples.csv`, `bins.csv` and `summary.json`.
pub fn sample(cfg: &RunConfig, out: &Path) -> CmdResult {
    let sc = cfg.sampler.sampler_config();
    sc.validate().map_err(config_err)?;
    if cfg.sampler.n_bins == 0 {
        return Err(config_err(anyhow!("sampler.n_bins must be at least 1")));
    }
    prepare_out(out)?;
    let mut samples = io::SamplesWriter::new(create(out, SAMPLES_CSV)?)?;
    let total = sc.num_samples;
    let summary = sample_ensemble_streaming(&sc, cfg.sampler.n_bins, |start, chunk| {
        for r in chunk {
            samples.write(r)?;
        }
        eprintln!("sampled {}/{total}", start + chunk.len() as u64);
        Ok(())
    })?;
    samples.finish()?.flush()?;

    let bins = summary.bins.finish()?;
    let mut w = create(out, BINS_CSV)?;
    io::write_bins(&mut w, &bins)?;
    w.flush()?;

    let frac = |k: u64| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    let doc = json!({
        "n": sc.n_qubits,
        "num_samples": total,
        "seed": sc.seed,
        "max_gates": sc.max_gates,
        "n_bins": cfg.sampler.n_bins,
        "pearson_gates": summary.gates.pearson().ok(),
        "pearson_depth": summary.depth.pearson().ok(),
        "frac_f_lt_0.5": frac(summary.below_half),
        "frac_f_ge_0.99": frac(summary.at_least_099),
    });
    write_text(out, SUMMARY_JSON, &(serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n"))
}

/// Qubit count for a bins file: explicit value, else the `n` recorded in the
/// sampling summary beside it.
fn resolve_n(explicit: Option<usize>, bins_csv: &Path) -> Option<usize> {
    explicit.or_else(|| {
        let summary = bins_csv.parent().unwrap_or(Path::new(".")).join(SUMMARY_JSON);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(summary).ok()?).ok()?;
        v.get("n")?.as_u64().map(|n| n as usize)
    })
}

/// Writes `qfi.csv`, `curve.json` and `qfi.svg`.
pub fn fit(cfg: &RunConfig, bins_csv: &Path, n_qubits: Option<usize>, out: &Path) -> CmdResult {
    let params = cfg.qfi.params();
    params.validate().map_err(config_err)?;
    let file = File::open(bins_csv).with_context(|| format!("opening {}", bins_csv.display()))?;
    let bins = io::read_bins(std::io::BufReader::new(file)).with_context(|| format!("reading {}", bins_csv.display()))?;
    let n = resolve_n(n_qubits.or(cfg.qfi.n_qubits), bins_csv);
    if n.is_none() {
        eprintln!("warning: qubit count unknown; the curve cannot be used by `evolve` until it records one");
    }
    let curve = build_qfi_curve(&bins, &params, n)?;
    prepare_out(out)?;
    let mut w = create(out, QFI_CSV)?;
    io::write_qfi(&mut w, &curve)?;
    w.flush()?;
    write_text(out, CURVE_JSON, &curve.to_json())?;

    let raw: Vec<(f64, f64)> = bins
        .non_empty()
        .map(|b| (b.mean_fidelity, curve.raw_at(b.mean_fidelity)))
        .chain(std::iter::once((1.0, curve.raw_at(1.0))))
        .collect();
    let chart = svg::xy_chart(
        &format!("QFI curve (n = {})", n.map_or("?".to_string(), |n| n.to_string())),
        "fidelity",
        "information (bits)",
        &[
            Series { label: "tree, -log2", color: PALETTE[0], mark: Mark::Points, points: raw },
            Series { label: "smoothed", color: PALETTE[1], mark: Mark::Line, points: zip(&curve.grid, &curve.qfi_smooth) },
        ],
    );
    write_text(out, QFI_SVG, &chart)
}

fn zip(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().copied().zip(ys.iter().copied()).collect()
}

fn load_curve(path: &Path) -> Result<QfiCurve, Failure> {
    let s = fs::read_to_string(path).with_context(|| format!("reading curve {}", path.display())).map_err(config_err)?;
    QfiCurve::from_json(&s).with_context(|| format!("loading curve {}", path.display())).map_err(config_err)
}

fn objective(mode: ObjectiveMode, curve: Option<&Path>) -> Result<Objective, Failure> {
    match (mode, curve) {
        (ObjectiveMode::Fidelity, _) => Ok(Objective::fidelity()),
        (ObjectiveMode::Qfi, None) => Err(config_err(anyhow!("--objective qfi requires --curve"))),
        (ObjectiveMode::Qfi, Some(p)) => Objective::qfi(load_curve(p)?).map_err(config_err),
    }
}

/// Writes `history.csv`, `samples.csv`, `best.json` and `evolution.svg`.
pub fn evolve_cmd(cfg: &RunConfig, mode: ObjectiveMode, curve: Option<&Path>, out: &Path) -> CmdResult {
    let ec = cfg.evo_config();
    ec.validate().map_err(config_err)?;
    let obj = objective(mode, curve)?;
    let result = evolve(&ec, &obj)?;
    prepare_out(out)?;

    let mut w = create(out, HISTORY_CSV)?;
    io::write_history(&mut w, &result.history)?;
    w.flush()?;
    let mut w = create(out, SAMPLES_CSV)?;
    io::write_evo_samples(&mut w, &result.all_samples)?;
    w.flush()?;
    write_text(out, BEST_JSON, &(io::best_to_json(&result.best)? + "\n"))?;

    let mut rows = result.history.clone();
    rows.push(result.final_stats);
    let col = |f: fn(&GenerationStats) -> f64| rows.iter().map(|h| (h.generation as f64, f(h))).collect::<Vec<_>>();
    let chart = svg::xy_chart(
        &format!("evolution ({mode} objective, n = {})", ec.n_qubits),
        "generation",
        "population mean",
        &[
            Series { label: "fidelity", color: PALETTE[0], mark: Mark::Line, points: col(|h| h.mean_fid) },
            Series { label: "robustness", color: PALETTE[1], mark: Mark::Line, points: col(|h| h.mean_rob) },
            Series { label: "entropy Sv", color: PALETTE[2], mark: Mark::Line, points: col(|h| h.mean_sv) },
        ],
    );
    write_text(out, EVOLUTION_SVG, &chart)?;
    eprintln!(
        "best: score {} fidelity {} gates {} depth {}",
        result.best.score, result.best.metrics.fidelity, result.best.metrics.gate_count, result.best.metrics.depth
    );
    Ok(())
}

pub const COMPARISON_HEADER: &str =
    "mode,seed,mean_fid,median_fid,iqr_fid,mean_sv,mean_rob,mean_depth,mean_gates,best_score,best_fidelity";

fn comparison_row(mode: ObjectiveMode, seed: &str, s: &GenerationStats, best: &Individual) -> String {
    format!(
        "{mode},{seed},{},{},{},{},{},{},{},{},{}",
        s.mean_fid, s.median_fid, s.iqr_fid, s.mean_sv, s.mean_rob, s.mean_depth, s.mean_gates, best.score, best.metrics.fidelity
    )
}

/// Top-ranked individual of a pooled population (first on exact ties).
fn pooled_best(pop: &[Individual]) -> &Individual {
    let mut best = &pop[0];
    for i in &pop[1..] {
        if qfi_core::evolution::sort_key(i, best).is_lt() {
            best = i;
        }
    }
    best
}

/// Runs both objectives on every seed; writes `comparison.csv`,
/// `boxplot.svg` and `scatter.svg`. Aggregate rows pool the final
/// populations of all seeds.
pub fn compare(cfg: &RunConfig, curve: Option<&Path>, seeds: Option<Vec<u64>>, out: &Path) -> CmdResult {
    let seeds = seeds.unwrap_or_else(|| cfg.compare.seeds.clone());
    if seeds.len() < 2 {
        return Err(config_err(anyhow!("compare needs at least 2 seeds, got {}", seeds.len())));
    }
    let base = cfg.evo_config();
    base.validate().map_err(config_err)?;
    let qfi = objective(ObjectiveMode::Qfi, curve)?;
    let objectives = [(ObjectiveMode::Fidelity, Objective::fidelity()), (ObjectiveMode::Qfi, qfi)];
    prepare_out(out)?;

    let mut lines = vec![COMPARISON_HEADER.to_string()];
    let mut pooled: [Vec<Individual>; 2] = Default::default();
    for &seed in &seeds {
        let ec = qfi_core::EvoConfig { seed, ..base.clone() };
        for (k, (mode, obj)) in objectives.iter().enumerate() {
            let r = evolve(&ec, obj)?;
            lines.push(comparison_row(*mode, &seed.to_string(), &r.final_stats, &r.best));
            eprintln!("seed {seed} {mode}: mean fidelity {:.4}, best fidelity {:.4}", r.final_stats.mean_fid, r.best.metrics.fidelity);
            pooled[k].extend(r.final_population);
        }
    }
    for (k, (mode, _)) in objectives.iter().enumerate() {
        let stats = GenerationStats::from_population(base.generations, &pooled[k]);
        lines.push(comparison_row(*mode, "all", &stats, pooled_best(&pooled[k])));
    }
    write_text(out, COMPARISON_CSV, &(lines.join("\n") + "\n"))?;

    let groups = [("fidelity objective", PALETTE[0]), ("QFI objective", PALETTE[1])];
    let metric = |f: fn(&Individual) -> f64| pooled.iter().map(|p| p.iter().map(f).collect()).collect::<Vec<Vec<f64>>>();
    let panels = [
        ("fidelity", metric(|i| i.metrics.fidelity)),
        ("Sv", metric(|i| i.metrics.sv)),
        ("robustness", metric(|i| i.metrics.robustness)),
        ("depth", metric(|i| i.metrics.depth as f64)),
        ("gates", metric(|i| i.metrics.gate_count as f64)),
    ];
    write_text(out, BOXPLOT_SVG, &svg::box_panels("final populations", &groups, &panels))?;

    let q = &pooled[1];
    let top = pooled_best(q);
    let scatter = svg::xy_chart(
        "QFI objective: fidelity vs score",
        "fidelity",
        "normalized QFI score",
        &[
            Series {
                label: "final populations",
                color: PALETTE[1],
                mark: Mark::Points,
                points: q.iter().map(|i| (i.metrics.fidelity, i.score)).collect(),
            },
            Series { label: "max score", color: PALETTE[0], mark: Mark::Ring, points: vec![(top.metrics.fidelity, top.score)] },
        ],
    );
    write_text(out, SCATTER_SVG, &scatter)
}

pub fn default_out(name: &str) -> PathBuf {
    PathBuf::from("out").join(name)
}
