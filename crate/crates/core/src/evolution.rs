//! Elitist, mutation-only evolutionary search over circuits.
//!
//! Each generation the population is evaluated, ranked by [`sort_key`] and cut
//! to the top `⌈elite_fraction·pop_size⌉` elites; the rest of the next
//! population is refilled by mutating elites chosen uniformly with
//! replacement. Every child draws from its own stream keyed by
//! `(seed, generation, slot)`, so results do not depend on how evaluation is
//! scheduled across threads.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::noise::{robustness_with_ideal, NoiseModel};
use crate::qfi::QfiCurve;
use crate::rng::stream2;
use crate::sampling::{random_circuit, random_gate, DEFAULT_MAX_GATES};
use crate::state::{avg_entropy, fidelity_pure, simulate, target_state, TargetState};
use crate::stats;
use crate::MAX_DENSITY_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveMode {
    Fidelity,
    Qfi,
}

impl std::str::FromStr for ObjectiveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<ObjectiveMode> {
        match s {
            "fidelity" => Ok(ObjectiveMode::Fidelity),
            "qfi" => Ok(ObjectiveMode::Qfi),
            other => Err(Error::Config(format!("unknown objective {other:?}, expected fidelity or qfi"))),
        }
    }
}

impl std::fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObjectiveMode::Fidelity => "fidelity",
            ObjectiveMode::Qfi => "qfi",
        })
    }
}

/// Scoring rule. A QFI objective owns its curve and the curve maximum used
/// for normalization.
#[derive(Clone, Debug)]
pub struct Objective {
    mode: ObjectiveMode,
    curve: Option<QfiCurve>,
    curve_max: f64,
}

impl Objective {
    pub fn fidelity() -> Objective {
        Objective { mode: ObjectiveMode::Fidelity, curve: None, curve_max: 1.0 }
    }

    pub fn qfi(curve: QfiCurve) -> Result<Objective> {
        curve.validate()?;
        let curve_max = curve.max_smooth();
        if curve_max.is_nan() || curve_max <= 0.0 {
            return Err(Error::invalid("QFI curve maximum must be positive"));
        }
        Ok(Objective { mode: ObjectiveMode::Qfi, curve: Some(curve), curve_max })
    }

    /// `mode = Qfi` requires `curve`.
    pub fn new(mode: ObjectiveMode, curve: Option<QfiCurve>) -> Result<Objective> {
        match (mode, curve) {
            (ObjectiveMode::Fidelity, _) => Ok(Objective::fidelity()),
            (ObjectiveMode::Qfi, Some(c)) => Objective::qfi(c),
            (ObjectiveMode::Qfi, None) => Err(Error::Config("qfi objective requires a curve".into())),
        }
    }

    pub fn mode(&self) -> ObjectiveMode {
        self.mode
    }

    pub fn curve(&self) -> Option<&QfiCurve> {
        self.curve.as_ref()
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        if let Some(c) = &self.curve {
            match c.n_qubits() {
                Some(n) if n == n_qubits => {}
                Some(n) => {
                    return Err(Error::Config(format!("curve was built for {n} qubits, run uses {n_qubits}")))
                }
                None => return Err(Error::Config("curve does not record its qubit count".into())),
            }
        }
        Ok(())
    }

    /// `(score, score_raw)` for an ideal fidelity.
    pub fn score(&self, fidelity: f64) -> (f64, f64) {
        match &self.curve {
            None => (fidelity, fidelity),
            Some(c) => {
                let raw = c.smooth_at(fidelity);
                ((raw / self.curve_max).clamp(0.0, 1.0), raw)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvoConfig {
    pub n_qubits: usize,
    pub pop_size: usize,
    pub generations: usize,
    pub elite_fraction: f64,
    pub max_gates: usize,
    pub noise: NoiseModel,
    pub angle_sigma: f64,
    pub seed: u64,
}

impl Default for EvoConfig {
    fn default() -> EvoConfig {
        EvoConfig {
            n_qubits: 4,
            pop_size: 60,
            generations: 80,
            elite_fraction: 0.4,
            max_gates: DEFAULT_MAX_GATES,
            noise: NoiseModel::default(),
            angle_sigma: 0.1,
            seed: 0,
        }
    }
}

impl EvoConfig {
    pub fn new(n_qubits: usize, seed: u64) -> EvoConfig {
        EvoConfig { n_qubits, seed, ..EvoConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_DENSITY_QUBITS).contains(&self.n_qubits) {
            return Err(Error::invalid(format!("n_qubits must be in 2..={MAX_DENSITY_QUBITS}, got {}", self.n_qubits)));
        }
        if self.pop_size < 2 {
            return Err(Error::invalid("pop_size must be at least 2"));
        }
        if self.generations < 1 {
            return Err(Error::invalid("generations must be at least 1"));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::invalid("elite_fraction must be in (0, 1]"));
        }
        if self.max_gates < 1 {
            return Err(Error::invalid("max_gates must be at least 1"));
        }
        if !(self.angle_sigma.is_finite() && self.angle_sigma >= 0.0) {
            return Err(Error::invalid("angle_sigma must be finite and non-negative"));
        }
        self.noise.validate()
    }

    /// `⌈elite_fraction·pop_size⌉`, never below 1.
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.pop_size as f64).ceil() as usize).clamp(1, self.pop_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fidelity: f64,
    pub sv: f64,
    pub robustness: f64,
    pub depth: usize,
    pub gate_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub circuit: Circuit,
    pub metrics: Metrics,
    pub score: f64,
    pub score_raw: f64,
}

/// Aggregates over one evaluated population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_score: f64,
    pub mean_fid: f64,
    pub median_fid: f64,
    pub iqr_fid: f64,
    pub mean_sv: f64,
    pub mean_rob: f64,
    pub mean_depth: f64,
    pub mean_gates: f64,
}

impl GenerationStats {
    pub fn from_population(generation: usize, pop: &[Individual]) -> GenerationStats {
        let fid: Vec<f64> = pop.iter().map(|i| i.metrics.fidelity).collect();
        let avg = |f: &dyn Fn(&Individual) -> f64| stats::mean(&pop.iter().map(f).collect::<Vec<_>>());
        GenerationStats {
            generation,
            best_score: pop.iter().map(|i| i.score).fold(f64::NEG_INFINITY, f64::max),
            mean_fid: stats::mean(&fid),
            median_fid: stats::median(&fid),
            iqr_fid: stats::iqr(&fid),
            mean_sv: avg(&|i| i.metrics.sv),
            mean_rob: avg(&|i| i.metrics.robustness),
            mean_depth: avg(&|i| i.metrics.depth as f64),
            mean_gates: avg(&|i| i.metrics.gate_count as f64),
        }
    }
}

/// Individual tagged with the generation whose population it belonged to.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluatedSample {
    pub generation: usize,
    pub individual: Individual,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub best: Individual,
    /// One entry per generation, `0..generations`.
    pub history: Vec<GenerationStats>,
    /// Statistics of the final re-evaluated population (generation index
    /// `generations`).
    pub final_stats: GenerationStats,
    /// Final population in rank order.
    pub final_population: Vec<Individual>,
    /// Every population member of every generation, including the final one.
    pub all_samples: Vec<EvaluatedSample>,
}

pub fn init_population(cfg: &EvoConfig) -> Result<Vec<Circuit>> {
    cfg.validate()?;
    Ok((0..cfg.pop_size)
        .map(|i| random_circuit(cfg.n_qubits, cfg.max_gates, &mut stream2(cfg.seed, 0, i as u64)))
        .collect())
}

fn evaluate_with(c: &Circuit, cfg: &EvoConfig, objective: &Objective, tau: &TargetState) -> Result<Individual> {
    let psi = simulate(c);
    let fidelity = fidelity_pure(&psi, tau)?;
    let metrics = Metrics {
        fidelity,
        sv: avg_entropy(&psi),
        robustness: robustness_with_ideal(c, &cfg.noise, tau, fidelity)?,
        depth: c.depth(),
        gate_count: c.len(),
    };
    let (score, score_raw) = objective.score(fidelity);
    Ok(Individual { circuit: c.clone(), metrics, score, score_raw })
}

pub fn evaluate(c: &Circuit, cfg: &EvoConfig, objective: &Objective) -> Result<Individual> {
    if c.n_qubits() != cfg.n_qubits {
        return Err(Error::invalid(format!("circuit has {} qubits, config {}", c.n_qubits(), cfg.n_qubits)));
    }
    objective.check(cfg.n_qubits)?;
    evaluate_with(c, cfg, objective, &target_state(cfg.n_qubits)?)
}

/// Ranking: score descending, then depth and gate count ascending. Equal keys
/// compare equal so a stable sort keeps insertion order.
pub fn sort_key(a: &Individual, b: &Individual) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.metrics.depth.cmp(&b.metrics.depth))
        .then(a.metrics.gate_count.cmp(&b.metrics.gate_count))
}

pub fn rank(pop: &mut [Individual]) {
    pop.sort_by(sort_key);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationOp {
    AnglePerturb,
    Insert,
    Delete,
}

pub fn applicable_ops(parent: &Circuit, max_gates: usize) -> Vec<MutationOp> {
    let mut ops = Vec::with_capacity(3);
    if parent.gates().iter().any(|g| g.kind().is_parameterized()) {
        ops.push(MutationOp::AnglePerturb);
    }
    if parent.len() < max_gates {
        ops.push(MutationOp::Insert);
    }
    if parent.len() > 1 {
        ops.push(MutationOp::Delete);
    }
    ops
}

/// Applies one operator drawn uniformly from [`applicable_ops`]; returns the
/// parent unchanged if none applies.
pub fn mutate<R: Rng + ?Sized>(parent: &Circuit, cfg: &EvoConfig, rng: &mut R) -> Circuit {
    let ops = applicable_ops(parent, cfg.max_gates);
    if ops.is_empty() {
        return parent.clone();
    }
    let mut gates = parent.gates().to_vec();
    match ops[rng.random_range(0..ops.len())] {
        MutationOp::AnglePerturb => {
            let idx: Vec<usize> = (0..gates.len()).filter(|&i| gates[i].kind().is_parameterized()).collect();
            let g = &mut gates[idx[rng.random_range(0..idx.len())]];
            let step = Normal::new(0.0, cfg.angle_sigma).expect("sigma validated").sample(rng);
            let mut a = (g.angle().expect("parameterized") + step).rem_euclid(TAU);
            if a >= TAU {
                a = 0.0;
            }
            g.set_angle(a);
        }
        MutationOp::Insert => {
            let pos = rng.random_range(0..=gates.len());
            gates.insert(pos, random_gate(parent.n_qubits(), rng));
        }
        MutationOp::Delete => {
            gates.remove(rng.random_range(0..gates.len()));
        }
    }
    Circuit::from_parts_unchecked(parent.n_qubits(), gates)
}

fn evaluate_all(
    circuits: &[Circuit],
    cfg: &EvoConfig,
    objective: &Objective,
    tau: &TargetState,
) -> Result<Vec<Individual>> {
    circuits.par_iter().map(|c| evaluate_with(c, cfg, objective, tau)).collect()
}

/// Runs the search. Deterministic in `(cfg, objective)` regardless of the
/// rayon pool size.
pub fn evolve(cfg: &EvoConfig, objective: &Objective) -> Result<EvolutionResult> {
    cfg.validate()?;
    objective.check(cfg.n_qubits)?;
    let tau = target_state(cfg.n_qubits)?;
    let n_elite = cfg.elite_count();

    let mut pop = evaluate_all(&init_population(cfg)?, cfg, objective, &tau)?;
    let mut history = Vec::with_capacity(cfg.generations);
    let mut all_samples = Vec::with_capacity(cfg.pop_size * (cfg.generations + 1));

    for generation in 0..cfg.generations {
        history.push(GenerationStats::from_population(generation, &pop));
        all_samples.extend(pop.iter().map(|i| EvaluatedSample { generation, individual: i.clone() }));

        rank(&mut pop);
        pop.truncate(n_elite);
        let children: Vec<Circuit> = (n_elite..cfg.pop_size)
            .map(|slot| {
                let mut r = stream2(cfg.seed, generation as u64 + 1, slot as u64);
                let parent = &pop[r.random_range(0..n_elite)].circuit;
                mutate(parent, cfg, &mut r)
            })
            .collect();
        pop.extend(evaluate_all(&children, cfg, objective, &tau)?);
        debug_assert_eq!(pop.len(), cfg.pop_size);
    }

    let final_stats = GenerationStats::from_population(cfg.generations, &pop);
    all_samples.extend(pop.iter().map(|i| EvaluatedSample { generation: cfg.generations, individual: i.clone() }));
    rank(&mut pop);
    Ok(EvolutionResult { best: pop[0].clone(), history, final_stats, final_population: pop, all_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::qfi::{build_qfi_curve, QfiParams};
    use crate::rng::stream;
    use crate::sampling::bin_fidelities;

    fn small(n: usize, seed: u64) -> EvoConfig {
        EvoConfig { pop_size: 12, generations: 6, ..EvoConfig::new(n, seed) }
    }

    fn ind(score: f64, depth: usize, gates: usize) -> Individual {
        Individual {
            circuit: Circuit::empty(2).unwrap(),
            metrics: Metrics { fidelity: 0.0, sv: 0.0, robustness: 1.0, depth, gate_count: gates },
            score,
            score_raw: score,
        }
    }

    fn two_qubit_curve() -> QfiCurve {
        let fids: Vec<f64> = (0..4000).map(|i| ((i * 7919) % 4000) as f64 / 4000.0 * 0.9).chain([1.0; 40]).collect();
        build_qfi_curve(&bin_fidelities(fids, 50).unwrap(), &QfiParams::default(), Some(2)).unwrap()
    }

    #[test]
    fn bell_circuit_scores_one() {
        let cfg = EvoConfig::new(2, 0);
        let i = evaluate(&Circuit::ghz(2).unwrap(), &cfg, &Objective::fidelity()).unwrap();
        assert!((i.score - 1.0).abs() < 1e-12);
        assert_eq!(i.score, i.score_raw);
        assert!((i.metrics.sv - 1.0).abs() < 1e-9);
        assert_eq!((i.metrics.depth, i.metrics.gate_count), (2, 2));
    }

    #[test]
    fn empty_circuit_scores_half() {
        let i = evaluate(&Circuit::empty(2).unwrap(), &EvoConfig::new(2, 0), &Objective::fidelity()).unwrap();
        assert!((i.score - 0.5).abs() < 1e-12);
        assert_eq!(i.metrics.robustness, 1.0);
    }

    #[test]
    fn qfi_score_is_normalized_lookup() {
        let curve = two_qubit_curve();
        let obj = Objective::qfi(curve.clone()).unwrap();
        let i = evaluate(&Circuit::ghz(2).unwrap(), &EvoConfig::new(2, 0), &obj).unwrap();
        assert_eq!(i.score_raw, curve.smooth_at(1.0));
        assert!((i.score - curve.smooth_at(1.0) / curve.max_smooth()).abs() < 1e-15);
        assert!(i.score_raw < curve.max_smooth());
    }

    #[test]
    fn qfi_objective_checks_qubit_count() {
        let obj = Objective::qfi(two_qubit_curve()).unwrap();
        assert!(matches!(evolve(&small(3, 0), &obj), Err(Error::Config(_))));
        assert!(matches!(Objective::new(ObjectiveMode::Qfi, None), Err(Error::Config(_))));
    }

    #[test]
    fn sort_key_tie_breaks() {
        let mut v = vec![ind(0.5, 5, 5), ind(0.5, 3, 9), ind(0.9, 9, 9), ind(0.5, 3, 4)];
        rank(&mut v);
        let keys: Vec<_> = v.iter().map(|i| (i.score, i.metrics.depth, i.metrics.gate_count)).collect();
        assert_eq!(keys, vec![(0.9, 9, 9), (0.5, 3, 4), (0.5, 3, 9), (0.5, 5, 5)]);
    }

    #[test]
    fn sort_is_stable_for_identical_keys() {
        let mut v: Vec<Individual> = (0..5)
            .map(|k| {
                let mut i = ind(0.7, 2, 2);
                i.metrics.fidelity = k as f64;
                i
            })
            .collect();
        rank(&mut v);
        assert!(v.iter().enumerate().all(|(k, i)| i.metrics.fidelity == k as f64));
    }

    #[test]
    fn elite_count_uses_ceiling() {
        assert_eq!(EvoConfig::default().elite_count(), 24);
        assert_eq!(EvoConfig { pop_size: 2, ..EvoConfig::default() }.elite_count(), 1);
        assert_eq!(EvoConfig { pop_size: 6, ..EvoConfig::default() }.elite_count(), 3);
    }

    #[test]
    fn mutation_applicability() {
        let fixed = Circuit::new(2, vec![Gate::h(0), Gate::cx(0, 1)]).unwrap();
        assert_eq!(applicable_ops(&fixed, 50), vec![MutationOp::Insert, MutationOp::Delete]);
        let full = Circuit::new(2, vec![Gate::rx(0, 1.0); 50]).unwrap();
        assert_eq!(applicable_ops(&full, 50), vec![MutationOp::AnglePerturb, MutationOp::Delete]);
        let single = Circuit::new(2, vec![Gate::x(1)]).unwrap();
        assert_eq!(applicable_ops(&single, 50), vec![MutationOp::Insert]);
        assert!(applicable_ops(&single, 1).is_empty());
    }

    #[test]
    fn mutation_changes_by_one_step() {
        let cfg = EvoConfig::new(3, 0);
        let mut r = stream(11, 0);
        for _ in 0..500 {
            let parent = random_circuit(3, cfg.max_gates, &mut r);
            let child = mutate(&parent, &cfg, &mut r);
            assert!((1..=cfg.max_gates).contains(&child.len()));
            let dl = child.len() as i64 - parent.len() as i64;
            assert!(dl.abs() == 1 || dl == 0);
            if dl == 0 {
                let diff: Vec<_> = parent.gates().iter().zip(child.gates()).filter(|(a, b)| a != b).collect();
                assert!(diff.len() <= 1);
                for (a, b) in diff {
                    assert_eq!((a.kind(), a.qubits()), (b.kind(), b.qubits()));
                    assert!((0.0..TAU).contains(&b.angle().unwrap()));
                }
            }
        }
    }

    #[test]
    fn single_fixed_gate_can_only_grow() {
        let cfg = EvoConfig::new(2, 0);
        let parent = Circuit::new(2, vec![Gate::z(0)]).unwrap();
        let mut r = stream(3, 0);
        for _ in 0..50 {
            assert_eq!(mutate(&parent, &cfg, &mut r).len(), 2);
        }
    }

    #[test]
    fn init_population_is_seeded() {
        let cfg = small(4, 9);
        let a = init_population(&cfg).unwrap();
        assert_eq!(a.len(), cfg.pop_size);
        assert_eq!(a, init_population(&cfg).unwrap());
        assert_ne!(a, init_population(&small(4, 10)).unwrap());
    }

    #[test]
    fn minimal_run() {
        let cfg = EvoConfig { pop_size: 2, generations: 1, ..EvoConfig::new(2, 1) };
        let r = evolve(&cfg, &Objective::fidelity()).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.final_population.len(), 2);
        assert_eq!(r.all_samples.len(), 4);
        assert_eq!(r.final_stats.generation, 1);
    }

    #[test]
    fn elitism_and_population_invariants() {
        let cfg = small(3, 4);
        let r = evolve(&cfg, &Objective::fidelity()).unwrap();
        let mut best: Vec<f64> = r.history.iter().map(|h| h.best_score).collect();
        best.push(r.final_stats.best_score);
        assert!(best.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.all_samples.len(), cfg.pop_size * (cfg.generations + 1));
        for g in 0..=cfg.generations {
            assert_eq!(r.all_samples.iter().filter(|s| s.generation == g).count(), cfg.pop_size);
        }
        assert!(r.all_samples.iter().all(|s| s.individual.metrics.gate_count <= cfg.max_gates));
        assert_eq!(r.best, r.final_population[0]);
        assert_eq!(r.best.score, r.final_stats.best_score);
    }

    #[test]
    fn deterministic_across_pool_sizes() {
        let cfg = small(3, 21);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| evolve(&cfg, &Objective::fidelity()).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.history, b.history);
        assert_eq!(a.all_samples, b.all_samples);
    }

    #[test]
    fn qfi_scores_stay_in_unit_interval() {
        let obj = Objective::qfi(two_qubit_curve()).unwrap();
        let r = evolve(&small(2, 2), &obj).unwrap();
        assert!(r.all_samples.iter().all(|s| (0.0..=1.0).contains(&s.individual.score)));
    }
}
