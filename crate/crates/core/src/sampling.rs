//! Random-circuit ensembles, fidelity histograms and correlation statistics.
//!
//! Sample `i` of an ensemble is generated from its own counter-based stream
//! `rng::stream(seed, i)`, and all accumulation happens in index order, so the
//! output is a pure function of the configuration regardless of thread count.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::rng;
use crate::state::{fidelity_pure, simulate, target_state, TargetState};
use crate::stats::CorrelationAccumulator;
use crate::MAX_PURE_QUBITS;

pub const DEFAULT_BINS: usize = 200;
pub const DEFAULT_MAX_GATES: usize = 50;
/// Samples generated per parallel batch in streaming mode.
pub const CHUNK_SIZE: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_qubits: usize,
    #[serde(default = "default_max_gates")]
    pub max_gates: usize,
    pub num_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_gates() -> usize {
    DEFAULT_MAX_GATES
}

impl SamplerConfig {
    pub fn new(n_qubits: usize, num_samples: u64, seed: u64) -> SamplerConfig {
        SamplerConfig { n_qubits, max_gates: DEFAULT_MAX_GATES, num_samples, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 || self.n_qubits > MAX_PURE_QUBITS {
            return Err(Error::invalid(format!("n_qubits must be in 2..={MAX_PURE_QUBITS}, got {}", self.n_qubits)));
        }
        if self.max_gates == 0 {
            return Err(Error::invalid("max_gates must be at least 1"));
        }
        Ok(())
    }
}

/// One uniformly random gate: kind uniform over the 16-gate set, distinct
/// qubits, angle uniform in `[0, 2π)`.
pub fn random_gate<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Gate {
    debug_assert!(n_qubits >= 2);
    let kind = GateKind::ALL[rng.random_range(0..GateKind::ALL.len())];
    let first = rng.random_range(0..n_qubits);
    let angle = rng.random_range(0.0..TAU);
    let params: &[f64] = if kind.is_parameterized() { &[angle] } else { &[] };
    let gate = if kind.num_qubits() == 2 {
        let mut second = rng.random_range(0..n_qubits - 1);
        if second >= first {
            second += 1;
        }
        Gate::new(kind, &[first, second], params)
    } else {
        Gate::new(kind, &[first], params)
    };
    gate.expect("random gate is well-formed")
}

/// Random circuit with a gate count uniform in `[1, max_gates]`.
pub fn random_circuit<R: Rng + ?Sized>(n_qubits: usize, max_gates: usize, rng: &mut R) -> Circuit {
    let len = rng.random_range(1..=max_gates);
    let gates = (0..len).map(|_| random_gate(n_qubits, rng)).collect();
    Circuit::from_parts_unchecked(n_qubits, gates)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub fidelity: f64,
    pub gate_count: usize,
    pub depth: usize,
}

fn sample_one(cfg: &SamplerConfig, tau: &TargetState, index: u64) -> SampleRecord {
    let mut r = rng::stream(cfg.seed, index);
    let c = random_circuit(cfg.n_qubits, cfg.max_gates, &mut r);
    SampleRecord {
        fidelity: fidelity_pure(&simulate(&c), tau).expect("dimensions match"),
        gate_count: c.len(),
        depth: c.depth(),
    }
}

/// All `num_samples` records, in index order.
pub fn sample_ensemble(cfg: &SamplerConfig) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    let tau = target_state(cfg.n_qubits)?;
    Ok((0..cfg.num_samples).into_par_iter().map(|i| sample_one(cfg, &tau, i)).collect())
}

/// Aggregates of a streamed ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    pub bins: BinAccumulator,
    pub gates: CorrelationAccumulator,
    pub depth: CorrelationAccumulator,
    pub below_half: u64,
    pub at_least_099: u64,
}

impl EnsembleSummary {
    pub fn new(n_bins: usize) -> EnsembleSummary {
        EnsembleSummary {
            bins: BinAccumulator::new(n_bins),
            gates: CorrelationAccumulator::default(),
            depth: CorrelationAccumulator::default(),
            below_half: 0,
            at_least_099: 0,
        }
    }

    pub fn push(&mut self, r: &SampleRecord) {
        self.bins.push(r.fidelity);
        self.gates.push(r.fidelity, r.gate_count as f64);
        self.depth.push(r.fidelity, r.depth as f64);
        self.below_half += u64::from(r.fidelity < 0.5);
        self.at_least_099 += u64::from(r.fidelity >= 0.99);
    }

    pub fn total(&self) -> u64 {
        self.bins.total()
    }
}

/// Generates the ensemble in fixed-size index chunks, each computed in
/// parallel, handing every chunk to `on_chunk` (first index, records) before
/// folding it into the summary.
pub fn sample_ensemble_streaming<F>(cfg: &SamplerConfig, n_bins: usize, mut on_chunk: F) -> Result<EnsembleSummary>
where
    F: FnMut(u64, &[SampleRecord]) -> Result<()>,
{
    cfg.validate()?;
    let tau = target_state(cfg.n_qubits)?;
    let mut summary = EnsembleSummary::new(n_bins);
    let mut start = 0u64;
    let mut chunk = Vec::with_capacity(CHUNK_SIZE.min(cfg.num_samples as usize));
    while start < cfg.num_samples {
        let end = (start + CHUNK_SIZE as u64).min(cfg.num_samples);
        chunk.clear();
        (start as usize..end as usize).into_par_iter().map(|i| sample_one(cfg, &tau, i as u64)).collect_into_vec(&mut chunk);
        on_chunk(start, &chunk)?;
        for r in &chunk {
            summary.push(r);
        }
        start = end;
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// Mean fidelity of the bin's samples; the bin midpoint when empty.
    pub mean_fidelity: f64,
    pub probability: f64,
}

/// Equal-width histogram of fidelities over `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedDistribution {
    pub n_bins: usize,
    pub bins: Vec<Bin>,
    pub total: u64,
}

impl BinnedDistribution {
    /// Rebuilds a distribution from externally supplied bins, checking that
    /// they tile `[0, 1]` and that probabilities match counts.
    pub fn from_bins(bins: Vec<Bin>) -> Result<BinnedDistribution> {
        if bins.is_empty() {
            return Err(Error::InsufficientData("no bins".into()));
        }
        let total: u64 = bins.iter().map(|b| b.count).sum();
        if total == 0 {
            return Err(Error::InsufficientData("all bins are empty".into()));
        }
        let n = bins.len();
        for (i, b) in bins.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            if (b.lo - lo).abs() > 1e-9 || (b.hi - hi).abs() > 1e-9 {
                return Err(Error::invalid(format!("bin {i} spans [{}, {}], expected [{lo}, {hi}]", b.lo, b.hi)));
            }
            let p = b.count as f64 / total as f64;
            if (b.probability - p).abs() > 1e-9 {
                return Err(Error::invalid(format!("bin {i} probability {} does not match count {}", b.probability, b.count)));
            }
        }
        Ok(BinnedDistribution { n_bins: n, bins, total })
    }

    pub fn non_empty(&self) -> impl Iterator<Item = &Bin> {
        self.bins.iter().filter(|b| b.count > 0)
    }
}

/// Mergeable partial histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct BinAccumulator {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl BinAccumulator {
    pub fn new(n_bins: usize) -> BinAccumulator {
        assert!(n_bins >= 1, "need at least one bin");
        BinAccumulator { counts: vec![0; n_bins], sums: vec![0.0; n_bins] }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_index(&self, f: f64) -> usize {
        let n = self.counts.len();
        ((f.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1)
    }

    pub fn push(&mut self, f: f64) {
        let i = self.bin_index(f);
        self.counts[i] += 1;
        self.sums[i] += f;
    }

    pub fn merge(&mut self, other: &BinAccumulator) {
        assert_eq!(self.counts.len(), other.counts.len(), "bin count mismatch");
        for i in 0..self.counts.len() {
            self.counts[i] += other.counts[i];
            self.sums[i] += other.sums[i];
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn finish(&self) -> Result<BinnedDistribution> {
        let total = self.total();
        if total == 0 {
            return Err(Error::invalid("cannot bin an empty sample"));
        }
        let n = self.counts.len();
        let bins = (0..n)
            .map(|i| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                let count = self.counts[i];
                let mean_fidelity = if count > 0 { (self.sums[i] / count as f64).clamp(lo, hi) } else { 0.5 * (lo + hi) };
                Bin { lo, hi, count, mean_fidelity, probability: count as f64 / total as f64 }
            })
            .collect();
        Ok(BinnedDistribution { n_bins: n, bins, total })
    }
}

pub fn bin_samples(records: &[SampleRecord], n_bins: usize) -> Result<BinnedDistribution> {
    bin_fidelities(records.iter().map(|r| r.fidelity), n_bins)
}

pub fn bin_fidelities<I: IntoIterator<Item = f64>>(fidelities: I, n_bins: usize) -> Result<BinnedDistribution> {
    if n_bins == 0 {
        return Err(Error::invalid("n_bins must be positive"));
    }
    let mut acc = BinAccumulator::new(n_bins);
    for f in fidelities {
        acc.push(f);
    }
    acc.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationField {
    GateCount,
    Depth,
}

/// Sample Pearson coefficient between fidelity and a structural field.
pub fn pearson(records: &[SampleRecord], field: CorrelationField) -> Result<f64> {
    let mut acc = CorrelationAccumulator::default();
    for r in records {
        let y = match field {
            CorrelationField::GateCount => r.gate_count,
            CorrelationField::Depth => r.depth,
        };
        acc.push(r.fidelity, y as f64);
    }
    acc.pearson()
}
