//! Run configuration file.
//!
//! A single JSON document with a `schema_version` and one section per
//! pipeline stage. Unknown keys are rejected; missing keys take defaults.

use std::path::Path;

use anyhow::{bail, Context};
use qfi_core::sampling::{DEFAULT_BINS, DEFAULT_MAX_GATES};
use qfi_core::{EvoConfig, NoiseModel, QfiParams, SamplerConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub qfi: QfiSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub compare: CompareSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub n_qubits: usize,
    pub num_samples: u64,
    pub max_gates: usize,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection { n_qubits: 4, num_samples: 100_000, max_gates: DEFAULT_MAX_GATES, n_bins: DEFAULT_BINS, seed: 0 }
    }
}

impl SamplerSection {
    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig { n_qubits: self.n_qubits, max_gates: self.max_gates, num_samples: self.num_samples, seed: self.seed }
    }
}

/// Curve-fitting parameters. `n_qubits` overrides the value read from the
/// sampling summary next to the bins file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QfiSection {
    pub n_qubits: Option<usize>,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub grid_points: usize,
    pub n_knots: usize,
    pub ridge_lambda: f64,
}

impl Default for QfiSection {
    fn default() -> Self {
        let p = QfiParams::default();
        QfiSection {
            n_qubits: None,
            max_depth: p.max_depth,
            min_leaf: p.min_leaf,
            grid_points: p.grid_points,
            n_knots: p.n_knots,
            ridge_lambda: p.ridge_lambda,
        }
    }
}

impl QfiSection {
    pub fn params(&self) -> QfiParams {
        QfiParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            grid_points: self.grid_points,
            n_knots: self.n_knots,
            ridge_lambda: self.ridge_lambda,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub n_qubits: usize,
    pub pop_size: usize,
    pub generations: usize,
    pub elite_fraction: f64,
    pub max_gates: usize,
    pub angle_sigma: f64,
    pub seed: u64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let d = EvoConfig::default();
        EvolutionSection {
            n_qubits: d.n_qubits,
            pop_size: d.pop_size,
            generations: d.generations,
            elite_fraction: d.elite_fraction,
            max_gates: d.max_gates,
            angle_sigma: d.angle_sigma,
            seed: d.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub seeds: Vec<u64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { seeds: (0..10).collect() }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            sampler: SamplerSection::default(),
            qfi: QfiSection::default(),
            evolution: EvolutionSection::default(),
            noise: NoiseModel::default(),
            compare: CompareSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> anyhow::Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version);
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let s = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                RunConfig::from_json(&s).with_context(|| format!("in config {}", p.display()))
            }
        }
    }

    pub fn evo_config(&self) -> EvoConfig {
        let e = &self.evolution;
        EvoConfig {
            n_qubits: e.n_qubits,
            pop_size: e.pop_size,
            generations: e.generations,
            elite_fraction: e.elite_fraction,
            max_gates: e.max_gates,
            noise: self.noise,
            angle_sigma: e.angle_sigma,
            seed: e.seed,
        }
    }
}
