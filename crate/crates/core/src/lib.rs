//! Quantum functional information (QFI) toolkit.
//!
//! QFI scores a circuit by how rare its functional outcome is: the fidelity
//! of its output state to a Bell/GHZ target is compared against the fidelity
//! distribution of a large random-circuit ensemble, and the rarity is reported
//! in bits as `-log2 P(f)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`circuit`] and [`state`]: gate set, exact pure-state simulation, fidelity,
//!   single-qubit entropies and depth.
//! - [`noise`]: density-matrix simulation under local depolarizing noise and the
//!   robustness metric.
//! - [`sampling`]: seeded, thread-count independent random-circuit ensembles,
//!   histogram binning and correlation statistics.
//! - [`qfi`]: tree regression of the binned distribution, `-log2` transform and
//!   penalized spline smoothing into a [`qfi::QfiCurve`].
//! - [`evolution`]: elitist mutation-only evolutionary search scored by fidelity
//!   or by QFI.
//! - [`io`]: the CSV/JSON artifact formats shared with the command line tool.

pub mod circuit;
pub mod error;
pub mod evolution;
pub mod io;
pub mod noise;
pub mod qfi;
pub mod rng;
pub mod sampling;
pub mod state;
pub mod stats;

pub use circuit::{Circuit, Gate, GateKind, GateMatrix};
pub use error::{Error, Result};
pub use evolution::{EvoConfig, EvolutionResult, GenerationStats, Individual, Metrics, Objective, ObjectiveMode};
pub use noise::NoiseModel;
pub use qfi::{QfiCurve, QfiParams, QfiThresholdResult, RegressionTree};
pub use sampling::{BinnedDistribution, SampleRecord, SamplerConfig};
pub use state::{DensityMatrix, StateVector, TargetState};

/// Largest register simulated as a pure state.
pub const MAX_PURE_QUBITS: usize = 8;
/// Largest register simulated as a density matrix.
pub const MAX_DENSITY_QUBITS: usize = 6;
