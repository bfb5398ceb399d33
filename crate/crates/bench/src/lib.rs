//! Shared fixtures for the criterion benchmarks.

use qfi_core::rng;
use qfi_core::sampling::random_circuit;
use qfi_core::Circuit;

/// Deterministic batch of random circuits for timing loops.
pub fn circuit_batch(n_qubits: usize, max_gates: usize, count: usize, seed: u64) -> Vec<Circuit> {
    (0..count as u64).map(|i| random_circuit(n_qubits, max_gates, &mut rng::stream(seed, i))).collect()
}
