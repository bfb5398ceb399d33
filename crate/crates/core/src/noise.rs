//! Gate-local depolarizing noise and the robustness metric.
//!
//! After each gate the channel
//! `ρ → (1-p)ρ + p/(4^k-1) Σ_{P≠I} PρP` acts on the gate's own `k` qubits,
//! with `p = p1` for one-qubit gates (identity included) and `p = p2` for
//! two-qubit gates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::state::{fidelity_mixed, fidelity_pure, simulate, DensityMatrix, StateVector, TargetState};
use crate::MAX_DENSITY_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default = "NoiseModel::default_p1")]
    pub p1: f64,
    #[serde(default = "NoiseModel::default_p2")]
    pub p2: f64,
    #[serde(default = "NoiseModel::default_epsilon")]
    pub epsilon: f64,
}

impl NoiseModel {
    fn default_p1() -> f64 {
        0.001
    }
    fn default_p2() -> f64 {
        0.01
    }
    fn default_epsilon() -> f64 {
        1e-9
    }

    pub fn new(p1: f64, p2: f64, epsilon: f64) -> Result<NoiseModel> {
        let nm = NoiseModel { p1, p2, epsilon };
        nm.validate()?;
        Ok(nm)
    }

    /// Zero-rate model with the default division guard.
    pub fn noiseless() -> NoiseModel {
        NoiseModel { p1: 0.0, p2: 0.0, epsilon: Self::default_epsilon() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p1) || !(0.0..=1.0).contains(&self.p2) {
            return Err(Error::invalid(format!("noise rates must lie in [0, 1], got p1={} p2={}", self.p1, self.p2)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    fn rate_for(&self, arity: usize) -> f64 {
        if arity == 1 {
            self.p1
        } else {
            self.p2
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p1: Self::default_p1(), p2: Self::default_p2(), epsilon: Self::default_epsilon() }
    }
}

/// Uniform non-identity Pauli channel with total error probability `p` on
/// one or two qubits.
///
/// Uses `Σ_P PρP = 4^k (Tr_S ρ ⊗ I/2^k)` over all `4^k` Paulis on the subset
/// `S`: coherences across `S` shrink by `λ = 1 - p·4^k/(4^k-1)` and each block
/// diagonal in `S` relaxes towards its mean by the same factor.
pub fn depolarize(rho: &DensityMatrix, qubits: &[usize], p: f64) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    depolarize_in_place(&mut out, qubits, p)?;
    Ok(out)
}

pub(crate) fn depolarize_in_place(rho: &mut DensityMatrix, qubits: &[usize], p: f64) -> Result<()> {
    let n = rho.n_qubits();
    match qubits {
        [a] if *a < n => {}
        [a, b] if *a < n && *b < n && a != b => {}
        _ => return Err(Error::invalid(format!("depolarize needs 1 or 2 distinct valid qubits, got {qubits:?}"))),
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("depolarizing probability must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(());
    }
    let k = qubits.len();
    let paulis = (1usize << (2 * k)) as f64;
    let lambda = 1.0 - p * paulis / (paulis - 1.0);
    let dim = rho.dim();
    let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
    let sub: Vec<usize> = (0..1usize << k)
        .map(|s| qubits.iter().enumerate().filter(|(j, _)| s >> j & 1 == 1).map(|(_, q)| 1usize << q).sum())
        .collect();
    let data = rho.data_mut();
    let weight = (1.0 - lambda) / sub.len() as f64;
    let mut block = [Complex64::new(0.0, 0.0); 4];
    for r in 0..dim {
        if r & mask != 0 {
            continue;
        }
        for c in 0..dim {
            if c & mask != 0 {
                continue;
            }
            for (si, &rs) in sub.iter().enumerate() {
                for (sj, &cs) in sub.iter().enumerate() {
                    if si != sj {
                        data[(r | rs) * dim + (c | cs)] *= lambda;
                    }
                }
            }
            let mut mean = Complex64::new(0.0, 0.0);
            for (si, &s) in sub.iter().enumerate() {
                block[si] = data[(r | s) * dim + (c | s)];
                mean += block[si];
            }
            for (si, &s) in sub.iter().enumerate() {
                data[(r | s) * dim + (c | s)] = lambda * block[si] + weight * mean;
            }
        }
    }
    Ok(())
}

/// Noisy evolution from `|0…0⟩⟨0…0|` with noise after every gate.
pub fn simulate_noisy(c: &Circuit, nm: &NoiseModel) -> Result<DensityMatrix> {
    simulate_noisy_capped(c, nm, MAX_DENSITY_QUBITS)
}

pub fn simulate_noisy_capped(c: &Circuit, nm: &NoiseModel, cap: usize) -> Result<DensityMatrix> {
    if c.n_qubits() > cap {
        return Err(Error::invalid(format!("density-matrix simulation limited to {cap} qubits, got {}", c.n_qubits())));
    }
    nm.validate()?;
    let mut rho = DensityMatrix::from_pure(&StateVector::zero(c.n_qubits()));
    for g in c.gates() {
        rho.apply_unitary(g)?;
        depolarize_in_place(&mut rho, g.qubits(), nm.rate_for(g.qubits().len()))?;
    }
    Ok(rho)
}

/// `min(1, F_noisy / F_ideal)`, falling back to `min(1, F_noisy)` when the
/// ideal fidelity is below `epsilon`.
pub fn robustness(c: &Circuit, nm: &NoiseModel, tau: &TargetState) -> Result<f64> {
    let ideal = fidelity_pure(&simulate(c), tau)?;
    robustness_with_ideal(c, nm, tau, ideal)
}

pub(crate) fn robustness_with_ideal(c: &Circuit, nm: &NoiseModel, tau: &TargetState, ideal: f64) -> Result<f64> {
    // Zero rates make every channel the identity, so the noisy state is the ideal one.
    let noisy = if nm.p1 == 0.0 && nm.p2 == 0.0 { ideal } else { fidelity_mixed(&simulate_noisy(c, nm)?, tau)? };
    let r = if ideal >= nm.epsilon { noisy / ideal } else { noisy };
    Ok(r.clamp(0.0, 1.0))
}
