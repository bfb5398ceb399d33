//! Pure and mixed states, exact simulation and the state metrics used for
//! scoring: fidelity to a Bell/GHZ target and single-qubit entropies.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::circuit::{gate_matrix, Circuit, Gate, GateMatrix};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn apply_single(amps: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + bit {
            let a = amps[i];
            let b = amps[i | bit];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i | bit] = m[1][0] * a + m[1][1] * b;
        }
        base += bit << 1;
    }
}

pub(crate) fn apply_two(amps: &mut [Complex64], q0: usize, q1: usize, m: &[[Complex64; 4]; 4]) {
    let b0 = 1usize << q0;
    let b1 = 1usize << q1;
    for i in 0..amps.len() {
        if i & (b0 | b1) != 0 {
            continue;
        }
        let idx = [i, i | b0, i | b1, i | b0 | b1];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &out) in idx.iter().enumerate() {
            amps[out] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
    }
}

/// Applies the gate `m` on the given (already offset) bit positions.
pub(crate) fn apply_matrix(amps: &mut [Complex64], qubits: &[usize], m: &GateMatrix) {
    match m {
        GateMatrix::Single(u) => apply_single(amps, qubits[0], u),
        GateMatrix::Two(u) => apply_two(amps, qubits[0], qubits[1], u),
    }
}

pub(crate) fn conj_matrix(m: &GateMatrix) -> GateMatrix {
    match m {
        GateMatrix::Single(u) => GateMatrix::Single(u.map(|row| row.map(|z| z.conj()))),
        GateMatrix::Two(u) => GateMatrix::Two(u.map(|row| row.map(|z| z.conj()))),
    }
}

/// Normalized pure state of `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> StateVector {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        StateVector { n_qubits, amplitudes }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<StateVector> {
        if index >= 1 << n_qubits {
            return Err(Error::invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<StateVector> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::invalid(format!("expected {} amplitudes, got {}", 1 << n_qubits, amplitudes.len())));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("state is not normalized (norm² = {norm})")));
        }
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        if g.max_qubit() >= self.n_qubits {
            return Err(Error::invalid(format!("gate on qubits {:?} out of range for {} qubits", g.qubits(), self.n_qubits)));
        }
        apply_matrix(&mut self.amplitudes, g.qubits(), &gate_matrix(g));
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// `(U_g ⊗ I)·state`.
pub fn apply_gate(state: &StateVector, g: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(g)?;
    Ok(out)
}

/// Applies the circuit to `|0…0⟩`.
pub fn simulate(c: &Circuit) -> StateVector {
    let mut state = StateVector::zero(c.n_qubits());
    for g in c.gates() {
        apply_matrix(&mut state.amplitudes, g.qubits(), &gate_matrix(g));
    }
    state
}

/// Pure target: Bell `|Φ⁺⟩` for two qubits, GHZ otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl TargetState {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn as_state(&self) -> StateVector {
        StateVector { n_qubits: self.n_qubits, amplitudes: self.amplitudes.clone() }
    }
}

pub fn target_state(n: usize) -> Result<TargetState> {
    if n < 2 {
        return Err(Error::invalid(format!("target state needs at least 2 qubits, got {n}")));
    }
    if n > crate::MAX_PURE_QUBITS {
        return Err(Error::invalid(format!("target state limited to {} qubits, got {n}", crate::MAX_PURE_QUBITS)));
    }
    let mut amplitudes = vec![ZERO; 1 << n];
    amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(TargetState { n_qubits: n, amplitudes })
}

/// `|⟨τ|ψ⟩|²`.
pub fn fidelity_pure(state: &StateVector, tau: &TargetState) -> Result<f64> {
    if state.n_qubits != tau.n_qubits {
        return Err(Error::invalid(format!("state has {} qubits, target {}", state.n_qubits, tau.n_qubits)));
    }
    let overlap: Complex64 = tau.amplitudes.iter().zip(&state.amplitudes).map(|(t, a)| t.conj() * a).sum();
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

/// `⟨τ|ρ|τ⟩`, clamped to `[0, 1]`.
pub fn fidelity_mixed(rho: &DensityMatrix, tau: &TargetState) -> Result<f64> {
    if rho.n_qubits != tau.n_qubits {
        return Err(Error::invalid(format!("density matrix has {} qubits, target {}", rho.n_qubits, tau.n_qubits)));
    }
    let dim = rho.dim();
    let mut acc = ZERO;
    for (r, tr) in tau.amplitudes.iter().enumerate() {
        if *tr == ZERO {
            continue;
        }
        let row = &rho.data[r * dim..(r + 1) * dim];
        let inner: Complex64 = row.iter().zip(&tau.amplitudes).map(|(x, tc)| x * tc).sum();
        acc += tr.conj() * inner;
    }
    debug_assert!(acc.im.abs() < 1e-9, "fidelity has imaginary residue {}", acc.im);
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Density matrix stored row-major; element `(r, c)` lives at `r * 2^n + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all within 1e-9).
    pub fn new(n_qubits: usize, data: Vec<Complex64>) -> Result<DensityMatrix> {
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return Err(Error::invalid(format!("expected {} entries, got {}", dim * dim, data.len())));
        }
        let rho = DensityMatrix { n_qubits, data };
        if rho.hermiticity_error() > 1e-9 {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        if (rho.trace().re - 1.0).abs() > 1e-9 || rho.trace().im.abs() > 1e-9 {
            return Err(Error::invalid(format!("density matrix trace is {}", rho.trace())));
        }
        if !rho.is_positive_semidefinite(1e-9) {
            return Err(Error::invalid("density matrix has a negative eigenvalue"));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: Vec<Complex64>) -> DensityMatrix {
        debug_assert_eq!(data.len(), 1 << (2 * n_qubits));
        DensityMatrix { n_qubits, data }
    }

    pub fn from_pure(state: &StateVector) -> DensityMatrix {
        let dim = state.amplitudes.len();
        let mut data = vec![ZERO; dim * dim];
        for (r, a) in state.amplitudes.iter().enumerate() {
            for (c, b) in state.amplitudes.iter().enumerate() {
                data[r * dim + c] = a * b.conj();
            }
        }
        DensityMatrix { n_qubits: state.n_qubits, data }
    }

    pub fn maximally_mixed(n_qubits: usize) -> DensityMatrix {
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { n_qubits, data }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Cholesky test on `ρ + tol·I`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let dim = self.dim();
        let mut l = vec![ZERO; dim * dim];
        for j in 0..dim {
            let mut d = self.get(j, j).re + tol;
            for k in 0..j {
                d -= l[j * dim + k].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let djj = d.sqrt();
            l[j * dim + j] = Complex64::new(djj, 0.0);
            for i in j + 1..dim {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k].conj();
                }
                l[i * dim + j] = s / djj;
            }
        }
        true
    }

    /// `ρ → UρU†` for the gate's unitary.
    pub fn apply_unitary(&mut self, g: &Gate) -> Result<()> {
        if g.max_qubit() >= self.n_qubits {
            return Err(Error::invalid(format!("gate on qubits {:?} out of range for {} qubits", g.qubits(), self.n_qubits)));
        }
        let m = gate_matrix(g);
        let n = self.n_qubits;
        // Row index occupies the high n bits, column index the low n bits.
        let rows: Vec<usize> = g.qubits().iter().map(|q| q + n).collect();
        apply_matrix(&mut self.data, &rows, &m);
        apply_matrix(&mut self.data, g.qubits(), &conj_matrix(&m));
        Ok(())
    }

    /// Largest elementwise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// States that can be reduced to a single qubit.
pub trait QubitReduce {
    fn num_qubits(&self) -> usize;

    /// 2×2 reduced density matrix of qubit `i`.
    fn reduced_qubit(&self, i: usize) -> Result<DensityMatrix>;

    /// Mean single-qubit von Neumann entropy.
    fn avg_entropy(&self) -> f64 {
        let n = self.num_qubits();
        let total: f64 = (0..n)
            .map(|i| von_neumann_entropy(&self.reduced_qubit(i).expect("index within range")))
            .sum();
        total / n as f64
    }
}

fn check_qubit(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::invalid(format!("qubit {i} out of range for {n} qubits")));
    }
    Ok(())
}

impl QubitReduce for StateVector {
    fn num_qubits(&self) -> usize {
        self.n_qubits
    }

    fn reduced_qubit(&self, i: usize) -> Result<DensityMatrix> {
        check_qubit(i, self.n_qubits)?;
        let bit = 1usize << i;
        let (mut p0, mut p1, mut off) = (0.0, 0.0, ZERO);
        for k in 0..self.amplitudes.len() {
            if k & bit != 0 {
                continue;
            }
            let a0 = self.amplitudes[k];
            let a1 = self.amplitudes[k | bit];
            p0 += a0.norm_sqr();
            p1 += a1.norm_sqr();
            off += a0 * a1.conj();
        }
        Ok(DensityMatrix::from_raw(1, vec![Complex64::new(p0, 0.0), off, off.conj(), Complex64::new(p1, 0.0)]))
    }
}

impl QubitReduce for DensityMatrix {
    fn num_qubits(&self) -> usize {
        self.n_qubits
    }

    fn reduced_qubit(&self, i: usize) -> Result<DensityMatrix> {
        check_qubit(i, self.n_qubits)?;
        let bit = 1usize << i;
        let mut out = [ZERO; 4];
        for k in 0..self.dim() {
            if k & bit != 0 {
                continue;
            }
            out[0] += self.get(k, k);
            out[1] += self.get(k, k | bit);
            out[2] += self.get(k | bit, k);
            out[3] += self.get(k | bit, k | bit);
        }
        Ok(DensityMatrix::from_raw(1, out.to_vec()))
    }
}

pub fn reduced_qubit<S: QubitReduce + ?Sized>(state: &S, i: usize) -> Result<DensityMatrix> {
    state.reduced_qubit(i)
}

pub fn avg_entropy<S: QubitReduce + ?Sized>(state: &S) -> f64 {
    state.avg_entropy()
}

/// Closed-form eigenvalues of a 2×2 Hermitian matrix, ascending.
pub fn qubit_eigenvalues(rho: &DensityMatrix) -> [f64; 2] {
    assert_eq!(rho.n_qubits, 1, "expected a single-qubit density matrix");
    let a = rho.data[0].re;
    let d = rho.data[3].re;
    let b = rho.data[1];
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - half_gap, mean + half_gap]
}

/// `-Tr(ρ log₂ ρ)` of a single-qubit density matrix.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = qubit_eigenvalues(rho)
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum();
    s.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amps(state: &StateVector, expect: &[Complex64]) {
        for (i, (a, e)) in state.amplitudes().iter().zip(expect).enumerate() {
            assert!((a - e).norm() < 1e-12, "amp {i}: {a} vs {e}");
        }
    }

    #[test]
    fn hadamard_on_qubit_zero() {
        let s = apply_gate(&StateVector::zero(2), &Gate::h(0)).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_amps(&s, &[c(h, 0.0), c(h, 0.0), ZERO, ZERO]);
    }

    #[test]
    fn identity_leaves_state() {
        let s = apply_gate(&StateVector::zero(2), &Gate::h(1)).unwrap();
        assert_eq!(apply_gate(&s, &Gate::i(0)).unwrap(), s);
    }

    #[test]
    fn cx_prepares_bell() {
        let s = apply_gate(&StateVector::zero(2), &Gate::h(0)).unwrap();
        let bell = apply_gate(&s, &Gate::cx(0, 1)).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_amps(&bell, &[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
    }

    #[test]
    fn apply_out_of_range_fails() {
        assert!(apply_gate(&StateVector::zero(2), &Gate::x(2)).is_err());
    }

    #[test]
    fn simulate_examples() {
        let bell = simulate(&Circuit::ghz(2).unwrap());
        let h = FRAC_1_SQRT_2;
        assert_amps(&bell, &[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        assert_eq!(simulate(&Circuit::empty(3).unwrap()), StateVector::zero(3));
        let xx = Circuit::new(3, vec![Gate::x(0), Gate::x(0)]).unwrap();
        assert_amps(&simulate(&xx), StateVector::zero(3).amplitudes());
    }

    #[test]
    fn targets() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(target_state(2).unwrap().amplitudes(), &[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        let ghz = target_state(3).unwrap();
        assert_eq!(ghz.amplitudes()[0], c(h, 0.0));
        assert_eq!(ghz.amplitudes()[7], c(h, 0.0));
        assert_eq!(ghz.amplitudes().iter().filter(|a| **a != ZERO).count(), 2);
        assert!(target_state(1).is_err());
    }

    #[test]
    fn pure_fidelity_examples() {
        let tau = target_state(2).unwrap();
        assert!((fidelity_pure(&simulate(&Circuit::ghz(2).unwrap()), &tau).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity_pure(&StateVector::zero(2), &tau).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity_pure(&StateVector::basis(2, 2).unwrap(), &tau).unwrap().abs() < 1e-12);
        assert!(fidelity_pure(&StateVector::zero(3), &tau).is_err());
    }

    #[test]
    fn mixed_fidelity_examples() {
        let tau = target_state(2).unwrap();
        let bell = DensityMatrix::from_pure(&tau.as_state());
        assert!((fidelity_mixed(&bell, &tau).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity_mixed(&DensityMatrix::maximally_mixed(2), &tau).unwrap() - 0.25).abs() < 1e-12);
        let zero = DensityMatrix::from_pure(&StateVector::zero(2));
        assert!((fidelity_mixed(&zero, &tau).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity_mixed(&DensityMatrix::maximally_mixed(3), &tau).is_err());
    }

    #[test]
    fn reductions() {
        let bell = simulate(&Circuit::ghz(2).unwrap());
        let r = bell.reduced_qubit(0).unwrap();
        assert!(r.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-12);
        let r = StateVector::zero(2).reduced_qubit(1).unwrap();
        assert!(r.max_abs_diff(&DensityMatrix::from_pure(&StateVector::zero(1))) < 1e-12);
        let ghz = simulate(&Circuit::ghz(3).unwrap());
        let r = ghz.reduced_qubit(2).unwrap();
        assert!(r.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-12);
        assert!(ghz.reduced_qubit(3).is_err());
        let rho = DensityMatrix::from_pure(&ghz);
        assert!(rho.reduced_qubit(2).unwrap().max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(1)) - 1.0).abs() < 1e-12);
        assert_eq!(von_neumann_entropy(&DensityMatrix::from_pure(&StateVector::zero(1))), 0.0);
        let rho = DensityMatrix::new(1, vec![c(0.9, 0.0), ZERO, ZERO, c(0.1, 0.0)]).unwrap();
        // -0.9 log2 0.9 - 0.1 log2 0.1, evaluated with mpmath at 30 digits.
        assert!((von_neumann_entropy(&rho) - 0.468_995_593_589_281_2).abs() < 1e-12);
    }

    #[test]
    fn average_entropy_examples() {
        assert!((simulate(&Circuit::ghz(2).unwrap()).avg_entropy() - 1.0).abs() < 1e-9);
        assert!(StateVector::zero(3).avg_entropy().abs() < 1e-12);
        assert!((simulate(&Circuit::ghz(5).unwrap()).avg_entropy() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(1, vec![c(0.5, 0.0), c(0.6, 0.0), c(0.6, 0.0), c(0.5, 0.0)]).is_err());
        assert!(DensityMatrix::new(1, vec![c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]).is_err());
        assert!(DensityMatrix::new(1, vec![c(0.6, 0.0), ZERO, ZERO, c(0.5, 0.0)]).is_err());
        assert!(DensityMatrix::new(1, vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]).is_ok());
    }

    #[test]
    fn density_unitary_matches_pure_evolution() {
        let circuit = Circuit::new(3, vec![Gate::h(0), Gate::cy(0, 2), Gate::rx(1, 0.7), Gate::cz(2, 1), Gate::t(2)]).unwrap();
        let mut rho = DensityMatrix::from_pure(&StateVector::zero(3));
        for g in circuit.gates() {
            rho.apply_unitary(g).unwrap();
        }
        assert!(rho.max_abs_diff(&DensityMatrix::from_pure(&simulate(&circuit))) < 1e-12);
    }
}
