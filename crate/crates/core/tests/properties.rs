mod support {
    pub mod oracle;
}

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qfi_core::noise::{depolarize, robustness, simulate_noisy};
use qfi_core::qfi::{build_qfi_curve, QfiParams, RegressionTree};
use qfi_core::rng::stream;
use qfi_core::sampling::{bin_samples, random_circuit, sample_ensemble, sample_ensemble_streaming, BinAccumulator};
use qfi_core::state::target_state;
use qfi_core::{Circuit, DensityMatrix, NoiseModel, SamplerConfig};
use rand::Rng;
use support::oracle::{self, Mat};

fn random_density(n: usize, seed: u64) -> DensityMatrix {
    let d = 1 << n;
    let mut r = stream(seed, 77);
    let a: Vec<C> = (0..d * d).map(|_| C::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let mut rho = vec![C::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            rho[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k].conj()).sum();
        }
    }
    let tr: f64 = (0..d).map(|i| rho[i * d + i].re).sum();
    rho.iter_mut().for_each(|x| *x /= tr);
    DensityMatrix::new(n, rho).unwrap()
}

fn to_mat(rho: &DensityMatrix) -> Mat {
    let d = rho.dim();
    (0..d).map(|r| (0..d).map(|c| rho.get(r, c)).collect()).collect()
}

fn dagger(m: &Mat) -> Mat {
    let d = m.len();
    (0..d).map(|r| (0..d).map(|c| m[c][r].conj()).collect()).collect()
}

/// Depolarizing channel as an explicit Pauli sum:
/// `(1-p)ρ + p/(4^k-1) Σ_{P≠I} PρP†` over Paulis supported on `qubits`.
fn pauli_depolarize(rho: &Mat, n: usize, qubits: &[usize], p: f64) -> Mat {
    let names = ["i", "x", "y", "z"];
    let k = qubits.len();
    let weight = p / (4f64.powi(k as i32) - 1.0);
    let d = rho.len();
    let mut out: Mat = rho.iter().map(|r| r.iter().map(|x| x * (1.0 - p)).collect()).collect();
    for code in 1..4usize.pow(k as u32) {
        let mut op = oracle::identity(d);
        for (j, &q) in qubits.iter().enumerate() {
            let single = oracle::block(names[(code >> (2 * j)) & 3], 0.0);
            let mut full = vec![vec![C::new(1.0, 0.0)]];
            for qq in (0..n).rev() {
                full = oracle::kron(&full, &if qq == q { single.clone() } else { oracle::identity(2) });
            }
            op = oracle::matmul(&full, &op);
        }
        let term = oracle::matmul(&oracle::matmul(&op, rho), &dagger(&op));
        for r in 0..d {
            for c in 0..d {
                out[r][c] += term[r][c] * weight;
            }
        }
    }
    out
}

fn mat_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn noisy_simulation_matches_pauli_sum_oracle() {
    let nm = NoiseModel::new(0.02, 0.05, 1e-9).unwrap();
    for n in [2, 3] {
        for i in 0..25 {
            let c = random_circuit(n, 12, &mut stream(500 + n as u64, i));
            let mut rho = to_mat(&DensityMatrix::from_pure(&qfi_core::StateVector::zero(n)));
            for g in c.gates() {
                let u = oracle::gate_operator(n, g);
                rho = oracle::matmul(&oracle::matmul(&u, &rho), &dagger(&u));
                let p = if g.qubits().len() == 1 { nm.p1 } else { nm.p2 };
                rho = pauli_depolarize(&rho, n, g.qubits(), p);
            }
            let fast = to_mat(&simulate_noisy(&c, &nm).unwrap());
            assert!(mat_diff(&fast, &rho) < 1e-12, "n={n} i={i}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn depolarize_matches_oracle_and_keeps_a_state(seed in any::<u64>(), n in 1usize..=3, p in 0.0f64..=1.0, pick in 0usize..6) {
        let rho = random_density(n, seed);
        let qubits: Vec<usize> = match (n, pick % 3) {
            (1, _) => vec![0],
            (_, 0) => vec![pick % n],
            (_, 1) => vec![0, n - 1],
            _ => vec![n - 1, 0],
        };
        let out = depolarize(&rho, &qubits, p).unwrap();
        prop_assert!((out.trace() - C::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(out.hermiticity_error() < 1e-12);
        prop_assert!(mat_diff(&to_mat(&out), &pauli_depolarize(&to_mat(&rho), n, &qubits, p)) < 1e-12);
        if p <= 15.0 / 16.0 || qubits.len() == 1 && p <= 0.75 {
            prop_assert!(out.is_positive_semidefinite(1e-9));
        }
    }

    #[test]
    fn robustness_is_a_fraction(seed in any::<u64>(), n in 2usize..=4) {
        let c = random_circuit(n, 40, &mut stream(seed, 0));
        let tau = target_state(n).unwrap();
        let r = robustness(&c, &NoiseModel::default(), &tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        let ideal = qfi_core::state::fidelity_pure(&qfi_core::state::simulate(&c), &tau).unwrap();
        if ideal >= 1e-9 {
            prop_assert_eq!(robustness(&c, &NoiseModel::noiseless(), &tau).unwrap(), 1.0);
        }
    }

    #[test]
    fn circuits_round_trip_through_json(seed in any::<u64>(), n in 2usize..=8) {
        let c = random_circuit(n, 50, &mut stream(seed, 1));
        prop_assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn bin_accumulators_merge_additively(xs in prop::collection::vec(0.0f64..=1.0, 1..300), split in 0usize..300) {
        let split = split.min(xs.len());
        let mut whole = BinAccumulator::new(37);
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (BinAccumulator::new(37), BinAccumulator::new(37));
        xs[..split].iter().for_each(|&x| a.push(x));
        xs[split..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let (w, m) = (whole.finish().unwrap(), a.finish().unwrap());
        prop_assert_eq!(w.total, m.total);
        for (x, y) in w.bins.iter().zip(&m.bins) {
            prop_assert_eq!(x.count, y.count);
            prop_assert!((x.mean_fidelity - y.mean_fidelity).abs() < 1e-12);
        }
    }

    #[test]
    fn tree_predictions_stay_within_target_range(ys in prop::collection::vec(-5.0f64..5.0, 4..120), depth in 1usize..10, leaf in 1usize..4) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64 / ys.len() as f64, y)).collect();
        let tree = RegressionTree::fit(&pts, depth, leaf).unwrap();
        let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        for k in 0..=50 {
            let v = tree.predict(k as f64 / 50.0);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
        prop_assert!(tree.n_leaves() <= 1 << depth);
        prop_assert!(tree.r2() <= 1.0 + 1e-12);
    }
}

#[test]
fn streaming_matches_batch_sampling() {
    let cfg = SamplerConfig::new(3, 2500, 42);
    let batch = sample_ensemble(&cfg).unwrap();
    let mut seen = Vec::new();
    let s = sample_ensemble_streaming(&cfg, 50, |_, chunk| {
        seen.extend_from_slice(chunk);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, batch);
    assert_eq!(s.bins.finish().unwrap(), bin_samples(&batch, 50).unwrap());
}

#[test]
fn curve_values_are_bounded_by_the_floor() {
    let recs = sample_ensemble(&SamplerConfig::new(3, 20_000, 5)).unwrap();
    let curve = build_qfi_curve(&bin_samples(&recs, 200).unwrap(), &QfiParams::default(), Some(3)).unwrap();
    let cap = (recs.len() as f64 + 1.0).log2();
    assert!(curve.qfi_raw.iter().all(|&v| (0.0..=cap + 1e-12).contains(&v)));
    assert!(curve.p_hat.iter().all(|&p| p >= curve.p_floor));
}
