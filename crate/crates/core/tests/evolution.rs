use qfi_core::evolution::{evaluate, evolve, init_population};
use qfi_core::qfi::{build_qfi_curve, QfiParams};
use qfi_core::sampling::{bin_samples, sample_ensemble};
use qfi_core::{Circuit, EvoConfig, Objective, QfiCurve, SamplerConfig};

fn curve(n: usize) -> QfiCurve {
    let recs = sample_ensemble(&SamplerConfig::new(n, 50_000, 3)).unwrap();
    build_qfi_curve(&bin_samples(&recs, 200).unwrap(), &QfiParams::default(), Some(n)).unwrap()
}

#[test]
fn fidelity_objective_finds_a_bell_state() {
    for seed in 0..3 {
        let r = evolve(&EvoConfig::new(2, seed), &Objective::fidelity()).unwrap();
        assert!(r.best.metrics.fidelity >= 0.99, "seed {seed}: {}", r.best.metrics.fidelity);
    }
}

#[test]
fn initial_population_contains_entangling_gates() {
    let cfg = EvoConfig::new(4, 0);
    let pop = init_population(&cfg).unwrap();
    let total: usize = pop.iter().map(Circuit::len).sum();
    // Chance that no gate is two-qubit when 3 of 16 kinds are.
    let p_none = (13.0f64 / 16.0).powi(total as i32);
    assert!(p_none < 1e-6, "bound {p_none:e} too weak for {total} gates");
    assert!(pop.iter().flat_map(|c| c.gates()).any(|g| g.qubits().len() == 2));
}

#[test]
fn bell_state_is_not_the_curve_maximum() {
    let c = curve(2);
    let ind = evaluate(&Circuit::ghz(2).unwrap(), &EvoConfig::new(2, 0), &Objective::qfi(c.clone()).unwrap()).unwrap();
    assert_eq!(ind.score_raw, c.smooth_at(1.0));
    assert!(ind.score_raw < c.max_smooth());
    assert!(ind.score < 1.0);
}

#[test]
fn qfi_ranking_is_invariant_under_curve_rescaling() {
    let c = curve(2);
    let mut scaled = c.clone();
    for v in scaled.qfi_smooth.iter_mut().chain(scaled.qfi_raw.iter_mut()) {
        *v *= 3.5;
    }
    let cfg = EvoConfig { pop_size: 20, generations: 10, ..EvoConfig::new(2, 6) };
    let a = evolve(&cfg, &Objective::qfi(c).unwrap()).unwrap();
    let b = evolve(&cfg, &Objective::qfi(scaled).unwrap()).unwrap();
    assert_eq!(a.best.circuit, b.best.circuit);
    for (x, y) in a.all_samples.iter().zip(&b.all_samples) {
        assert_eq!(x.individual.circuit, y.individual.circuit);
        assert!((x.individual.score - y.individual.score).abs() < 1e-12);
    }
}
