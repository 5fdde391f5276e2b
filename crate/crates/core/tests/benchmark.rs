mod common;

use common::{lp_vertex_benchmark, poisson};
use eitmem::qubit::benchmark::{benchmark_for_distribution, fidelity_n, poisson_distribution};
use eitmem::qubit::{classical_benchmark, EfficiencyConstraint};
use proptest::prelude::*;

const NBARS: [f64; 5] = [0.02, 0.1, 0.3, 0.7, 1.5];
const ETAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[test]
fn single_photon_limit() {
    let b = benchmark_for_distribution(&[0.0, 1.0], 1.0);
    assert!((b.bound - 2.0 / 3.0).abs() < 1e-12);
    for eta in [0.01, 0.5, 1.0] {
        let b = classical_benchmark(1e-8, eta, EfficiencyConstraint::NonVacuum).unwrap();
        assert!((b.bound - 2.0 / 3.0).abs() < 1e-6, "eta {eta}: {}", b.bound);
    }
}

#[test]
fn fidelity_n_values() {
    assert_eq!(fidelity_n(1), 2.0 / 3.0);
    assert_eq!(fidelity_n(2), 0.75);
    assert!((fidelity_n(1000) - 1001.0 / 1002.0).abs() < 1e-15);
}

#[test]
fn greedy_matches_vertex_enumeration() {
    let k = 14;
    for nbar in NBARS {
        let p = poisson(nbar, k);
        let non_vacuum = 1.0 - (-nbar).exp();
        for eta in ETAS {
            let oracle = lp_vertex_benchmark(&p, eta * non_vacuum);
            let lib = classical_benchmark(nbar, eta, EfficiencyConstraint::NonVacuum).unwrap();
            assert!(!lib.infeasible);
            assert!((lib.bound - oracle).abs() < 1e-6, "nbar {nbar} eta {eta}: {} vs {oracle}", lib.bound);
            let direct = benchmark_for_distribution(&p, eta * non_vacuum);
            assert!((direct.bound - oracle).abs() < 1e-9);
        }
    }
}

#[test]
fn greedy_matches_vertex_enumeration_on_arbitrary_distributions() {
    // Non-Poissonian weights, including an empty photon number.
    let p = [0.3, 0.05, 0.2, 0.0, 0.15, 0.1, 0.2];
    let total: f64 = p.iter().skip(1).sum();
    for frac in [0.05, 0.2, 0.5, 0.8, 1.0] {
        let mass = frac * total;
        let oracle = lp_vertex_benchmark(&p, mass);
        let b = benchmark_for_distribution(&p, mass);
        assert!((b.bound - oracle).abs() < 1e-12, "frac {frac}");
    }
}

#[test]
fn monotone_in_efficiency() {
    for nbar in NBARS {
        let mut prev = f64::INFINITY;
        for i in 1..=50 {
            let eta = i as f64 / 50.0;
            let b = classical_benchmark(nbar, eta, EfficiencyConstraint::NonVacuum).unwrap().bound;
            assert!(b <= prev + 1e-12, "nbar {nbar} eta {eta}");
            prev = b;
        }
    }
}

#[test]
fn grows_with_mean_photon_number() {
    let mut prev = 0.0;
    for nbar in [0.01, 0.05, 0.2, 0.5, 1.0, 2.0, 5.0] {
        let b = classical_benchmark(nbar, 0.5, EfficiencyConstraint::NonVacuum).unwrap().bound;
        assert!(b > prev);
        prev = b;
    }
}

#[test]
fn absolute_constraint_flags_infeasible() {
    // eta = 0.5 exceeds the non-vacuum probability 1 - e^{-0.1}.
    let b = classical_benchmark(0.1, 0.5, EfficiencyConstraint::Absolute).unwrap();
    assert!(b.infeasible);
    let unconstrained = classical_benchmark(0.1, 1.0, EfficiencyConstraint::NonVacuum).unwrap();
    assert!((b.bound - unconstrained.bound).abs() < 1e-12);
    assert!(!classical_benchmark(3.0, 0.5, EfficiencyConstraint::Absolute).unwrap().infeasible);
}

#[test]
fn rejects_bad_arguments() {
    assert!(classical_benchmark(0.0, 0.5, EfficiencyConstraint::NonVacuum).is_err());
    assert!(classical_benchmark(0.5, 0.0, EfficiencyConstraint::NonVacuum).is_err());
    assert!(classical_benchmark(0.5, 1.5, EfficiencyConstraint::NonVacuum).is_err());
    assert!(classical_benchmark(f64::NAN, 0.5, EfficiencyConstraint::NonVacuum).is_err());
}

#[test]
fn poisson_truncation() {
    for nbar in [0.01, 1.0, 10.0, 50.0] {
        let p = poisson_distribution(nbar);
        let sum: f64 = p.iter().sum();
        assert!((1.0 - sum).abs() < 1e-11, "nbar {nbar}");
        let mean: f64 = p.iter().enumerate().map(|(n, q)| n as f64 * q).sum();
        assert!((mean - nbar).abs() < 1e-8 * nbar.max(1.0));
    }
}

proptest! {
    #[test]
    fn bound_between_two_thirds_and_one(nbar in 1e-3f64..20.0, eta in 1e-3f64..1.0) {
        let b = classical_benchmark(nbar, eta, EfficiencyConstraint::NonVacuum).unwrap().bound;
        prop_assert!(b >= 2.0 / 3.0 - 1e-12 && b < 1.0);
    }
}
