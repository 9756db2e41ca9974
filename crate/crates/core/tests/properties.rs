//! Cross-module invariants: structural properties via proptest, plus
//! seeded ensembles for the guaranteed inequalities connecting modules.

mod common;

use common::*;
use proptest::prelude::*;
use qmaj::config::Config;
use qmaj::linalg::{hermitian_eig, random_unitary, ComplexMatrix};
use qmaj::majorization::{
    birkhoff, birkhoff_term_bound, compare, hlp_transfer, majorize, random_doubly_stochastic_with,
    SortedVector,
};
use qmaj::measurement::{random_bistochastic_povm, random_povm};
use qmaj::state::DensityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> Config {
    Config::default()
}

fn matrix_strategy(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), r * c).prop_map(move |entries| {
            let mut m = ComplexMatrix::zeros(r, c);
            for (idx, (re, im)) in entries.into_iter().enumerate() {
                m.set(idx / c, idx % c, num_complex::Complex64::new(re, im));
            }
            m
        })
    })
}

fn square_pair_strategy(max_dim: usize) -> impl Strategy<Value = (ComplexMatrix, ComplexMatrix)> {
    (1..=max_dim).prop_flat_map(|n| {
        let entries = proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), n * n);
        (entries.clone(), entries).prop_map(move |(ea, eb)| {
            let build = |entries: Vec<(f64, f64)>| {
                let mut m = ComplexMatrix::zeros(n, n);
                for (idx, (re, im)) in entries.into_iter().enumerate() {
                    m.set(idx / n, idx % n, num_complex::Complex64::new(re, im));
                }
                m
            };
            (build(ea), build(eb))
        })
    })
}

proptest! {
    #[test]
    fn trace_is_cyclic((a, b) in square_pair_strategy(5)) {
        let ab = a.matmul(&b).unwrap().trace().unwrap();
        let ba = b.matmul(&a).unwrap().trace().unwrap();
        prop_assert!((ab - ba).norm() < 1e-10);
    }

    #[test]
    fn adjoint_is_a_bitwise_involution(m in matrix_strategy(5)) {
        prop_assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn matrix_serde_round_trips(m in matrix_strategy(5)) {
        let json = serde_json::to_string(&m).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn planted_spectrum_recovery_ensemble() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..100 {
        let dim = rng.random_range(2..=8usize);
        let mut diag: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        diag.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let v = random_unitary(&mut rng, dim);
        let planted = v
            .matmul(&ComplexMatrix::from_real_diag(&diag))
            .unwrap()
            .matmul(&v.adjoint())
            .unwrap();
        let eig = hermitian_eig(&planted, 1e-9).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip(&diag) {
            assert!((got - want).abs() < 1e-8);
        }
        let recon = eig.reconstruct().unwrap();
        assert!(recon.sub(&planted).unwrap().max_abs() < 1e-8);
    }
}

/// Random sorted probability vector.
fn random_prob_vector(rng: &mut ChaCha8Rng, dim: usize) -> SortedVector {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    SortedVector::from_unsorted(v).unwrap()
}

/// Majorizing pair: `(λ, sort(B·λ))` for a random doubly stochastic `B`.
fn random_majorizing_pair(rng: &mut ChaCha8Rng, dim: usize) -> (SortedVector, SortedVector) {
    let lam = random_prob_vector(rng, dim);
    let terms = rng.random_range(1..=4);
    let b = random_doubly_stochastic_with(rng, dim, terms, &cfg()).unwrap();
    let mu = SortedVector::from_unsorted(b.apply(lam.values()).unwrap()).unwrap();
    (lam, mu)
}

#[test]
fn transfer_matrix_reproduces_target_on_1000_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.random_range(2..=8usize);
        let (lam, mu) = random_majorizing_pair(&mut rng, dim);
        let b = hlp_transfer(&lam, &mu, &cfg()).unwrap();
        let bx = b.apply(lam.values()).unwrap();
        let residual = bx
            .iter()
            .zip(mu.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        worst = worst.max(residual);
    }
    assert!(worst <= 1e-9, "worst transfer residual {worst:.3e}");
}

#[test]
fn birkhoff_round_trip_on_1000_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.random_range(2..=6usize);
        let terms = rng.random_range(1..=6);
        let b = random_doubly_stochastic_with(&mut rng, dim, terms, &cfg()).unwrap();
        let d = birkhoff(&b, &cfg()).unwrap();
        assert!(d.terms() <= birkhoff_term_bound(dim));
        let weight_sum: f64 = d.weights.iter().sum();
        assert!((weight_sum - 1.0).abs() < 1e-9);
        worst = worst.max(d.residual(&b));
    }
    assert!(worst <= 1e-8, "worst reconstruction residual {worst:.3e}");
}

#[test]
fn majorization_is_transitive_on_generated_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for _ in 0..200 {
        let dim = rng.random_range(2..=6usize);
        let (a, b) = random_majorizing_pair(&mut rng, dim);
        let ds = random_doubly_stochastic_with(&mut rng, dim, 3, &cfg()).unwrap();
        let c = SortedVector::from_unsorted(ds.apply(b.values()).unwrap()).unwrap();
        assert!(majorize(&a, &b, &cfg()).unwrap());
        assert!(majorize(&b, &c, &cfg()).unwrap());
        assert!(majorize(&a, &c, &cfg()).unwrap());
    }
}

#[test]
fn entropy_reverses_majorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    for _ in 0..500 {
        let dim = rng.random_range(2..=8usize);
        let (a, b) = random_majorizing_pair(&mut rng, dim);
        let ea = qmaj::state::entropy_bits(a.values());
        let eb = qmaj::state::entropy_bits(b.values());
        assert!(ea <= eb + 1e-9, "entropy {ea} vs {eb}");
    }
}

#[test]
fn expected_spectrum_majorizes_channel_output_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    for _ in 0..200 {
        let dim = rng.random_range(2..=6usize);
        let outcomes = rng.random_range(2..=4);
        let (povm, _) = random_povm(&mut rng, dim, outcomes, &cfg()).unwrap();
        let rank = rng.random_range(1..=dim);
        let state = DensityMatrix::random_with(&mut rng, dim, rank, &cfg()).unwrap();
        let expected = povm.expected_spectrum(&state, &cfg()).unwrap();
        let output = povm.apply_channel(&state, &cfg()).unwrap().spectrum(&cfg()).unwrap();
        let check = compare(&SortedVector::from(expected), &SortedVector::from(output), &cfg()).unwrap();
        assert!(check.holds, "slack {:.3e}", check.min_slack);
    }
}

#[test]
fn channel_preserves_trace_on_ensemble() {
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    for _ in 0..200 {
        let dim = rng.random_range(2..=6usize);
        let bistochastic = rng.random_range(0.0..1.0) < 0.5;
        let (povm, _) = if bistochastic {
            random_bistochastic_povm(&mut rng, dim, 3, &cfg()).unwrap()
        } else {
            random_povm(&mut rng, dim, 3, &cfg()).unwrap()
        };
        let state = DensityMatrix::random_with(&mut rng, dim, dim, &cfg()).unwrap();
        let out = povm.apply_channel_matrix(&state).unwrap();
        assert!((out.trace().unwrap().re - 1.0).abs() < 1e-10);
    }
}

#[test]
fn bell_fixture_agrees_across_modules() {
    let cfg = cfg();
    let ms = bell_state(&cfg);
    let lp = qmaj::multiparty::LocalPovm::new(0, computational_povm(2, &cfg), ms.space()).unwrap();
    let via_multiparty = qmaj::multiparty::observer_expected_spectrum(&ms, &lp, 1, &cfg).unwrap();

    let protocol = qmaj::locc::Protocol::new(
        ms.space().clone(),
        vec![qmaj::locc::ProtocolStep::fixed(
            0,
            qmaj::locc::LocalOp::Measurement(computational_povm(2, &cfg)),
        )],
        &cfg,
    )
    .unwrap();
    let ensemble = qmaj::locc::run(&protocol, &ms, &cfg).unwrap();
    let via_locc = ensemble.expected_local_spectrum(1, &cfg).unwrap();

    for (a, b) in via_multiparty.values().iter().zip(via_locc.values()) {
        assert!((a - b).abs() < 1e-12);
    }

    // measuring agent: the protocol path agrees with measuring the
    // marginal directly
    let alice_marginal = ms.partial_trace(0, &cfg).unwrap();
    let via_measurement = computational_povm(2, &cfg)
        .expected_spectrum(&alice_marginal, &cfg)
        .unwrap();
    let via_locc_alice = ensemble.expected_local_spectrum(0, &cfg).unwrap();
    for (a, b) in via_measurement.values().iter().zip(via_locc_alice.values()) {
        assert!((a - b).abs() < 1e-12);
    }
}
