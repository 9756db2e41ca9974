//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its measured margin. Run with
//! `cargo test -p qmaj --test acceptance -- --nocapture` to see the lines.

mod common;

use std::time::Instant;

use common::*;
use qmaj::config::Config;
use qmaj::linalg::{hermitian_eig, random_gaussian, random_hermitian, ComplexMatrix};
use qmaj::locc::{check_deterministic_transform, LocalOp, Protocol, ProtocolStep};
use qmaj::majorization::birkhoff_term_bound;
use qmaj::multiparty::{partial_trace_matrix, LocalPovm, MultipartyState};
use qmaj::state::DensityMatrix;
use qmaj::uhlmann::synthesize;
use qmaj::verify::{
    run_suite, trace_preserving_entropy_drop, Suite, OBSERVER_INVARIANCE_TOL, SP_EQUAL_TOL,
    SYNTH_RECON_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn acceptance_config(trials: usize) -> Config {
    Config {
        trials,
        seed: 20260810,
        ..Config::default()
    }
}

fn report_line(criterion: &str, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_1_expected_spectrum_majorizes_input() {
    let cfg = acceptance_config(1000);
    let start = Instant::now();
    let report = run_suite(Suite::Expect, &cfg);
    let elapsed = start.elapsed();
    let ok = report.ok && report.worst_value >= -1e-9 && elapsed.as_secs() <= 60;
    report_line(
        "1 (expected spectrum majorizes input)",
        ok,
        &format!(
            "{}/{} trials, min slack {:.3e}, {:.2?}",
            report.passes, report.trials, report.worst_value, elapsed
        ),
    );
    assert!(report.ok, "{report:?}");
    assert!(report.worst_value >= -1e-9);
    assert!(elapsed.as_secs() <= 60, "suite took {elapsed:?}");
}

#[test]
fn criterion_2_bistochastic_channel_is_majorized() {
    let cfg = acceptance_config(1000);
    let report = run_suite(Suite::UhlmannIf, &cfg);
    let ok = report.ok && report.worst_value >= -1e-9;
    report_line(
        "2 (input majorizes bi-stochastic channel output)",
        ok,
        &format!(
            "{}/{} trials, min slack {:.3e}",
            report.passes, report.trials, report.worst_value
        ),
    );
    assert!(report.ok, "{report:?}");
    assert!(report.worst_value >= -1e-9);
}

#[test]
fn criterion_3_synthesis_reconstructs_targets() {
    let cfg = acceptance_config(500);
    let report = run_suite(Suite::UhlmannSynth, &cfg);
    let ok = report.ok && report.worst_value <= SYNTH_RECON_TOL;
    report_line(
        "3 (bi-stochastic synthesis)",
        ok,
        &format!(
            "{}/{} trials, max reconstruction residual {:.3e}",
            report.passes, report.trials, report.worst_value
        ),
    );
    // per-trial checks already include the 1e-9 family residuals and the
    // (dim-1)^2 + 1 term bound
    assert!(report.ok, "{report:?}");
    assert!(report.worst_value <= SYNTH_RECON_TOL);
}

#[test]
fn criterion_4_spectral_sum_and_gram_spectra() {
    let cfg = acceptance_config(1000);
    let fan = run_suite(Suite::Fan, &cfg);
    let sp = run_suite(Suite::SpEqual, &cfg);
    let ok = fan.ok && fan.worst_value >= -1e-9 && sp.ok && sp.worst_value <= SP_EQUAL_TOL;
    report_line(
        "4 (spectral-sum dominance; Sp(f*f) = Sp(ff*))",
        ok,
        &format!(
            "fan {}/{} min slack {:.3e}; sp-equal {}/{} max deviation {:.3e}",
            fan.passes, fan.trials, fan.worst_value, sp.passes, sp.trials, sp.worst_value
        ),
    );
    assert!(fan.ok, "{fan:?}");
    assert!(fan.worst_value >= -1e-9);
    assert!(sp.ok, "{sp:?}");
    assert!(sp.worst_value <= SP_EQUAL_TOL);
}

#[test]
fn criterion_5_observer_spectrum_and_invariance() {
    let cfg = acceptance_config(500);
    let expect = run_suite(Suite::BobExpect, &cfg);
    let invariance = run_suite(Suite::BobInvariance, &cfg);
    let ok = expect.ok
        && expect.worst_value >= -1e-9
        && invariance.ok
        && invariance.worst_value <= OBSERVER_INVARIANCE_TOL;
    report_line(
        "5 (observer expected spectrum; observer invariance)",
        ok,
        &format!(
            "expect {}/{} min slack {:.3e}; invariance {}/{} max residual {:.3e}",
            expect.passes,
            expect.trials,
            expect.worst_value,
            invariance.passes,
            invariance.trials,
            invariance.worst_value
        ),
    );
    assert!(expect.ok, "{expect:?}");
    assert!(expect.worst_value >= -1e-9);
    assert!(invariance.ok, "{invariance:?}");
    assert!(invariance.worst_value <= OBSERVER_INVARIANCE_TOL);
}

#[test]
fn criterion_6_entropy_chain_and_counterexample() {
    let cfg = acceptance_config(1000);
    let chain = run_suite(Suite::EntropyChain, &cfg);
    let witness = trace_preserving_entropy_drop(&cfg).unwrap();
    let witness_ok = witness.ok
        && (witness.input_entropy - 1.0).abs() <= 1e-12
        && witness.output_entropy.abs() <= 1e-12
        && witness.completeness_residual <= 1e-12
        && !witness.is_bistochastic;
    let ok = chain.ok && chain.worst_value <= 1e-9 && witness_ok;
    report_line(
        "6 (S2 <= S1 <= S(input); entropy-drop witness)",
        ok,
        &format!(
            "chain {}/{} max gap {:.3e}; witness entropy {} -> {}",
            chain.passes, chain.trials, chain.worst_value, witness.input_entropy, witness.output_entropy
        ),
    );
    assert!(chain.ok, "{chain:?}");
    assert!(chain.worst_value <= 1e-9);
    assert!(witness_ok, "{witness:?}");
}

#[test]
fn criterion_7_protocol_monotonicity_and_deterministic_transform() {
    let cfg = acceptance_config(200);
    let report = run_suite(Suite::LoccMonotone, &cfg);

    // hand-built measure-and-correct protocol merging every leaf into |00⟩⟨00|
    let state = bell_state(&cfg);
    let mut alice_fix = BTreeMap::new();
    alice_fix.insert("0".to_string(), LocalOp::Unitary(ComplexMatrix::identity(2)));
    alice_fix.insert("1".to_string(), LocalOp::Unitary(pauli_x()));
    let mut bob_fix = BTreeMap::new();
    bob_fix.insert("0".to_string(), LocalOp::Unitary(ComplexMatrix::identity(2)));
    bob_fix.insert("1".to_string(), LocalOp::Unitary(pauli_x()));
    let protocol = Protocol::new(
        state.space().clone(),
        vec![
            ProtocolStep::fixed(0, LocalOp::Measurement(computational_povm(2, &cfg))),
            ProtocolStep::adaptive(0, alice_fix, None).unwrap(),
            ProtocolStep::adaptive(1, bob_fix, None).unwrap(),
        ],
        &cfg,
    )
    .unwrap();
    let target = MultipartyState::new(
        state.space().clone(),
        DensityMatrix::pure_state(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &cfg)
            .unwrap(),
    )
    .unwrap();
    let det = check_deterministic_transform(&protocol, &state, &target, &cfg).unwrap();

    let ok = report.ok && report.worst_value >= -1e-9 && det.deterministic && det.ok;
    report_line(
        "7 (protocol monotonicity; deterministic transform)",
        ok,
        &format!(
            "{}/{} protocols, min slack {:.3e}; measure-and-correct deterministic: {}, agents hold: {}",
            report.passes,
            report.trials,
            report.worst_value,
            det.deterministic,
            det.agents.iter().all(|a| a.holds)
        ),
    );
    assert!(report.ok, "{report:?}");
    assert!(report.worst_value >= -1e-9);
    assert!(det.deterministic && det.ok, "{det:?}");
}

#[test]
fn criterion_8_oracle_equivalence() {
    let cfg = acceptance_config(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut matmul_worst: f64 = 0.0;
    let mut kron_worst: f64 = 0.0;
    let mut eig_worst: f64 = 0.0;
    let mut ptrace_worst: f64 = 0.0;

    for _ in 0..100 {
        let n = rng.random_range(2..=5usize);
        let a = random_gaussian(&mut rng, n, n);
        let b = random_gaussian(&mut rng, n, n);
        let dev = a.matmul(&b).unwrap().sub(&matmul_oracle(&a, &b)).unwrap().max_abs();
        matmul_worst = matmul_worst.max(dev);

        let pc = rng.random_range(2..=3);
        let p = random_gaussian(&mut rng, 2, pc);
        let qr = rng.random_range(2..=3);
        let q = random_gaussian(&mut rng, qr, 2);
        let dev = p.kron(&q).sub(&kron_oracle(&p, &q)).unwrap().max_abs();
        kron_worst = kron_worst.max(dev);

        let hn = rng.random_range(2..=5);
        let h = random_hermitian(&mut rng, hn);
        let got = hermitian_eig(&h, cfg.tol_herm).unwrap().eigenvalues;
        let want = charpoly_eigenvalues(&h);
        let dev = got
            .iter()
            .zip(&want)
            .map(|(g, w)| (g - w).abs())
            .fold(0.0, f64::max);
        eig_worst = eig_worst.max(dev);

        let dims = if rng.random_range(0.0..1.0) < 0.5 {
            vec![2, 3]
        } else {
            vec![2, 2, 2]
        };
        let total = dims.iter().product::<usize>();
        let rank = rng.random_range(1..=total);
        let state = DensityMatrix::random_with(&mut rng, total, rank, &cfg).unwrap();
        let keep = rng.random_range(0..dims.len());
        let got = partial_trace_matrix(state.matrix(), &dims, keep).unwrap();
        let want = partial_trace_oracle(state.matrix(), &dims, keep);
        let dev = got.sub(&want).unwrap().max_abs();
        ptrace_worst = ptrace_worst.max(dev);
    }

    let ok = matmul_worst < 1e-12 && kron_worst < 1e-12 && eig_worst < 1e-8 && ptrace_worst < 1e-12;
    report_line(
        "8 (oracle equivalence)",
        ok,
        &format!(
            "100 instances each: matmul {matmul_worst:.3e}, kron {kron_worst:.3e}, eig {eig_worst:.3e}, ptrace {ptrace_worst:.3e}"
        ),
    );
    assert!(matmul_worst < 1e-12);
    assert!(kron_worst < 1e-12);
    assert!(eig_worst < 1e-8);
    assert!(ptrace_worst < 1e-12);
}

#[test]
fn criterion_9_worked_numeric_fixtures() {
    let cfg = acceptance_config(1);

    // diag(0.7, 0.3) -> diag(0.6, 0.4): weights (0.75, 0.25) on (id, swap)
    let sigma = DensityMatrix::new(ComplexMatrix::from_real_diag(&[0.7, 0.3]), &cfg).unwrap();
    let tau = DensityMatrix::new(ComplexMatrix::from_real_diag(&[0.6, 0.4]), &cfg).unwrap();
    let synth = synthesize(&sigma, &tau, &cfg).unwrap();
    let mut terms: Vec<(f64, Vec<usize>)> = synth
        .birkhoff
        .weights
        .iter()
        .cloned()
        .zip(synth.birkhoff.permutations.iter().cloned())
        .collect();
    terms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let synth_ok = terms.len() == 2
        && (terms[0].0 - 0.75).abs() < 1e-10
        && terms[0].1 == vec![0, 1]
        && (terms[1].0 - 0.25).abs() < 1e-10
        && terms[1].1 == vec![1, 0]
        && synth.report.residual < 1e-10
        && synth.report.terms <= birkhoff_term_bound(2);

    // Bell measurement fixtures
    let ms = bell_state(&cfg);
    let lp = LocalPovm::new(0, computational_povm(2, &cfg), ms.space()).unwrap();
    let (lifted, _) = lp.lift(ms.space(), &cfg).unwrap();
    let mut branch_dev: f64 = 0.0;
    for k in 0..2 {
        let got = lifted.branch(ms.state(), k).unwrap();
        let mut want = ComplexMatrix::zeros(4, 4);
        let idx = if k == 0 { 0 } else { 3 };
        want.set(idx, idx, c(0.5, 0.0));
        branch_dev = branch_dev.max(got.sub(&want).unwrap().max_abs());
    }
    let marginal = ms.partial_trace(1, &cfg).unwrap();
    let bob_dev = marginal
        .matrix()
        .sub(&ComplexMatrix::identity(2).scale(0.5))
        .unwrap()
        .max_abs();
    let bell_ok = branch_dev <= 1e-10 && bob_dev <= 1e-10;

    let ok = synth_ok && bell_ok;
    report_line(
        "9 (worked numeric fixtures)",
        ok,
        &format!(
            "synthesis terms {:?}, residual {:.3e}; Bell branch deviation {branch_dev:.3e}, Bob marginal deviation {bob_dev:.3e}",
            terms.iter().map(|(w, p)| (format!("{w:.2}"), p.clone())).collect::<Vec<_>>(),
            synth.report.residual
        ),
    );
    assert!(synth_ok, "synthesis fixture: {terms:?}, report {:?}", synth.report);
    assert!(bell_ok, "bell fixture: branch {branch_dev:.3e}, bob {bob_dev:.3e}");
}
