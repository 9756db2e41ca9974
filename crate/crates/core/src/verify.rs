//! Seeded randomized suites exercising the library's guaranteed
//! inequalities, plus the stored counterexample showing why
//! bi-stochasticity cannot be dropped.
//!
//! Every suite runs `cfg.trials` independent trials; trial `i` draws all of
//! its randomness from a ChaCha8 stream seeded with `cfg.seed + i`, so runs
//! are reproducible and, with the `parallel` feature, identical whether the
//! trials execute sequentially or across threads.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, random_gaussian, random_hermitian, random_unitary, ComplexMatrix};
use crate::locc::{check_monotonicity, LocalOp, Protocol, ProtocolStep};
use crate::majorization::{birkhoff_term_bound, compare, SortedVector};
use crate::measurement::{random_bistochastic_povm, random_povm, Povm};
use crate::multiparty::{observer_expected_spectrum, observer_invariance_residual, LocalPovm, MultipartyState, TensorSpace};
use crate::state::{DensityMatrix, Spectrum};
use crate::uhlmann::synthesize;

/// Spectra of `f*·f` and `f·f*` must agree to this bound.
pub const SP_EQUAL_TOL: f64 = 1e-8;
/// Channel-reconstruction bound for the synthesis ensemble.
pub const SYNTH_RECON_TOL: f64 = 1e-7;
/// Observer-invariance residual bound for the ensemble.
pub const OBSERVER_INVARIANCE_TOL: f64 = 1e-9;
/// Entropy-chain slack bound.
pub const ENTROPY_CHAIN_TOL: f64 = 1e-9;

/// The available randomized suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Spectral-sum dominance: `Sp(A) + Sp(B) ⪰ Sp(A + B)`.
    Fan,
    /// `Sp(f*·f) = Sp(f·f*)` for arbitrary operators.
    SpEqual,
    /// The expected spectrum of a measurement majorizes the input spectrum.
    Expect,
    /// Bi-stochastic channels are majorized by their input.
    UhlmannIf,
    /// Synthesis of a bi-stochastic family carrying σ to τ whenever σ ⪰ τ.
    UhlmannSynth,
    /// An observer's expected spectrum majorizes their initial spectrum
    /// under another agent's measurement.
    BobExpect,
    /// An observer's averaged state is untouched by another agent's
    /// trace-preserving measurement.
    BobInvariance,
    /// Per-step majorization monotonicity of local-operation protocols.
    LoccMonotone,
    /// `S₂ ≤ S₁ ≤ S(σ)` for recorded measurements.
    EntropyChain,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Fan,
        Suite::SpEqual,
        Suite::Expect,
        Suite::UhlmannIf,
        Suite::UhlmannSynth,
        Suite::BobExpect,
        Suite::BobInvariance,
        Suite::LoccMonotone,
        Suite::EntropyChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fan => "fan",
            Suite::SpEqual => "sp-equal",
            Suite::Expect => "expect",
            Suite::UhlmannIf => "uhlmann-if",
            Suite::UhlmannSynth => "uhlmann-synth",
            Suite::BobExpect => "bob-expect",
            Suite::BobInvariance => "bob-invariance",
            Suite::LoccMonotone => "locc-monotone",
            Suite::EntropyChain => "entropy-chain",
        }
    }

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.iter().copied().find(|s| s.name() == name)
    }

    /// Whether the suite metric is a slack (larger is better, worst is the
    /// minimum) or a residual (smaller is better, worst is the maximum).
    fn metric(self) -> Metric {
        match self {
            Suite::Fan | Suite::Expect | Suite::UhlmannIf | Suite::BobExpect | Suite::LoccMonotone => Metric::MinSlack,
            Suite::SpEqual | Suite::UhlmannSynth | Suite::BobInvariance | Suite::EntropyChain => {
                Metric::MaxResidual
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    MinSlack,
    MaxResidual,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::MinSlack => "min_slack",
            Metric::MaxResidual => "max_residual",
        }
    }

    fn worse(self, a: f64, b: f64) -> bool {
        match self {
            Metric::MinSlack => a < b,
            Metric::MaxResidual => a > b,
        }
    }

    fn worst_possible(self) -> f64 {
        match self {
            Metric::MinSlack => f64::NEG_INFINITY,
            Metric::MaxResidual => f64::INFINITY,
        }
    }
}

struct TrialOutcome {
    ok: bool,
    value: f64,
    error: Option<String>,
}

/// Aggregate result of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub passes: usize,
    pub failures: usize,
    /// `"min_slack"` or `"max_residual"`.
    pub metric: String,
    /// Worst value of the metric across trials.
    pub worst_value: f64,
    /// Seed of the worst-case trial; rerun it with `trials = 1` and this
    /// seed to reproduce the instance.
    pub worst_seed: u64,
    pub elapsed_ms: u128,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

/// Run a suite; trials execute in parallel when the `parallel` feature is
/// enabled.
pub fn run_suite(suite: Suite, cfg: &Config) -> SuiteReport {
    run_suite_impl(suite, cfg, cfg!(feature = "parallel"))
}

/// Run a suite strictly sequentially (the parallel runner must produce the
/// identical report).
pub fn run_suite_sequential(suite: Suite, cfg: &Config) -> SuiteReport {
    run_suite_impl(suite, cfg, false)
}

fn run_suite_impl(suite: Suite, cfg: &Config, parallel: bool) -> SuiteReport {
    let start = Instant::now();
    let metric = suite.metric();
    let trial = |i: u64| -> (u64, TrialOutcome) {
        let seed = cfg.seed.wrapping_add(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = run_trial(suite, cfg, &mut rng).unwrap_or_else(|e| TrialOutcome {
            ok: false,
            value: metric.worst_possible(),
            error: Some(e.to_string()),
        });
        (seed, outcome)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<(u64, TrialOutcome)> = if parallel {
        (0..cfg.trials as u64).into_par_iter().map(trial).collect()
    } else {
        (0..cfg.trials as u64).map(trial).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<(u64, TrialOutcome)> = {
        let _ = parallel;
        (0..cfg.trials as u64).map(trial).collect()
    };

    let mut passes = 0;
    let mut worst_value = match metric {
        Metric::MinSlack => f64::INFINITY,
        Metric::MaxResidual => f64::NEG_INFINITY,
    };
    let mut worst_seed = cfg.seed;
    let mut first_error = None;
    for (seed, outcome) in &outcomes {
        if outcome.ok {
            passes += 1;
        }
        if metric.worse(outcome.value, worst_value) {
            worst_value = outcome.value;
            worst_seed = *seed;
        }
        if first_error.is_none() {
            first_error = outcome.error.clone();
        }
    }
    if outcomes.is_empty() {
        worst_value = 0.0;
    }
    let failures = outcomes.len() - passes;
    SuiteReport {
        suite: suite.name().to_string(),
        trials: outcomes.len(),
        passes,
        failures,
        metric: metric.name().to_string(),
        worst_value,
        worst_seed,
        elapsed_ms: start.elapsed().as_millis(),
        ok: failures == 0,
        first_error,
    }
}

fn run_trial(suite: Suite, cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    match suite {
        Suite::Fan => trial_fan(cfg, rng),
        Suite::SpEqual => trial_sp_equal(cfg, rng),
        Suite::Expect => trial_expect(cfg, rng),
        Suite::UhlmannIf => trial_uhlmann_if(cfg, rng),
        Suite::UhlmannSynth => trial_uhlmann_synth(cfg, rng),
        Suite::BobExpect => trial_bob_expect(cfg, rng),
        Suite::BobInvariance => trial_bob_invariance(cfg, rng),
        Suite::LoccMonotone => trial_locc_monotone(cfg, rng),
        Suite::EntropyChain => trial_entropy_chain(cfg, rng),
    }
}

fn sorted_eigenvalues(m: &ComplexMatrix, cfg: &Config) -> Result<SortedVector> {
    let eig = hermitian_eig(m, cfg.tol_herm)?;
    SortedVector::new(eig.eigenvalues)
}

fn trial_fan(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let dim = rng.random_range(2..=10);
    let a = random_hermitian(rng, dim);
    let b = random_hermitian(rng, dim);
    let spa = sorted_eigenvalues(&a, cfg)?;
    let spb = sorted_eigenvalues(&b, cfg)?;
    let sum: Vec<f64> = spa
        .values()
        .iter()
        .zip(spb.values())
        .map(|(x, y)| x + y)
        .collect();
    let lhs = SortedVector::new(sum)?;
    let rhs = sorted_eigenvalues(&a.add(&b)?, cfg)?;
    let check = compare(&lhs, &rhs, cfg)?;
    Ok(TrialOutcome {
        ok: check.holds,
        value: check.min_slack,
        error: None,
    })
}

fn trial_sp_equal(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let dim = rng.random_range(2..=10);
    let f = random_gaussian(rng, dim, dim);
    let left = sorted_eigenvalues(&f.adjoint().matmul(&f)?, cfg)?;
    let right = sorted_eigenvalues(&f.matmul(&f.adjoint())?, cfg)?;
    let value = left
        .values()
        .iter()
        .zip(right.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(TrialOutcome {
        ok: value <= SP_EQUAL_TOL,
        value,
        error: None,
    })
}

fn random_state_and_povm(
    cfg: &Config,
    rng: &mut ChaCha8Rng,
    bistochastic: bool,
) -> Result<(DensityMatrix, Povm)> {
    let dim = rng.random_range(2..=8);
    let outcomes = rng.random_range(2..=5);
    let rank = rng.random_range(1..=dim);
    let state = DensityMatrix::random_with(rng, dim, rank, cfg)?;
    let (povm, _) = if bistochastic {
        random_bistochastic_povm(rng, dim, outcomes, cfg)?
    } else {
        random_povm(rng, dim, outcomes, cfg)?
    };
    Ok((state, povm))
}

fn trial_expect(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (state, povm) = random_state_and_povm(cfg, rng, false)?;
    let expected = povm.expected_spectrum(&state, cfg)?;
    let initial = state.spectrum(cfg)?;
    let check = compare(&SortedVector::from(expected), &SortedVector::from(initial), cfg)?;
    Ok(TrialOutcome {
        ok: check.holds,
        value: check.min_slack,
        error: None,
    })
}

fn trial_uhlmann_if(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (state, povm) = random_state_and_povm(cfg, rng, true)?;
    let output = povm.apply_channel(&state, cfg)?;
    let check = compare(
        &SortedVector::from(state.spectrum(cfg)?),
        &SortedVector::from(output.spectrum(cfg)?),
        cfg,
    )?;
    Ok(TrialOutcome {
        ok: check.holds,
        value: check.min_slack,
        error: None,
    })
}

fn trial_uhlmann_synth(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let dim = rng.random_range(2..=6);
    let outcomes = rng.random_range(2..=4);
    let rank = rng.random_range(1..=dim);
    let sigma = DensityMatrix::random_with(rng, dim, rank, cfg)?;
    let (bistoch, _) = random_bistochastic_povm(rng, dim, outcomes, cfg)?;
    let tau = bistoch.apply_channel(&sigma, cfg)?;
    match synthesize(&sigma, &tau, cfg) {
        Ok(result) => {
            let ok = result.report.residual <= SYNTH_RECON_TOL
                && result.report.completeness_residual <= cfg.tol_povm
                && result.report.bistochastic_deviation <= cfg.tol_povm
                && result.report.terms <= birkhoff_term_bound(dim);
            Ok(TrialOutcome {
                ok,
                value: result.report.residual,
                error: None,
            })
        }
        Err(Error::Reconstruction { residual }) => Ok(TrialOutcome {
            ok: false,
            value: residual,
            error: Some(format!("reconstruction residual {residual:.3e}")),
        }),
        Err(e) => Err(e),
    }
}

/// Random bipartite or tripartite scene: a state on 2–3 factors of
/// dimension 2–3 each, plus a measuring agent and a distinct observer.
fn random_scene(
    cfg: &Config,
    rng: &mut ChaCha8Rng,
) -> Result<(MultipartyState, LocalPovm, usize)> {
    let parties = rng.random_range(2..=3);
    let dims: Vec<usize> = (0..parties).map(|_| rng.random_range(2..=3)).collect();
    let space = TensorSpace::new(dims, cfg)?;
    let total = space.total_dim();
    let rank = rng.random_range(1..=total);
    let state = DensityMatrix::random_with(rng, total, rank, cfg)?;
    let ms = MultipartyState::new(space, state)?;
    let agent = rng.random_range(0..parties);
    let observer = loop {
        let i = rng.random_range(0..parties);
        if i != agent {
            break i;
        }
    };
    let d = ms.space().factor_dim(agent)?;
    let outcomes = rng.random_range(2..=4);
    let (povm, _) = random_povm(rng, d, outcomes, cfg)?;
    let lp = LocalPovm::new(agent, povm, ms.space())?;
    Ok((ms, lp, observer))
}

fn trial_bob_expect(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (ms, lp, observer) = random_scene(cfg, rng)?;
    let expected = observer_expected_spectrum(&ms, &lp, observer, cfg)?;
    let initial = ms.partial_trace(observer, cfg)?.spectrum(cfg)?;
    let check = compare(&SortedVector::from(expected), &SortedVector::from(initial), cfg)?;
    Ok(TrialOutcome {
        ok: check.holds,
        value: check.min_slack,
        error: None,
    })
}

fn trial_bob_invariance(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (ms, lp, observer) = random_scene(cfg, rng)?;
    let value = observer_invariance_residual(&ms, &lp, observer, cfg)?;
    Ok(TrialOutcome {
        ok: value <= OBSERVER_INVARIANCE_TOL,
        value,
        error: None,
    })
}

fn trial_locc_monotone(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (protocol, initial) = random_protocol(rng, cfg)?;
    let report = check_monotonicity(&protocol, &initial, cfg)?;
    Ok(TrialOutcome {
        ok: report.ok,
        value: report.worst_slack,
        error: None,
    })
}

fn trial_entropy_chain(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let (state, povm) = random_state_and_povm(cfg, rng, false)?;
    let (s1, s2) = povm.entropy_pair(&state, cfg)?;
    let s_input = state.spectrum(cfg)?.entropy();
    let value = (s2 - s1).max(s1 - s_input).max(0.0);
    Ok(TrialOutcome {
        ok: value <= ENTROPY_CHAIN_TOL,
        value,
        error: None,
    })
}

/// Random adaptive protocol on 2–3 parties of local dimension 2–3, depth
/// up to 4, together with a random initial state. Adaptive steps carry a
/// payload for every combinatorially possible outcome history.
pub fn random_protocol(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<(Protocol, MultipartyState)> {
    let parties = rng.random_range(2..=3);
    let dims: Vec<usize> = (0..parties).map(|_| rng.random_range(2..=3)).collect();
    let space = TensorSpace::new(dims.clone(), cfg)?;
    let total = space.total_dim();
    let rank = rng.random_range(1..=total);
    let initial = MultipartyState::new(space.clone(), DensityMatrix::random_with(rng, total, rank, cfg)?)?;

    let depth = rng.random_range(1..=4);
    let mut steps = Vec::with_capacity(depth);
    // outcome counts of the measurement steps generated so far
    let mut outcome_counts: Vec<usize> = Vec::new();
    for _ in 0..depth {
        let agent = rng.random_range(0..parties);
        let d = dims[agent];
        let measuring = rng.random_range(0.0..1.0) < 0.6;
        let adaptive = !outcome_counts.is_empty() && rng.random_range(0.0..1.0) < 0.4;
        let make_op = |rng: &mut ChaCha8Rng| -> Result<LocalOp> {
            if measuring {
                let outcomes = rng.random_range(2..=3);
                let (povm, _) = random_povm(rng, d, outcomes, cfg)?;
                Ok(LocalOp::Measurement(povm))
            } else {
                Ok(LocalOp::Unitary(random_unitary(rng, d)))
            }
        };
        let step = if adaptive {
            let mut payloads = BTreeMap::new();
            for history in all_histories(&outcome_counts) {
                payloads.insert(history, make_op(rng)?);
            }
            ProtocolStep::adaptive(agent, payloads, None)?
        } else {
            ProtocolStep::fixed(agent, make_op(rng)?)
        };
        if measuring {
            // upper bound; actual branching may prune zero-probability outcomes
            outcome_counts.push(3);
        }
        steps.push(step);
    }
    let protocol = Protocol::new(space, steps, cfg)?;
    Ok((protocol, initial))
}

/// Every comma-joined history over the given outcome counts.
fn all_histories(outcome_counts: &[usize]) -> Vec<String> {
    let mut histories = vec![Vec::new()];
    for &count in outcome_counts {
        let mut next = Vec::with_capacity(histories.len() * count);
        for h in &histories {
            for k in 0..count {
                let mut h = h.clone();
                h.push(k);
                next.push(h);
            }
        }
        histories = next;
    }
    histories
        .into_iter()
        .map(|h| crate::locc::history_key(&h))
        .collect()
}

/// The stored witness that trace preservation alone does not stop entropy
/// from dropping: the family `{|0⟩⟨0|, |0⟩⟨1|}` is a valid measurement but
/// not bi-stochastic, and it maps the maximally mixed qubit to the pure
/// state `|0⟩⟨0|` — entropy 1 bit in, 0 bits out.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub name: String,
    pub input_entropy: f64,
    pub output_entropy: f64,
    pub completeness_residual: f64,
    pub bistochastic_deviation: f64,
    pub is_bistochastic: bool,
    /// Whether the input majorizes the channel output — the direction
    /// guaranteed for bi-stochastic families, violated here.
    pub input_majorizes_output: bool,
    pub output_majorizes_input: bool,
    pub ok: bool,
}

/// Evaluate the trace-preserving entropy-drop counterexample.
pub fn trace_preserving_entropy_drop(cfg: &Config) -> Result<CounterexampleReport> {
    let ops = vec![
        ComplexMatrix::matrix_unit(2, 0, 0),
        ComplexMatrix::matrix_unit(2, 0, 1),
    ];
    let (povm, flag) = Povm::new(ops, cfg)?;
    let sigma = DensityMatrix::maximally_mixed(2, cfg)?;
    let tau = povm.apply_channel(&sigma, cfg)?;
    let input_entropy = sigma.spectrum(cfg)?.entropy();
    let output_entropy = tau.spectrum(cfg)?.entropy();
    let input_majorizes_output = crate::majorization::majorize_ops(&sigma, &tau, cfg)?;
    let output_majorizes_input = crate::majorization::majorize_ops(&tau, &sigma, cfg)?;
    let ok = (input_entropy - 1.0).abs() <= 1e-12
        && output_entropy.abs() <= 1e-12
        && povm.completeness_residual() <= 1e-12
        && !flag.is_bistochastic
        && !input_majorizes_output
        && output_majorizes_input;
    Ok(CounterexampleReport {
        name: "trace-preserving-entropy-drop".to_string(),
        input_entropy,
        output_entropy,
        completeness_residual: povm.completeness_residual(),
        bistochastic_deviation: flag.deviation,
        is_bistochastic: flag.is_bistochastic,
        input_majorizes_output,
        output_majorizes_input,
        ok,
    })
}

/// Expected spectrum of a spectrum vector — helper for reports.
pub fn spectrum_values(sp: &Spectrum) -> Vec<f64> {
    sp.values().to_vec()
}
