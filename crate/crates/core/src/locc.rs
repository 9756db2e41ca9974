//! Sequential local-operation protocols over a branch tree.
//!
//! A protocol is a list of steps, each owned by one agent: a local unitary
//! or a local measurement, possibly chosen adaptively from the outcome
//! history of earlier measurements (classical communication is modeled by
//! exactly this adaptivity — every outcome is globally visible, and nothing
//! else changes the quantum state). Running a protocol expands the full
//! outcome tree; nothing is sampled, so theorem checks on the result are
//! exact rather than statistical.

use std::collections::BTreeMap;

use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::majorization::{compare, MajorizationCheck, SortedVector};
use crate::measurement::Povm;
use crate::multiparty::{partial_trace_matrix, LocalPovm, MultipartyState, TensorSpace};
use crate::state::{DensityMatrix, Spectrum};

/// A local operation on one agent's factor.
#[derive(Debug, Clone)]
pub enum LocalOp {
    Unitary(ComplexMatrix),
    Measurement(Povm),
}

/// What kind of operation a step performs; all payloads of one step must
/// agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Unitary,
    Measurement,
}

impl LocalOp {
    fn kind(&self) -> StepKind {
        match self {
            LocalOp::Unitary(_) => StepKind::Unitary,
            LocalOp::Measurement(_) => StepKind::Measurement,
        }
    }
}

/// One protocol step: the acting agent plus its payload, either fixed or
/// keyed by the branch's measurement-outcome history (`"0,2,1"`; the empty
/// string is the root). Adaptive entries override the default payload.
#[derive(Debug, Clone)]
pub struct ProtocolStep {
    agent: usize,
    kind: StepKind,
    default: Option<LocalOp>,
    adaptive: BTreeMap<String, LocalOp>,
}

impl ProtocolStep {
    /// A step applying the same operation on every branch.
    pub fn fixed(agent: usize, op: LocalOp) -> Self {
        ProtocolStep {
            agent,
            kind: op.kind(),
            default: Some(op),
            adaptive: BTreeMap::new(),
        }
    }

    /// A step choosing its operation from the outcome history, with an
    /// optional fallback for histories not listed.
    pub fn adaptive(agent: usize, adaptive: BTreeMap<String, LocalOp>, default: Option<LocalOp>) -> Result<Self> {
        let kind = adaptive
            .values()
            .chain(default.iter())
            .map(LocalOp::kind)
            .next()
            .ok_or(Error::Config {
                reason: "adaptive step needs at least one payload",
            })?;
        let uniform = adaptive
            .values()
            .chain(default.iter())
            .all(|op| op.kind() == kind);
        if !uniform {
            return Err(Error::Config {
                reason: "adaptive payloads must share one kind",
            });
        }
        Ok(ProtocolStep {
            agent,
            kind,
            default,
            adaptive,
        })
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    fn resolve(&self, history: &[usize]) -> Result<&LocalOp> {
        let key = history_key(history);
        self.adaptive
            .get(&key)
            .or(self.default.as_ref())
            .ok_or(Error::Config {
                reason: "no payload for this outcome history",
            })
    }
}

/// Outcome-history key: indices joined by commas, empty at the root.
pub fn history_key(history: &[usize]) -> String {
    history
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A validated protocol over a tensor space.
#[derive(Debug, Clone)]
pub struct Protocol {
    space: TensorSpace,
    steps: Vec<ProtocolStep>,
}

impl Protocol {
    /// Validate every payload against its agent's factor: unitaries must be
    /// unitary within `tol_povm`, measurement families must be complete.
    pub fn new(space: TensorSpace, steps: Vec<ProtocolStep>, cfg: &Config) -> Result<Self> {
        for (index, step) in steps.iter().enumerate() {
            let d = space
                .factor_dim(step.agent)
                .map_err(|e| e.at_step(index, &[]))?;
            for op in step.adaptive.values().chain(step.default.iter()) {
                validate_op(op, d, cfg).map_err(|e| e.at_step(index, &[]))?;
            }
        }
        Ok(Protocol { space, steps })
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn steps(&self) -> &[ProtocolStep] {
        &self.steps
    }
}

fn validate_op(op: &LocalOp, dim: usize, cfg: &Config) -> Result<()> {
    match op {
        LocalOp::Unitary(u) => {
            let d = u.square_dim()?;
            if d != dim {
                return Err(Error::DimMismatch {
                    context: "unitary vs factor",
                    left: dim,
                    right: d,
                });
            }
            let residual = u.adjoint().matmul(u)?.identity_deviation()?;
            if residual > cfg.tol_povm {
                return Err(Error::NotUnitary { residual });
            }
            Ok(())
        }
        LocalOp::Measurement(povm) => {
            if povm.dim() != dim {
                return Err(Error::DimMismatch {
                    context: "measurement vs factor",
                    left: dim,
                    right: povm.dim(),
                });
            }
            Ok(())
        }
    }
}

/// One branch of the outcome tree: its probability, the normalized state,
/// and the measurement outcomes that led here.
#[derive(Debug, Clone)]
pub struct Branch {
    pub probability: f64,
    pub state: MultipartyState,
    pub history: Vec<usize>,
}

/// The full set of branches after some protocol prefix. Probabilities are
/// positive and sum to 1 (zero-probability branches are pruned as they
/// appear and never enter any history).
#[derive(Debug, Clone)]
pub struct BranchEnsemble {
    branches: Vec<Branch>,
}

impl BranchEnsemble {
    fn new(branches: Vec<Branch>) -> Result<Self> {
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        if branches.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(Error::SumMismatch {
                left: total,
                right: 1.0,
            });
        }
        Ok(BranchEnsemble { branches })
    }

    fn root(initial: &MultipartyState) -> Self {
        BranchEnsemble {
            branches: vec![Branch {
                probability: 1.0,
                state: initial.clone(),
                history: Vec::new(),
            }],
        }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Expected local spectrum of one agent:
    /// `Σ_b Sp(Tr_other(p_b · ρ_b))`, accumulated from the unnormalized
    /// branch operators.
    pub fn expected_local_spectrum(&self, agent: usize, cfg: &Config) -> Result<Spectrum> {
        let parts = self
            .branches
            .iter()
            .map(|b| {
                let marginal = partial_trace_matrix(
                    b.state.state().matrix(),
                    b.state.space().factor_dims(),
                    agent,
                )?
                .scale(b.probability);
                let eig = crate::linalg::hermitian_eig(&marginal, cfg.tol_herm)?;
                Spectrum::from_eigenvalues(eig.eigenvalues, cfg.tol_psd)
            })
            .collect::<Result<Vec<_>>>()?;
        Spectrum::componentwise_sum(&parts)
    }

    /// Expected global spectrum `Σ_b Sp(p_b · ρ_b)`.
    pub fn expected_global_spectrum(&self, cfg: &Config) -> Result<Spectrum> {
        let parts = self
            .branches
            .iter()
            .map(|b| {
                let scaled = b.state.state().matrix().scale(b.probability);
                let eig = crate::linalg::hermitian_eig(&scaled, cfg.tol_herm)?;
                Spectrum::from_eigenvalues(eig.eigenvalues, cfg.tol_psd)
            })
            .collect::<Result<Vec<_>>>()?;
        Spectrum::componentwise_sum(&parts)
    }
}

/// Run a protocol, expanding the full branch tree.
///
/// Unitary steps transform every branch in place with probability 1;
/// measurement steps split each branch over the lifted family's outcomes
/// and drop branches whose probability falls at or below `tol_prob`.
/// Branches are ordered by outcome index, and the result is identical
/// whether branch expansion runs sequentially or in parallel.
pub fn run(protocol: &Protocol, initial: &MultipartyState, cfg: &Config) -> Result<BranchEnsemble> {
    if initial.space() != protocol.space() {
        return Err(Error::DimMismatch {
            context: "protocol vs state space",
            left: protocol.space().total_dim(),
            right: initial.space().total_dim(),
        });
    }
    let mut ensemble = BranchEnsemble::root(initial);
    for (index, step) in protocol.steps.iter().enumerate() {
        ensemble = expand_step(&ensemble, step, index, protocol.space(), cfg)?;
    }
    Ok(ensemble)
}

fn expand_step(
    ensemble: &BranchEnsemble,
    step: &ProtocolStep,
    index: usize,
    space: &TensorSpace,
    cfg: &Config,
) -> Result<BranchEnsemble> {
    let expand = |branch: &Branch| -> Result<Vec<Branch>> {
        expand_branch(branch, step, space, cfg).map_err(|e| e.at_step(index, &branch.history))
    };

    #[cfg(feature = "parallel")]
    let children: Vec<Vec<Branch>> = ensemble
        .branches()
        .par_iter()
        .map(expand)
        .collect::<Result<_>>()?;

    #[cfg(not(feature = "parallel"))]
    let children: Vec<Vec<Branch>> = ensemble
        .branches()
        .iter()
        .map(expand)
        .collect::<Result<_>>()?;

    BranchEnsemble::new(children.into_iter().flatten().collect())
}

fn expand_branch(
    branch: &Branch,
    step: &ProtocolStep,
    space: &TensorSpace,
    cfg: &Config,
) -> Result<Vec<Branch>> {
    let op = step.resolve(&branch.history)?;
    match op {
        LocalOp::Unitary(u) => {
            let (left, _, right) = split_dims(space, step.agent)?;
            let lifted = ComplexMatrix::identity(left).kron(u).kron(&ComplexMatrix::identity(right));
            let next = branch.state.state().matrix().conjugate_by(&lifted)?;
            let state = MultipartyState::new(space.clone(), DensityMatrix::new(next, cfg)?)?;
            Ok(vec![Branch {
                probability: branch.probability,
                state,
                history: branch.history.clone(),
            }])
        }
        LocalOp::Measurement(povm) => {
            let local = LocalPovm::new(step.agent, povm.clone(), space)?;
            let (lifted, _) = local.lift(space, cfg)?;
            let mut out = Vec::new();
            for k in 0..lifted.len() {
                let unnormalized = lifted.branch(branch.state.state(), k)?;
                let q = unnormalized.trace()?.re;
                if q <= cfg.tol_prob {
                    continue; // this outcome is never obtained
                }
                let state = MultipartyState::new(
                    space.clone(),
                    DensityMatrix::new(unnormalized.scale(1.0 / q), cfg)?,
                )?;
                let mut history = branch.history.clone();
                history.push(k);
                out.push(Branch {
                    probability: branch.probability * q,
                    state,
                    history,
                });
            }
            Ok(out)
        }
    }
}

fn split_dims(space: &TensorSpace, agent: usize) -> Result<(usize, usize, usize)> {
    let d = space.factor_dim(agent)?;
    let dims = space.factor_dims();
    let left: usize = dims[..agent].iter().product();
    let right: usize = dims[agent + 1..].iter().product();
    Ok((left, d, right))
}

/// Majorization slack of one step for one agent (or the global state).
#[derive(Debug, Clone, Serialize)]
pub struct StepSlack {
    pub step: usize,
    /// `None` marks the global-state comparison.
    pub agent: Option<usize>,
    pub slack: f64,
    pub holds: bool,
}

/// Expected spectra after one step: one vector per agent plus the global
/// one.
#[derive(Debug, Clone, Serialize)]
pub struct StepSpectra {
    pub step: usize,
    pub agents: Vec<Vec<f64>>,
    pub global: Vec<f64>,
}

/// Per-step monotonicity report: after every step, each agent's expected
/// local spectrum must majorize the previous step's, and the expected
/// global spectrum must majorize the previous global one.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub ok: bool,
    pub steps_checked: usize,
    pub worst_slack: f64,
    /// Spectra before any step.
    pub initial_agents: Vec<Vec<f64>>,
    pub initial_global: Vec<f64>,
    /// Expected spectra after every step.
    pub spectra: Vec<StepSpectra>,
    pub slacks: Vec<StepSlack>,
    pub violations: Vec<StepSlack>,
}

/// Check per-step majorization monotonicity of a protocol.
///
/// A violation signals an implementation or tolerance fault, never a
/// counterexample.
pub fn check_monotonicity(
    protocol: &Protocol,
    initial: &MultipartyState,
    cfg: &Config,
) -> Result<MonotonicityReport> {
    if initial.space() != protocol.space() {
        return Err(Error::DimMismatch {
            context: "protocol vs state space",
            left: protocol.space().total_dim(),
            right: initial.space().total_dim(),
        });
    }
    let parties = protocol.space().parties();
    let mut ensemble = BranchEnsemble::root(initial);
    let mut local_prev: Vec<Spectrum> = (0..parties)
        .map(|agent| ensemble.expected_local_spectrum(agent, cfg))
        .collect::<Result<_>>()?;
    let mut global_prev = ensemble.expected_global_spectrum(cfg)?;
    let initial_agents: Vec<Vec<f64>> = local_prev.iter().map(|s| s.values().to_vec()).collect();
    let initial_global = global_prev.values().to_vec();

    let mut slacks = Vec::new();
    let mut spectra = Vec::with_capacity(protocol.steps.len());
    for (index, step) in protocol.steps.iter().enumerate() {
        ensemble = expand_step(&ensemble, step, index, protocol.space(), cfg)?;
        let mut step_agents = Vec::with_capacity(parties);
        for agent in 0..parties {
            let current = ensemble.expected_local_spectrum(agent, cfg)?;
            let check = compare_spectra(&current, &local_prev[agent], cfg)?;
            slacks.push(StepSlack {
                step: index,
                agent: Some(agent),
                slack: check.min_slack,
                holds: check.holds,
            });
            step_agents.push(current.values().to_vec());
            local_prev[agent] = current;
        }
        let current = ensemble.expected_global_spectrum(cfg)?;
        let check = compare_spectra(&current, &global_prev, cfg)?;
        slacks.push(StepSlack {
            step: index,
            agent: None,
            slack: check.min_slack,
            holds: check.holds,
        });
        spectra.push(StepSpectra {
            step: index,
            agents: step_agents,
            global: current.values().to_vec(),
        });
        global_prev = current;
    }

    let worst_slack = slacks.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    let violations: Vec<StepSlack> = slacks.iter().filter(|s| !s.holds).cloned().collect();
    Ok(MonotonicityReport {
        ok: violations.is_empty(),
        steps_checked: protocol.steps.len(),
        worst_slack: if worst_slack.is_finite() { worst_slack } else { 0.0 },
        initial_agents,
        initial_global,
        spectra,
        slacks,
        violations,
    })
}

fn compare_spectra(a: &Spectrum, b: &Spectrum, cfg: &Config) -> Result<MajorizationCheck> {
    compare(&SortedVector::from(a), &SortedVector::from(b), cfg)
}

/// Per-agent verdict of a deterministic protocol.
#[derive(Debug, Clone, Serialize)]
pub struct AgentMajorization {
    pub agent: usize,
    pub slack: f64,
    pub holds: bool,
}

/// Report of [`check_deterministic_transform`].
#[derive(Debug, Clone, Serialize)]
pub struct DeterministicReport {
    /// Every leaf matches the target within `tol_recon`.
    pub deterministic: bool,
    pub ok: bool,
    pub leaves: usize,
    /// Largest deviation of any leaf from the target.
    pub max_target_deviation: f64,
    /// Largest deviation between any two leaves.
    pub max_pairwise_deviation: f64,
    /// Local-state majorization of target over initial, per agent; empty
    /// when the protocol is not deterministic.
    pub agents: Vec<AgentMajorization>,
}

/// Check that a protocol terminates in `target` on every branch, and that
/// each agent's target-local state then majorizes the initial one.
pub fn check_deterministic_transform(
    protocol: &Protocol,
    initial: &MultipartyState,
    target: &MultipartyState,
    cfg: &Config,
) -> Result<DeterministicReport> {
    if target.space() != protocol.space() {
        return Err(Error::DimMismatch {
            context: "protocol vs target space",
            left: protocol.space().total_dim(),
            right: target.space().total_dim(),
        });
    }
    let ensemble = run(protocol, initial, cfg)?;
    let mut max_target_deviation: f64 = 0.0;
    for branch in ensemble.branches() {
        let dev = branch
            .state
            .state()
            .matrix()
            .sub(target.state().matrix())?
            .max_abs();
        max_target_deviation = max_target_deviation.max(dev);
    }
    let mut max_pairwise_deviation: f64 = 0.0;
    for (i, a) in ensemble.branches().iter().enumerate() {
        for b in &ensemble.branches()[i + 1..] {
            let dev = a.state.state().matrix().sub(b.state.state().matrix())?.max_abs();
            max_pairwise_deviation = max_pairwise_deviation.max(dev);
        }
    }
    let deterministic =
        max_target_deviation <= cfg.tol_recon && max_pairwise_deviation <= cfg.tol_recon;

    let mut agents = Vec::new();
    if deterministic {
        for agent in 0..protocol.space().parties() {
            let after = target.partial_trace(agent, cfg)?;
            let before = initial.partial_trace(agent, cfg)?;
            let check = crate::majorization::compare_ops(&after, &before, cfg)?;
            agents.push(AgentMajorization {
                agent,
                slack: check.min_slack,
                holds: check.holds,
            });
        }
    }
    let ok = deterministic && agents.iter().all(|a| a.holds);
    Ok(DeterministicReport {
        deterministic,
        ok,
        leaves: ensemble.len(),
        max_target_deviation,
        max_pairwise_deviation,
        agents,
    })
}
