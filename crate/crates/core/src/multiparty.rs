//! Tensor-product spaces shared by several agents: partial traces, lifted
//! local measurements, and the behaviour of non-measuring agents' states.
//!
//! Agents are indexed 0-based in the API (the CLI and file formats use
//! 1-based labels). Agent `i`'s local state is the partial trace of the
//! global state over every other factor; a local measurement `{f_k}` acts
//! globally as `{g_k = id ⊗ f_k ⊗ id}`.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::measurement::{BistochasticFlag, Povm};
use crate::state::{DensityMatrix, Spectrum};

/// An ordered list of tensor factor dimensions `d₁ ⊗ … ⊗ d_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpace {
    factor_dims: Vec<usize>,
}

impl TensorSpace {
    /// Validate factor dimensions; the total dimension must stay within the
    /// configured cap.
    pub fn new(factor_dims: Vec<usize>, cfg: &Config) -> Result<Self> {
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::DimMismatch {
                context: "tensor factors must be positive",
                left: factor_dims.len(),
                right: 0,
            });
        }
        let total: usize = factor_dims.iter().product();
        cfg.check_dim(total)?;
        Ok(TensorSpace { factor_dims })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn parties(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn factor_dim(&self, agent: usize) -> Result<usize> {
        self.factor_dims
            .get(agent)
            .copied()
            .ok_or(Error::AgentOutOfRange {
                agent,
                parties: self.parties(),
            })
    }

    /// Dimensions of everything left and right of `agent`.
    fn split(&self, agent: usize) -> Result<(usize, usize, usize)> {
        let d = self.factor_dim(agent)?;
        let left: usize = self.factor_dims[..agent].iter().product();
        let right: usize = self.factor_dims[agent + 1..].iter().product();
        Ok((left, d, right))
    }
}

/// A state living on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartyState {
    space: TensorSpace,
    state: DensityMatrix,
}

impl MultipartyState {
    pub fn new(space: TensorSpace, state: DensityMatrix) -> Result<Self> {
        if state.dim() != space.total_dim() {
            return Err(Error::DimMismatch {
                context: "state vs tensor space",
                left: space.total_dim(),
                right: state.dim(),
            });
        }
        Ok(MultipartyState { space, state })
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Agent `keep`'s local state: the partial trace over all other factors.
    pub fn partial_trace(&self, keep: usize, cfg: &Config) -> Result<DensityMatrix> {
        let traced = partial_trace_matrix(self.state.matrix(), self.space.factor_dims(), keep)?;
        DensityMatrix::new(traced, cfg)
    }
}

/// Partial trace of a raw matrix over all factors except `keep`.
///
/// Works on any square matrix of the product dimension (measurement
/// branches are sub-normalized, so they never form a `DensityMatrix`).
pub fn partial_trace_matrix(m: &ComplexMatrix, factor_dims: &[usize], keep: usize) -> Result<ComplexMatrix> {
    let total: usize = factor_dims.iter().product();
    let dim = m.square_dim()?;
    if dim != total {
        return Err(Error::DimMismatch {
            context: "partial trace",
            left: total,
            right: dim,
        });
    }
    if keep >= factor_dims.len() {
        return Err(Error::AgentOutOfRange {
            agent: keep,
            parties: factor_dims.len(),
        });
    }
    let d = factor_dims[keep];
    let left: usize = factor_dims[..keep].iter().product();
    let right: usize = factor_dims[keep + 1..].iter().product();
    let mut out = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for l in 0..left {
                for t in 0..right {
                    let row = (l * d + r) * right + t;
                    let col = (l * d + c) * right + t;
                    acc += m.get(row, col);
                }
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// A measurement owned by one agent, defined on that agent's factor.
#[derive(Debug, Clone)]
pub struct LocalPovm {
    agent: usize,
    povm: Povm,
}

impl LocalPovm {
    pub fn new(agent: usize, povm: Povm, space: &TensorSpace) -> Result<Self> {
        let d = space.factor_dim(agent)?;
        if povm.dim() != d {
            return Err(Error::DimMismatch {
                context: "local measurement vs factor",
                left: d,
                right: povm.dim(),
            });
        }
        Ok(LocalPovm { agent, povm })
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// The global family `{id ⊗ f_k ⊗ id}` on the full space. Both
    /// measurement sums tensor with identities, so the lift inherits the
    /// local family's residuals — in particular it is bi-stochastic iff the
    /// local family is.
    pub fn lift(&self, space: &TensorSpace, cfg: &Config) -> Result<(Povm, BistochasticFlag)> {
        let (left, d, right) = space.split(self.agent)?;
        if d != self.povm.dim() {
            return Err(Error::DimMismatch {
                context: "lift vs factor",
                left: d,
                right: self.povm.dim(),
            });
        }
        let id_left = ComplexMatrix::identity(left);
        let id_right = ComplexMatrix::identity(right);
        let ops = self
            .povm
            .operators()
            .iter()
            .map(|f| id_left.kron(f).kron(&id_right))
            .collect();
        Povm::new(ops, cfg)
    }
}

/// Check that measuring locally looks the same from inside the factor:
/// `Tr_other(g_k σ g_k*) = f_k · Tr_other(σ) · f_k*` for branch `k`.
pub fn local_consistency(
    ms: &MultipartyState,
    lp: &LocalPovm,
    k: usize,
    cfg: &Config,
) -> Result<bool> {
    let (lifted, _) = lp.lift(ms.space(), cfg)?;
    let global_branch = lifted.branch(ms.state(), k)?;
    let lhs = partial_trace_matrix(&global_branch, ms.space().factor_dims(), lp.agent())?;
    let local = ms.partial_trace(lp.agent(), cfg)?;
    let rhs = local.matrix().conjugate_by(lp.povm().operator(k)?)?;
    Ok(lhs.sub(&rhs)?.max_abs() <= cfg.tol_recon)
}

/// Expected spectrum of agent `observer`'s state after another agent
/// measures: `Σ_k Sp(Tr_other(g_k σ g_k*))`.
pub fn observer_expected_spectrum(
    ms: &MultipartyState,
    lp: &LocalPovm,
    observer: usize,
    cfg: &Config,
) -> Result<Spectrum> {
    if observer == lp.agent() {
        return Err(Error::ObserverIsMeasurer { agent: observer });
    }
    ms.space().factor_dim(observer)?;
    let (lifted, _) = lp.lift(ms.space(), cfg)?;
    let mut parts = Vec::with_capacity(lifted.len());
    for k in 0..lifted.len() {
        let branch = lifted.branch(ms.state(), k)?;
        let marginal = partial_trace_matrix(&branch, ms.space().factor_dims(), observer)?;
        let eig = crate::linalg::hermitian_eig(&marginal, cfg.tol_herm)?;
        parts.push(Spectrum::from_eigenvalues(eig.eigenvalues, cfg.tol_psd)?);
    }
    Spectrum::componentwise_sum(&parts)
}

/// Residual of the invariance of an observer's state under another agent's
/// trace-preserving measurement:
/// `‖Tr_other(Σ_k g_k σ g_k*) - Tr_other(σ)‖_∞`.
///
/// This holds for *every* measurement family, bi-stochastic or not; only
/// the completeness sum enters.
pub fn observer_invariance_residual(
    ms: &MultipartyState,
    lp: &LocalPovm,
    observer: usize,
    cfg: &Config,
) -> Result<f64> {
    if observer == lp.agent() {
        return Err(Error::ObserverIsMeasurer { agent: observer });
    }
    ms.space().factor_dim(observer)?;
    let (lifted, _) = lp.lift(ms.space(), cfg)?;
    let channel = lifted.apply_channel_matrix(ms.state())?;
    let after = partial_trace_matrix(&channel, ms.space().factor_dims(), observer)?;
    let before = partial_trace_matrix(ms.state().matrix(), ms.space().factor_dims(), observer)?;
    Ok(after.sub(&before)?.max_abs())
}
