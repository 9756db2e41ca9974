//! Generalized measurements: validation, application, channels and expected
//! spectra.
//!
//! A measurement is a family `{f_k}` of operators whose completeness sum
//! `Σ f_k*·f_k` is the identity; it is bi-stochastic when the reversed sum
//! `Σ f_k·f_k*` is the identity as well. Applying the family to a state σ
//! yields outcome `k` with probability `Tr(f_k σ f_k*)` and posterior
//! `f_k σ f_k* / p_k`; discarding the outcome yields the trace-preserving
//! channel `σ ↦ Σ f_k σ f_k*`.

use rand::Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, orthonormalize_columns, random_gaussian, random_unitary, ComplexMatrix};
use crate::state::{entropy_bits, DensityMatrix, Spectrum};

/// A validated measurement family `{f_k}` on a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

/// Result of the bi-stochasticity test `Σ f_k·f_k* = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistochasticFlag {
    pub is_bistochastic: bool,
    /// Max-abs residual of the reversed completeness sum.
    pub deviation: f64,
}

/// One measurement branch: its index, probability, and the posterior state
/// when the branch is actually reachable (probability above `tol_prob`).
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
    pub posterior: Option<DensityMatrix>,
}

impl Povm {
    /// Validate a family of operators as a measurement.
    ///
    /// All operators must be square of one common dimension; the
    /// completeness residual must stay within `tol_povm`. The returned flag
    /// reports how close the family is to bi-stochastic.
    pub fn new(operators: Vec<ComplexMatrix>, cfg: &Config) -> Result<(Self, BistochasticFlag)> {
        if operators.is_empty() {
            return Err(Error::EmptyPovm);
        }
        let dim = operators[0].square_dim()?;
        cfg.check_dim(dim)?;
        for op in &operators {
            let d = op.square_dim()?;
            if d != dim {
                return Err(Error::DimMismatch {
                    context: "measurement operators",
                    left: dim,
                    right: d,
                });
            }
            if !op.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let completeness = completeness_residual(&operators)?;
        if completeness > cfg.tol_povm {
            return Err(Error::Incomplete {
                residual: completeness,
            });
        }
        let povm = Povm { dim, operators };
        let flag = povm.bistochastic_flag(cfg);
        Ok((povm, flag))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn operator(&self, k: usize) -> Result<&ComplexMatrix> {
        self.operators.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.operators.len(),
        })
    }

    /// Max-abs residual of `Σ f_k*·f_k - I`.
    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(&self.operators).expect("validated family")
    }

    /// Test `Σ f_k·f_k* = I` within `tol_povm`.
    pub fn bistochastic_flag(&self, cfg: &Config) -> BistochasticFlag {
        let deviation = reversed_residual(&self.operators).expect("validated family");
        BistochasticFlag {
            is_bistochastic: deviation <= cfg.tol_povm,
            deviation,
        }
    }

    /// The unnormalized branch operator `f_k · σ · f_k*`.
    pub fn branch(&self, state: &DensityMatrix, k: usize) -> Result<ComplexMatrix> {
        self.check_state_dim(state)?;
        state.matrix().conjugate_by(self.operator(k)?)
    }

    /// Probability of outcome `k` on `state`: `Tr(f_k σ f_k*)`, clamped
    /// into `[0, 1]`.
    pub fn outcome_probability(&self, state: &DensityMatrix, k: usize) -> Result<f64> {
        let branch = self.branch(state, k)?;
        Ok(branch.trace()?.re.clamp(0.0, 1.0))
    }

    /// All outcome probabilities, in branch order.
    pub fn outcome_probabilities(&self, state: &DensityMatrix) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| self.outcome_probability(state, k)).collect()
    }

    /// Branch `k` in full: probability plus the normalized posterior when
    /// the probability exceeds `tol_prob`. A zero-probability result is
    /// never obtained, so it carries no posterior.
    pub fn posterior_state(&self, state: &DensityMatrix, k: usize, cfg: &Config) -> Result<MeasurementOutcome> {
        let branch = self.branch(state, k)?;
        let probability = branch.trace()?.re.clamp(0.0, 1.0);
        let posterior = if probability > cfg.tol_prob {
            Some(DensityMatrix::new(branch.scale(1.0 / probability), cfg)?)
        } else {
            None
        };
        Ok(MeasurementOutcome {
            index: k,
            probability,
            posterior,
        })
    }

    /// The trace-preserving channel `σ ↦ Σ f_k σ f_k*` (outcome discarded).
    pub fn apply_channel(&self, state: &DensityMatrix, cfg: &Config) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_channel_matrix(state)?, cfg)
    }

    /// Channel output as a raw matrix, summed in branch order.
    pub fn apply_channel_matrix(&self, state: &DensityMatrix) -> Result<ComplexMatrix> {
        self.check_state_dim(state)?;
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for op in &self.operators {
            acc = acc.add(&state.matrix().conjugate_by(op)?)?;
        }
        Ok(acc)
    }

    /// Expected spectrum `Σ_k Sp(f_k σ f_k*)`: the componentwise sum of the
    /// sorted branch spectra (outcome recorded).
    ///
    /// Branch spectra are taken from the unnormalized operators, never as
    /// `p_k · Sp(σ'_k)`, so zero-probability branches contribute an exact
    /// zero vector instead of a 0/0.
    pub fn expected_spectrum(&self, state: &DensityMatrix, cfg: &Config) -> Result<Spectrum> {
        let parts = self.branch_spectra(state, cfg)?;
        Spectrum::componentwise_sum(&parts)
    }

    /// Sorted spectrum of every unnormalized branch, in branch order.
    pub fn branch_spectra(&self, state: &DensityMatrix, cfg: &Config) -> Result<Vec<Spectrum>> {
        self.check_state_dim(state)?;
        self.operators
            .iter()
            .map(|op| {
                let branch = state.matrix().conjugate_by(op)?;
                let eig = hermitian_eig(&branch, cfg.tol_herm)?;
                Spectrum::from_eigenvalues(eig.eigenvalues, cfg.tol_psd)
            })
            .collect()
    }

    /// The two entropies of a recorded measurement: `S₁`, the entropy of
    /// the expected spectrum, and `S₂`, the expected entropy of the
    /// posteriors. Concavity gives `S₂ ≤ S₁`.
    pub fn entropy_pair(&self, state: &DensityMatrix, cfg: &Config) -> Result<(f64, f64)> {
        let s1 = self.expected_spectrum(state, cfg)?.entropy();
        let mut s2 = 0.0;
        for spectrum in self.branch_spectra(state, cfg)? {
            let p = spectrum.sum();
            if p > cfg.tol_prob {
                let normalized: Vec<f64> = spectrum.values().iter().map(|v| v / p).collect();
                s2 += p * entropy_bits(&normalized);
            }
        }
        Ok((s1, s2))
    }

    fn check_state_dim(&self, state: &DensityMatrix) -> Result<()> {
        if state.dim() != self.dim {
            return Err(Error::DimMismatch {
                context: "measurement vs state",
                left: self.dim,
                right: state.dim(),
            });
        }
        Ok(())
    }
}

fn completeness_residual(operators: &[ComplexMatrix]) -> Result<f64> {
    gram_residual(operators, false)
}

fn reversed_residual(operators: &[ComplexMatrix]) -> Result<f64> {
    gram_residual(operators, true)
}

fn gram_residual(operators: &[ComplexMatrix], reversed: bool) -> Result<f64> {
    let dim = operators[0].rows();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for op in operators {
        let term = if reversed {
            op.matmul(&op.adjoint())?
        } else {
            op.adjoint().matmul(op)?
        };
        acc = acc.add(&term)?;
    }
    acc.identity_deviation()
}

/// Random measurement family: a Gaussian `(m·dim) × dim` matrix is
/// orthonormalized into an isometry and sliced into `m` blocks, which makes
/// the completeness sum the identity up to orthonormalization error. Such
/// families are generically not bi-stochastic.
pub fn random_povm(rng: &mut impl Rng, dim: usize, outcomes: usize, cfg: &Config) -> Result<(Povm, BistochasticFlag)> {
    let tall = random_gaussian(rng, outcomes * dim, dim);
    let isometry = orthonormalize_columns(&tall)?;
    let blocks = (0..outcomes)
        .map(|k| ComplexMatrix::from_fn(dim, dim, |i, j| isometry.get(k * dim + i, j)))
        .collect();
    Povm::new(blocks, cfg)
}

/// Random bi-stochastic family `{√p_k · U_k}` with random unitaries and
/// random convex weights; both defining sums equal the identity by
/// construction.
pub fn random_bistochastic_povm(
    rng: &mut impl Rng,
    dim: usize,
    outcomes: usize,
    cfg: &Config,
) -> Result<(Povm, BistochasticFlag)> {
    let mut weights: Vec<f64> = (0..outcomes).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let ops = weights
        .iter()
        .map(|&w| random_unitary(rng, dim).scale(w.sqrt()))
        .collect();
    Povm::new(ops, cfg)
}
