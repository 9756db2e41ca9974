//! Bi-stochastic channels and the majorization order: verification in one
//! direction, measurement synthesis in the other.
//!
//! A bi-stochastic family applied to σ always produces a state whose
//! spectrum is majorized by `Sp(σ)`; conversely, whenever `σ ⪰ τ` there is
//! a bi-stochastic family `{f_k}` with `Σ f_k σ f_k* = τ`. [`synthesize`]
//! builds one explicitly: align the eigenbases, transfer the spectra with a
//! doubly stochastic matrix, split it into permutations, and scale each
//! permutation by the square root of its weight.

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::majorization::{
    birkhoff, compare_ops, hlp_transfer, BirkhoffDecomposition, SortedVector,
};
use crate::measurement::{BistochasticFlag, Povm};
use crate::state::DensityMatrix;

/// A synthesized bi-stochastic measurement carrying a source state to a
/// target state, together with the ingredients it was built from.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub povm: Povm,
    pub flag: BistochasticFlag,
    /// `V_σ · V_τ*`: the unitary aligning the two sorted eigenbases.
    pub alignment_unitary: ComplexMatrix,
    pub birkhoff: BirkhoffDecomposition,
    pub report: SynthesisReport,
}

/// Residuals of a completed synthesis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SynthesisReport {
    /// Max-abs residual of `Σ f_k σ f_k* - τ`.
    pub residual: f64,
    pub terms: usize,
    pub completeness_residual: f64,
    pub bistochastic_deviation: f64,
}

/// Build a bi-stochastic measurement with `Σ f_k σ f_k* = τ`.
///
/// Requires `σ ⪰ τ` (spectra compared under majorization). Both states are
/// eigendecomposed with spectra sorted non-increasing; the clamped,
/// renormalized spectra are connected by a doubly stochastic transfer
/// matrix, which is split into permutations `Σ p_k P_k`. The family
/// `f_k = √p_k · V_τ P_k V_σ*` then satisfies both measurement sums
/// exactly (each term is a scaled unitary) and reproduces the target. The
/// reconstruction residual is checked against `tol_recon` as the final
/// arbiter.
pub fn synthesize(sigma: &DensityMatrix, tau: &DensityMatrix, cfg: &Config) -> Result<SynthesisResult> {
    let check = compare_ops(sigma, tau, cfg)?;
    if !check.holds {
        return Err(Error::NotMajorized {
            prefix: check.first_violation.unwrap_or(0),
            slack: check.min_slack,
        });
    }

    let eig_sigma = hermitian_eig(sigma.matrix(), cfg.tol_herm)?;
    let eig_tau = hermitian_eig(tau.matrix(), cfg.tol_herm)?;
    let lambda = clamp_normalize(&eig_sigma.eigenvalues);
    let mu = clamp_normalize(&eig_tau.eigenvalues);

    let transfer = hlp_transfer(&lambda, &mu, cfg)?;
    let decomposition = birkhoff(&transfer, cfg)?;

    let v_sigma = &eig_sigma.eigenvectors;
    let v_tau = &eig_tau.eigenvectors;
    let v_sigma_adj = v_sigma.adjoint();
    let alignment_unitary = v_sigma.matmul(&v_tau.adjoint())?;

    let mut operators = Vec::with_capacity(decomposition.terms());
    for (w, perm) in decomposition.weights.iter().zip(&decomposition.permutations) {
        let p = ComplexMatrix::permutation(perm);
        let op = v_tau.matmul(&p)?.matmul(&v_sigma_adj)?.scale(w.sqrt());
        operators.push(op);
    }
    let (povm, flag) = Povm::new(operators, cfg)?;

    let channel = povm.apply_channel_matrix(sigma)?;
    let residual = channel.sub(tau.matrix())?.max_abs();
    if residual > cfg.tol_recon {
        return Err(Error::Reconstruction { residual });
    }

    let report = SynthesisReport {
        residual,
        terms: decomposition.terms(),
        completeness_residual: povm.completeness_residual(),
        bistochastic_deviation: flag.deviation,
    };
    Ok(SynthesisResult {
        povm,
        flag,
        alignment_unitary,
        birkhoff: decomposition,
        report,
    })
}

/// Check the guaranteed direction: for a bi-stochastic family,
/// `σ ⪰ Σ f_k σ f_k*`. Errors if the family is not bi-stochastic; a
/// `false` return signals an implementation or tolerance fault, never a
/// counterexample.
pub fn verify_if_direction(povm: &Povm, sigma: &DensityMatrix, cfg: &Config) -> Result<bool> {
    let flag = povm.bistochastic_flag(cfg);
    if !flag.is_bistochastic {
        return Err(Error::NotBistochastic {
            residual: flag.deviation,
        });
    }
    let out = povm.apply_channel(sigma, cfg)?;
    crate::majorization::majorize_ops(sigma, &out, cfg)
}

/// Round-trip the two directions: push σ through a bi-stochastic family to
/// get τ, then synthesize a fresh family reproducing the same τ.
pub fn majorization_witness_roundtrip(
    sigma: &DensityMatrix,
    povm: &Povm,
    cfg: &Config,
) -> Result<SynthesisResult> {
    let flag = povm.bistochastic_flag(cfg);
    if !flag.is_bistochastic {
        return Err(Error::NotBistochastic {
            residual: flag.deviation,
        });
    }
    let tau = povm.apply_channel(sigma, cfg)?;
    synthesize(sigma, &tau, cfg)
}

/// Clamp numerical negatives to zero and renormalize to unit sum, so
/// transfer coefficients stay in `[0, 1]` despite round-off.
fn clamp_normalize(eigenvalues: &[f64]) -> SortedVector {
    let mut v: Vec<f64> = eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in &mut v {
            *x /= total;
        }
    }
    SortedVector::new(v).expect("sorted eigenvalues stay sorted under clamp and scale")
}
