//! Density matrices, spectra and entropy.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, random_gaussian, ComplexMatrix};

/// A mixed state: Hermitian, positive semidefinite, unit trace.
///
/// Construction validates all three invariants (plus finiteness and the
/// configured dimension cap), so holding a `DensityMatrix` is proof the
/// matrix is a state up to the configured tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    matrix: ComplexMatrix,
}

/// Which state invariant a candidate matrix violated.
///
/// Serialized names match the machine-readable rejection records emitted by
/// the CLI: `"hermitian"`, `"trace"`, `"psd"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateInvariant {
    Hermitian,
    Trace,
    Psd,
}

impl StateInvariant {
    pub fn name(self) -> &'static str {
        match self {
            StateInvariant::Hermitian => "hermitian",
            StateInvariant::Trace => "trace",
            StateInvariant::Psd => "psd",
        }
    }
}

/// Classify a state-validation error as a (invariant, deviation) record.
pub fn rejection_record(err: &Error) -> Option<(StateInvariant, f64)> {
    match err {
        Error::NotHermitian { deviation } => Some((StateInvariant::Hermitian, *deviation)),
        Error::TraceNotOne { deviation } => Some((StateInvariant::Trace, *deviation)),
        Error::NotPositive { eigenvalue } => Some((StateInvariant::Psd, eigenvalue.abs())),
        _ => None,
    }
}

impl DensityMatrix {
    /// Validate a candidate matrix as a state.
    ///
    /// Checks run in order: square shape, finiteness, dimension cap,
    /// Hermiticity (`tol_herm`), unit trace (`tol_trace`), positivity
    /// (eigenvalues above `-tol_psd`). The first failed invariant is
    /// reported.
    pub fn new(matrix: ComplexMatrix, cfg: &Config) -> Result<Self> {
        let dim = matrix.square_dim()?;
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        cfg.check_dim(dim)?;
        let herm_dev = matrix.hermitian_deviation()?;
        if herm_dev > cfg.tol_herm {
            return Err(Error::NotHermitian { deviation: herm_dev });
        }
        let tr = matrix.trace()?;
        let tr_dev = (tr - Complex64::new(1.0, 0.0)).norm();
        if tr_dev > cfg.tol_trace {
            return Err(Error::TraceNotOne { deviation: tr_dev });
        }
        let eig = hermitian_eig(&matrix, cfg.tol_herm)?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -cfg.tol_psd {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        Ok(DensityMatrix { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// The pure state `|x⟩⟨x|` for a (non-zero) amplitude vector `x`.
    pub fn pure_state(amplitudes: &[Complex64], cfg: &Config) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::NonFinite);
        }
        let dim = amplitudes.len();
        let m = ComplexMatrix::from_fn(dim, dim, |i, j| {
            amplitudes[i] * amplitudes[j].conj() / norm_sq
        });
        DensityMatrix::new(m, cfg)
    }

    /// The maximally mixed state `I/n`.
    pub fn maximally_mixed(dim: usize, cfg: &Config) -> Result<Self> {
        DensityMatrix::new(ComplexMatrix::identity(dim).scale(1.0 / dim as f64), cfg)
    }

    /// Eigenvalues as a sorted, clamped probability-like vector.
    pub fn spectrum(&self, cfg: &Config) -> Result<Spectrum> {
        let eig = hermitian_eig(&self.matrix, cfg.tol_herm)?;
        Spectrum::from_eigenvalues(eig.eigenvalues, cfg.tol_psd)
    }

    /// Random state of the given dimension and rank: `G·G*/Tr(G·G*)` with
    /// `G` a `dim × rank` standard complex Gaussian matrix. Deterministic
    /// per seed.
    pub fn random(dim: usize, rank: usize, seed: u64, cfg: &Config) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(&mut rng, dim, rank, cfg)
    }

    /// Same as [`DensityMatrix::random`], drawing from a caller-supplied
    /// generator.
    pub fn random_with(rng: &mut impl Rng, dim: usize, rank: usize, cfg: &Config) -> Result<Self> {
        if rank < 1 || rank > dim {
            return Err(Error::RankOutOfRange { rank, dim });
        }
        let g = random_gaussian(rng, dim, rank);
        let gg = g.matmul(&g.adjoint())?;
        let tr = gg.trace()?.re;
        DensityMatrix::new(gg.scale(1.0 / tr), cfg)
    }
}

/// A spectrum: non-increasing vector of non-negative reals.
///
/// Tiny negative eigenvalues (within the PSD tolerance used at
/// construction) are clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sort eigenvalues non-increasing and clamp numerical negatives.
    /// Values below `-tol_psd` are a genuine positivity violation.
    pub fn from_eigenvalues(mut values: Vec<f64>, tol_psd: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::LengthMismatch { left: 0, right: 1 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
        if let Some(&min) = values.last() {
            if min < -tol_psd {
                return Err(Error::NotPositive { eigenvalue: min });
            }
        }
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Spectrum { values })
    }

    /// Componentwise sum of already-sorted spectra (the sum of
    /// non-increasing vectors is non-increasing).
    pub fn componentwise_sum(parts: &[Spectrum]) -> Result<Spectrum> {
        let first = parts.first().ok_or(Error::LengthMismatch { left: 0, right: 1 })?;
        let len = first.len();
        let mut values = vec![0.0; len];
        for part in parts {
            if part.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: part.len(),
                });
            }
            for (acc, v) in values.iter_mut().zip(part.values()) {
                *acc += v;
            }
        }
        Ok(Spectrum { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Shannon entropy in bits, `-Σ λ log₂ λ` with `0·log 0 = 0`.
    /// Meaningful for spectra summing to 1.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.values)
    }
}

/// `-Σ p log₂ p` over the positive entries of `probabilities`.
pub fn entropy_bits(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn maximally_mixed_qubit_is_valid() {
        let s = DensityMatrix::maximally_mixed(2, &cfg()).unwrap();
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn rejects_negative_eigenvalue_with_psd_record() {
        // [[0.5, 0.6], [0.6, 0.5]] has eigenvalues 1.1 and -0.1
        let m = ComplexMatrix::from_rows(vec![
            vec![c(0.5, 0.0), c(0.6, 0.0)],
            vec![c(0.6, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        let err = DensityMatrix::new(m, &cfg()).unwrap_err();
        match &err {
            Error::NotPositive { eigenvalue } => assert!((eigenvalue + 0.1).abs() < 1e-12),
            other => panic!("expected positivity failure, got {other:?}"),
        }
        let (invariant, deviation) = rejection_record(&err).unwrap();
        assert_eq!(invariant.name(), "psd");
        assert!((deviation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_trace_excess() {
        let m = ComplexMatrix::from_real_diag(&[0.7, 0.4]);
        let err = DensityMatrix::new(m, &cfg()).unwrap_err();
        match &err {
            Error::TraceNotOne { deviation } => assert!((deviation - 0.1).abs() < 1e-12),
            other => panic!("expected trace failure, got {other:?}"),
        }
        assert_eq!(rejection_record(&err).unwrap().0.name(), "trace");
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(vec![
            vec![c(0.5, 0.0), c(0.1, 0.0)],
            vec![c(0.3, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        let err = DensityMatrix::new(m, &cfg()).unwrap_err();
        assert_eq!(rejection_record(&err).unwrap().0.name(), "hermitian");
    }

    #[test]
    fn pure_state_spectrum() {
        let s = DensityMatrix::pure_state(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], &cfg()).unwrap();
        let sp = s.spectrum(&cfg()).unwrap();
        assert!((sp.values()[0] - 1.0).abs() < 1e-12);
        assert!(sp.values()[1].abs() < 1e-12);
        assert!(sp.values()[2].abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_spectrum_is_flat() {
        let s = DensityMatrix::maximally_mixed(4, &cfg()).unwrap();
        let sp = s.spectrum(&cfg()).unwrap();
        for v in sp.values() {
            assert!((v - 0.25).abs() < 1e-12);
        }
        assert!((sp.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_mixture_diagonalizes() {
        // 0.8 |a⟩⟨a| + 0.2 |b⟩⟨b| with orthonormal a, b
        let a = [c(1.0, 0.0), c(0.0, 1.0)]; // (1, i)/√2 after normalization
        let b = [c(1.0, 0.0), c(0.0, -1.0)];
        let pa = DensityMatrix::pure_state(&a, &cfg()).unwrap();
        let pb = DensityMatrix::pure_state(&b, &cfg()).unwrap();
        let mix = pa.matrix().scale(0.8).add(&pb.matrix().scale(0.2)).unwrap();
        let s = DensityMatrix::new(mix, &cfg()).unwrap();
        let sp = s.spectrum(&cfg()).unwrap();
        assert!((sp.values()[0] - 0.8).abs() < 1e-12);
        assert!((sp.values()[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let tol = 1e-12;
        let pure = Spectrum::from_eigenvalues(vec![1.0, 0.0], tol).unwrap();
        assert_eq!(pure.entropy(), 0.0);
        let half = Spectrum::from_eigenvalues(vec![0.5, 0.5], tol).unwrap();
        assert!((half.entropy() - 1.0).abs() < 1e-12);
        let skew = Spectrum::from_eigenvalues(vec![0.7, 0.3], tol).unwrap();
        assert!((skew.entropy() - 0.8813).abs() < 1e-3);
    }

    #[test]
    fn entropy_bounded_by_log_dim() {
        let sp = Spectrum::from_eigenvalues(vec![0.4, 0.3, 0.2, 0.1], 1e-12).unwrap();
        let e = sp.entropy();
        assert!(e >= 0.0 && e <= (4.0f64).log2() + 1e-12);
    }

    #[test]
    fn random_rank_one_is_pure() {
        let s = DensityMatrix::random(2, 1, 42, &cfg()).unwrap();
        let sp = s.spectrum(&cfg()).unwrap();
        assert!((sp.values()[0] - 1.0).abs() < 1e-9);
        assert!(sp.values()[1].abs() < 1e-9);
    }

    #[test]
    fn random_full_rank_is_valid_state() {
        let s = DensityMatrix::random(4, 4, 42, &cfg()).unwrap();
        assert!((s.matrix().trace().unwrap().re - 1.0).abs() < 1e-12);
        let sp = s.spectrum(&cfg()).unwrap();
        assert!((sp.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_state_is_reproducible_bitwise() {
        let a = DensityMatrix::random(4, 2, 7, &cfg()).unwrap();
        let b = DensityMatrix::random(4, 2, 7, &cfg()).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn random_rejects_bad_rank() {
        assert!(matches!(
            DensityMatrix::random(3, 0, 1, &cfg()),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            DensityMatrix::random(3, 4, 1, &cfg()),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn spectrum_rejects_genuinely_negative() {
        assert!(matches!(
            Spectrum::from_eigenvalues(vec![1.1, -0.1], 1e-9),
            Err(Error::NotPositive { .. })
        ));
    }
}
