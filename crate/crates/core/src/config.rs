//! Numeric tolerances and suite parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and knobs shared by every validating operation in the crate.
///
/// The defaults are tuned for dense f64 arithmetic at dimensions up to
/// `dim_cap`; all of them can be overridden per run (the CLI exposes each as
/// a `--tol-*` flag).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    /// Max absolute deviation of `a - a*` tolerated when a matrix must be
    /// Hermitian.
    pub tol_herm: f64,
    /// Eigenvalues in `[-tol_psd, 0)` are treated as numerical zeros;
    /// anything below `-tol_psd` fails positivity.
    pub tol_psd: f64,
    /// Tolerated deviation of a state's trace from 1.
    pub tol_trace: f64,
    /// Max absolute residual of the completeness and bi-stochasticity sums
    /// of a measurement family.
    pub tol_povm: f64,
    /// Outcome probabilities at or below this threshold count as zero; the
    /// branch is then never obtained and carries no posterior.
    pub tol_prob: f64,
    /// Slack allowed when comparing prefix sums in majorization checks.
    pub tol_major: f64,
    /// Row/column-sum tolerance for doubly stochastic matrices, and the
    /// structural-zero threshold of the permutation decomposition.
    pub tol_ds: f64,
    /// Max absolute entrywise residual tolerated when a matrix must be
    /// reproduced (channel reconstructions, local-state comparisons).
    pub tol_recon: f64,
    /// Largest total Hilbert-space dimension accepted by validating
    /// constructors.
    pub dim_cap: usize,
    /// Base seed for randomized suites.
    pub seed: u64,
    /// Number of seeded trials per randomized suite.
    pub trials: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_herm: 1e-9,
            tol_psd: 1e-9,
            tol_trace: 1e-9,
            tol_povm: 1e-9,
            tol_prob: 1e-12,
            tol_major: 1e-9,
            tol_ds: 1e-9,
            tol_recon: 1e-8,
            dim_cap: 256,
            seed: 7,
            trials: 1000,
        }
    }
}

impl Config {
    /// Check the configuration invariants: positive tolerances,
    /// `dim_cap >= 2`, `trials >= 1`.
    pub fn validate(&self) -> Result<()> {
        let tols = [
            self.tol_herm,
            self.tol_psd,
            self.tol_trace,
            self.tol_povm,
            self.tol_prob,
            self.tol_major,
            self.tol_ds,
            self.tol_recon,
        ];
        if tols.iter().any(|t| *t <= 0.0 || !t.is_finite()) {
            return Err(Error::Config {
                reason: "all tolerances must be positive and finite",
            });
        }
        if self.dim_cap < 2 {
            return Err(Error::Config {
                reason: "dim_cap must be at least 2",
            });
        }
        if self.trials < 1 {
            return Err(Error::Config {
                reason: "trials must be at least 1",
            });
        }
        Ok(())
    }

    /// Error unless `dim` is within the configured cap.
    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim > self.dim_cap {
            return Err(Error::DimCap {
                dim,
                cap: self.dim_cap,
            });
        }
        Ok(())
    }
}
