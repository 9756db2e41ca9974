//! The majorization partial order, doubly stochastic matrices, transfer
//! construction and permutation decomposition.
//!
//! Two equal-sum vectors sorted non-increasing satisfy `a ⪰ b` when every
//! prefix sum of `a` dominates the corresponding prefix sum of `b`. The
//! order lifts to equal-trace self-adjoint operators through their spectra.
//! Whenever `λ ⪰ μ`, a doubly stochastic matrix with `B·λ = μ` exists and
//! [`hlp_transfer`] builds one from at most `dim - 1` transfer rotations;
//! [`birkhoff`] then splits any doubly stochastic matrix into a convex
//! combination of permutations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::state::{DensityMatrix, Spectrum};

/// A vector of reals sorted non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedVector {
    values: Vec<f64>,
}

impl SortedVector {
    /// Accept an already-sorted (non-increasing) finite vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::LengthMismatch { left: 0, right: 1 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        for i in 1..values.len() {
            if values[i] > values[i - 1] {
                return Err(Error::NotSorted { position: i });
            }
        }
        Ok(SortedVector { values })
    }

    /// Sort a vector non-increasing and wrap it.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
        SortedVector::new(values)
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
}

impl From<&Spectrum> for SortedVector {
    fn from(sp: &Spectrum) -> Self {
        SortedVector {
            values: sp.values().to_vec(),
        }
    }
}

impl From<Spectrum> for SortedVector {
    fn from(sp: Spectrum) -> Self {
        SortedVector::from(&sp)
    }
}

/// Outcome of a majorization comparison `a ⪰ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorizationCheck {
    pub holds: bool,
    /// Minimum prefix-sum slack `Σᵢ≤ₖ aᵢ - Σᵢ≤ₖ bᵢ` over all prefixes.
    pub min_slack: f64,
    /// First prefix (1-based length) whose slack falls below `-tol_major`,
    /// when the relation fails.
    pub first_violation: Option<usize>,
}

/// Compare two equal-length, equal-sum sorted vectors under majorization.
///
/// Errors on length mismatch or on sums differing beyond `tol_major`; the
/// order is only defined for vectors summing to the same value.
pub fn compare(a: &SortedVector, b: &SortedVector, cfg: &Config) -> Result<MajorizationCheck> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (sa, sb) = (a.sum(), b.sum());
    if (sa - sb).abs() > cfg.tol_major * (a.len() as f64).max(1.0) {
        return Err(Error::SumMismatch { left: sa, right: sb });
    }
    let mut prefix_a = 0.0;
    let mut prefix_b = 0.0;
    let mut min_slack = f64::INFINITY;
    let mut first_violation = None;
    for (i, (&x, &y)) in a.values().iter().zip(b.values()).enumerate() {
        prefix_a += x;
        prefix_b += y;
        let slack = prefix_a - prefix_b;
        if slack < min_slack {
            min_slack = slack;
        }
        if slack < -cfg.tol_major && first_violation.is_none() {
            first_violation = Some(i + 1);
        }
    }
    Ok(MajorizationCheck {
        holds: first_violation.is_none(),
        min_slack,
        first_violation,
    })
}

/// `a ⪰ b`: every prefix sum of `a` dominates that of `b` within
/// `tol_major`.
pub fn majorize(a: &SortedVector, b: &SortedVector, cfg: &Config) -> Result<bool> {
    Ok(compare(a, b, cfg)?.holds)
}

/// Majorization lifted to states: compare spectra of equal-trace operators.
pub fn majorize_ops(a: &DensityMatrix, b: &DensityMatrix, cfg: &Config) -> Result<bool> {
    Ok(compare_ops(a, b, cfg)?.holds)
}

/// [`compare`] on the spectra of two states.
pub fn compare_ops(a: &DensityMatrix, b: &DensityMatrix, cfg: &Config) -> Result<MajorizationCheck> {
    let tra = a.matrix().trace()?.re;
    let trb = b.matrix().trace()?.re;
    if (tra - trb).abs() > cfg.tol_trace * 2.0 {
        return Err(Error::SumMismatch { left: tra, right: trb });
    }
    let sa = SortedVector::from(a.spectrum(cfg)?);
    let sb = SortedVector::from(b.spectrum(cfg)?);
    compare(&sa, &sb, cfg)
}

/// A square matrix with non-negative entries whose rows and columns all sum
/// to 1 (within `tol_ds`). Entries are clamped into `[0, 1]` on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublyStochasticMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl DoublyStochasticMatrix {
    /// Validate row-major entries as doubly stochastic.
    pub fn new(dim: usize, mut entries: Vec<f64>, tol_ds: f64) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimMismatch {
                context: "doubly stochastic entries",
                left: dim * dim,
                right: entries.len(),
            });
        }
        let mut deviation: f64 = 0.0;
        for e in &mut entries {
            if !e.is_finite() {
                return Err(Error::NonFinite);
            }
            if *e < 0.0 {
                deviation = deviation.max(-*e);
                *e = 0.0;
            } else if *e > 1.0 {
                deviation = deviation.max(*e - 1.0);
                *e = 1.0;
            }
        }
        for i in 0..dim {
            let row: f64 = entries[i * dim..(i + 1) * dim].iter().sum();
            let col: f64 = (0..dim).map(|r| entries[r * dim + i]).sum();
            deviation = deviation.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        if deviation > tol_ds {
            return Err(Error::NotDoublyStochastic { deviation });
        }
        Ok(DoublyStochasticMatrix { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        DoublyStochasticMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Matrix-vector product `B · x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect())
    }
}

/// A convex combination of permutations representing a doubly stochastic
/// matrix. Permutations are stored as row images: term `k` contributes
/// `weights[k]` at entry `(i, permutations[k][i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffDecomposition {
    pub weights: Vec<f64>,
    pub permutations: Vec<Vec<usize>>,
}

impl BirkhoffDecomposition {
    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    /// Rebuild `Σ w_k P_k` as a dense matrix.
    pub fn reconstruct(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim * dim];
        for (w, perm) in self.weights.iter().zip(&self.permutations) {
            for (i, &j) in perm.iter().enumerate() {
                out[i * dim + j] += w;
            }
        }
        out
    }

    /// Max-abs reconstruction residual against a doubly stochastic source.
    pub fn residual(&self, b: &DoublyStochasticMatrix) -> f64 {
        let recon = self.reconstruct(b.dim());
        recon
            .iter()
            .zip(b.entries())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Number of permutation terms the decomposition may use: `(dim-1)² + 1`.
pub fn birkhoff_term_bound(dim: usize) -> usize {
    if dim == 0 {
        return 0;
    }
    (dim - 1) * (dim - 1) + 1
}

// Differences below this threshold count as already-transferred when
// pinning coordinates; well below tol_ds, well above accumulated roundoff.
const TRANSFER_EPS: f64 = 1e-13;

/// Build a doubly stochastic `B` with `B·λ = μ` from at most `dim - 1`
/// transfer rotations (`t·I + (1-t)·Π` with `Π` a transposition).
///
/// Requires `λ ⪰ μ`. Each step picks the largest index `j` with
/// `λ_j > μ_j` and the smallest `k > j` with `λ_k < μ_k`, then moves
/// `min(λ_j - μ_j, μ_k - λ_k)` of mass from `j` to `k`; that choice keeps
/// the working vector sorted and pins at least one coordinate per step.
pub fn hlp_transfer(lambda: &SortedVector, mu: &SortedVector, cfg: &Config) -> Result<DoublyStochasticMatrix> {
    let check = compare(lambda, mu, cfg)?;
    if !check.holds {
        return Err(Error::NotMajorized {
            prefix: check.first_violation.unwrap_or(0),
            slack: check.min_slack,
        });
    }
    let n = lambda.len();
    let mut x = lambda.values().to_vec();
    let y = mu.values();
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        b[i * n + i] = 1.0;
    }

    for _step in 0..n.saturating_sub(1) {
        let Some(j) = (0..n).rev().find(|&i| x[i] - y[i] > TRANSFER_EPS) else {
            break;
        };
        let Some(k) = (j + 1..n).find(|&i| y[i] - x[i] > TRANSFER_EPS) else {
            break;
        };
        let delta = (x[j] - y[j]).min(y[k] - x[k]);
        let spread = x[j] - x[k];
        // t = 1 exactly when nothing moves; clip guards marginal inputs
        let t = if spread > 0.0 {
            (1.0 - delta / spread).clamp(0.0, 1.0)
        } else {
            1.0
        };
        x[j] -= delta;
        x[k] += delta;
        // snap the pinned coordinate to its target to keep the step count
        if (x[j] - y[j]).abs() <= TRANSFER_EPS {
            x[j] = y[j];
        }
        if (x[k] - y[k]).abs() <= TRANSFER_EPS {
            x[k] = y[k];
        }
        // B ← T·B with T acting on rows j and k
        for col in 0..n {
            let rj = b[j * n + col];
            let rk = b[k * n + col];
            b[j * n + col] = t * rj + (1.0 - t) * rk;
            b[k * n + col] = (1.0 - t) * rj + t * rk;
        }
    }

    DoublyStochasticMatrix::new(n, b, cfg.tol_ds)
}

/// Decompose a doubly stochastic matrix into a convex combination of
/// permutation matrices.
///
/// Each round finds a perfect matching on the entries above `tol_ds`
/// (augmenting-path search), subtracts the minimum matched entry times the
/// corresponding permutation, and repeats; at least one entry is zeroed per
/// round. Entries at or below `tol_ds` are structural zeros.
pub fn birkhoff(b: &DoublyStochasticMatrix, cfg: &Config) -> Result<BirkhoffDecomposition> {
    let n = b.dim();
    let bound = birkhoff_term_bound(n);
    let mut work = b.entries().to_vec();
    let mut weights = Vec::new();
    let mut permutations: Vec<Vec<usize>> = Vec::new();

    loop {
        let remaining = work.iter().cloned().fold(0.0, f64::max);
        if remaining <= cfg.tol_ds {
            break;
        }
        let Some(perm) = perfect_matching(&work, n, cfg.tol_ds) else {
            return Err(Error::BirkhoffStuck { residual: remaining });
        };
        let w = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| work[i * n + j])
            .fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            work[i * n + j] -= w;
        }
        weights.push(w);
        permutations.push(perm);
        if weights.len() > bound {
            return Err(Error::BirkhoffTermBound {
                terms: weights.len(),
                bound,
            });
        }
    }

    if weights.is_empty() {
        // only reachable for an all-zero input, which new() rejects
        return Err(Error::BirkhoffStuck { residual: 0.0 });
    }
    Ok(BirkhoffDecomposition {
        weights,
        permutations,
    })
}

/// Perfect matching of rows to columns over entries strictly above `tol`,
/// by Kuhn's augmenting-path algorithm. Deterministic: rows and columns are
/// scanned in index order.
fn perfect_matching(entries: &[f64], n: usize, tol: f64) -> Option<Vec<usize>> {
    let mut col_of_row = vec![usize::MAX; n];
    let mut row_of_col = vec![usize::MAX; n];

    fn augment(
        row: usize,
        entries: &[f64],
        n: usize,
        tol: f64,
        visited: &mut [bool],
        col_of_row: &mut [usize],
        row_of_col: &mut [usize],
    ) -> bool {
        for col in 0..n {
            if visited[col] || entries[row * n + col] <= tol {
                continue;
            }
            visited[col] = true;
            if row_of_col[col] == usize::MAX
                || augment(row_of_col[col], entries, n, tol, visited, col_of_row, row_of_col)
            {
                col_of_row[row] = col;
                row_of_col[col] = row;
                return true;
            }
        }
        false
    }

    for row in 0..n {
        let mut visited = vec![false; n];
        if !augment(row, entries, n, tol, &mut visited, &mut col_of_row, &mut row_of_col) {
            return None;
        }
    }
    Some(col_of_row)
}

/// Random doubly stochastic matrix: a convex mixture of `terms` uniformly
/// random permutations. Deterministic per seed.
pub fn random_doubly_stochastic(dim: usize, terms: usize, seed: u64, cfg: &Config) -> Result<DoublyStochasticMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_doubly_stochastic_with(&mut rng, dim, terms, cfg)
}

/// Same as [`random_doubly_stochastic`] with a caller-supplied generator.
pub fn random_doubly_stochastic_with(
    rng: &mut impl Rng,
    dim: usize,
    terms: usize,
    cfg: &Config,
) -> Result<DoublyStochasticMatrix> {
    if terms == 0 {
        return Err(Error::Config {
            reason: "terms must be at least 1",
        });
    }
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut entries = vec![0.0; dim * dim];
    let mut image: Vec<usize> = (0..dim).collect();
    for &w in &weights {
        image.shuffle(rng);
        for (i, &j) in image.iter().enumerate() {
            entries[i * dim + j] += w;
        }
    }
    DoublyStochasticMatrix::new(dim, entries, cfg.tol_ds)
}
