//! Dense complex matrices and the Hermitian eigensolver.
//!
//! Everything in the crate is built on row-major `ComplexMatrix` values and
//! the cyclic Jacobi diagonalization in [`hermitian_eig`]. Matrices are kept
//! dense: the intended workloads are desk-scale (total dimension capped by
//! configuration, 256 by default), where O(n³) kernels are more than fast
//! enough and far easier to audit than sparse structures.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Matrix unit `|i⟩⟨j|`: a single 1 at position `(i, j)`.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim);
        let mut m = Self::zeros(dim, dim);
        m.data[i * dim + j] = Complex64::new(1.0, 0.0);
        m
    }

    /// Build a matrix by evaluating `f` at every index pair.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; rows must be non-empty and rectangular.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if r == 0 || c == 0 {
            return Err(Error::DimMismatch {
                context: "from_rows: empty matrix",
                left: r,
                right: c,
            });
        }
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(Error::DimMismatch {
                    context: "from_rows: ragged rows",
                    left: c,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(ComplexMatrix { rows: r, cols: c, data })
    }

    /// Real diagonal matrix.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Permutation matrix `P` with `(P x)_i = x_{perm[i]}`, i.e. a 1 at
    /// `(i, perm[i])` for every row `i`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            assert!(j < n, "permutation image out of range");
            m.data[i * n + j] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Square dimension, or an error for rectangular matrices.
    pub fn square_dim(&self) -> Result<usize> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                context: "matmul",
                left: self.cols,
                right: other.rows,
            });
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    /// Kronecker product: block `(i, j)` of the result is `self[i,j] · other`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = ComplexMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out.data[(i * other.rows + p) * cols + (j * other.cols + q)] =
                            a * other.data[p * other.cols + q];
                    }
                }
            }
        }
        out
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> Result<Complex64> {
        let n = self.square_dim()?;
        let mut t = Complex64::new(0.0, 0.0);
        for i in 0..n {
            t += self.data[i * n + i];
        }
        Ok(t)
    }

    /// Entrywise sum with `other`.
    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        context: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimMismatch {
                context,
                left: self.rows * self.cols,
                right: other.rows * other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Multiply every entry by a real scalar.
    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// Multiply every entry by a complex scalar.
    pub fn scale_complex(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `f · self · f*` — the shape every measurement branch takes.
    pub fn conjugate_by(&self, f: &ComplexMatrix) -> Result<ComplexMatrix> {
        f.matmul(self)?.matmul(&f.adjoint())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max absolute deviation from the adjoint, `max |a - a*|`.
    pub fn hermitian_deviation(&self) -> Result<f64> {
        let n = self.square_dim()?;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                dev = dev.max(d);
            }
        }
        Ok(dev)
    }

    /// Max absolute deviation from the identity.
    pub fn identity_deviation(&self) -> Result<f64> {
        let n = self.square_dim()?;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((self.data[i * n + j] - expect).norm());
            }
        }
        Ok(dev)
    }
}

// Wire format: a matrix is an array of row arrays, each entry a two-element
// array [re, im] of decimal floats.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = raw
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        let m = ComplexMatrix::from_rows(rows).map_err(D::Error::custom)?;
        if !m.is_finite() {
            return Err(D::Error::custom("matrix contains a non-finite entry"));
        }
        Ok(m)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted non-increasing; column `j` of `eigenvectors` is the
/// unit eigenvector for `eigenvalues[j]`, with its phase fixed so that the
/// largest-magnitude component is real and positive. Ties in magnitude and in
/// eigenvalue order are broken by first index, so the output is a
/// deterministic function of the input.
#[derive(Debug, Clone)]
pub struct HermitianEigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenSystem {
    /// Rebuild `V · diag(λ) · V*`; used by tests to bound the residual.
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut vd = v.clone();
        for j in 0..n {
            for i in 0..n {
                let scaled = vd.get(i, j) * self.eigenvalues[j];
                vd.set(i, j, scaled);
            }
        }
        vd.matmul(&v.adjoint())
    }
}

const MAX_JACOBI_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// `a` must be square with `max |a - a*| <= tol_herm`; the symmetrized
/// `(a + a*)/2` is what actually gets diagonalized, so tiny asymmetries
/// within the tolerance never leak into the output.
pub fn hermitian_eig(a: &ComplexMatrix, tol_herm: f64) -> Result<HermitianEigenSystem> {
    let n = a.square_dim()?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = a.hermitian_deviation()?;
    if dev > tol_herm {
        return Err(Error::NotHermitian { deviation: dev });
    }

    // Work on the Hermitian part; force the diagonal real.
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(a.get(i, i).re, 0.0)
        } else {
            (a.get(i, j) + a.get(j, i).conj()) * 0.5
        }
    });
    let mut v = ComplexMatrix::identity(n);

    if n > 1 {
        let scale = m.frobenius().max(f64::MIN_POSITIVE);
        let target = scale * 1e-14;
        let mut converged = false;
        for _ in 0..MAX_JACOBI_SWEEPS {
            if off_diagonal_norm(&m) <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    jacobi_rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if !converged {
            let off = off_diagonal_norm(&m);
            // quadratic convergence makes this unreachable in practice
            if off > scale * 1e-10 {
                return Err(Error::EigenFailed { off_diagonal: off });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        // phase fix: rotate the column so its largest component is real > 0
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for i in 0..n {
            let mag = v.get(i, src).norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = v.get(best, src);
        let phase = if best_mag > 0.0 {
            pivot.conj() / best_mag
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            eigenvectors.set(i, dst, v.get(i, src) * phase);
        }
    }

    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += 2.0 * m.get(i, j).norm_sqr();
        }
    }
    sum.sqrt()
}

/// One complex Jacobi rotation annihilating the `(p, q)` entry.
///
/// With `a = m[p][p]`, `b = m[q][q]` (real) and `m[p][q] = r·e^{iφ}`, the
/// unitary acting on the `(p, q)` plane is
/// `U = [[c, s·e^{iφ}], [-s·e^{-iφ}, c]]` where `t = s/c` is the
/// smaller-magnitude root of `t² - 2θt - 1 = 0`, `θ = (a - b) / (2r)`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = m.rows();
    let apq = m.get(p, q);
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m.get(p, p).re;
    let aqq = m.get(q, q).re;

    // entry negligible against the diagonal: zero it and move on
    let small = 100.0 * r;
    if app.abs() + small == app.abs() && aqq.abs() + small == aqq.abs() {
        m.set(p, q, Complex64::new(0.0, 0.0));
        m.set(q, p, Complex64::new(0.0, 0.0));
        return;
    }

    let phase = apq / r;
    let theta = (app - aqq) / (2.0 * r);
    // reciprocal form of the smaller root of t² - 2θt - 1 = 0; the
    // subtractive form θ - √(θ²+1) cancels catastrophically for large θ
    let t = {
        let root = (theta * theta + 1.0).sqrt();
        if theta >= 0.0 {
            -1.0 / (theta + root)
        } else {
            1.0 / (root - theta)
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let u_pq = phase * s; //  U[p][q] = s·e^{iφ}
    let u_qp = -(phase.conj()) * s; //  U[q][p] = -s·e^{-iφ}

    // columns p and q of both m and v transform by U on the right
    for i in 0..n {
        let mip = m.get(i, p);
        let miq = m.get(i, q);
        m.set(i, p, mip * c + miq * u_qp);
        m.set(i, q, mip * u_pq + miq * c);

        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, vip * c + viq * u_qp);
        v.set(i, q, vip * u_pq + viq * c);
    }
    // rows p and q of m transform by U* on the left; Hermitian symmetry
    // makes them the conjugates of the freshly updated columns
    for j in 0..n {
        m.set(p, j, m.get(j, p).conj());
        m.set(q, j, m.get(j, q).conj());
    }
    let new_pp = app * c * c - 2.0 * r * s * c + aqq * s * s;
    let new_qq = app * s * s + 2.0 * r * s * c + aqq * c * c;
    m.set(p, p, Complex64::new(new_pp, 0.0));
    m.set(q, q, Complex64::new(new_qq, 0.0));
    m.set(p, q, Complex64::new(0.0, 0.0));
    m.set(q, p, Complex64::new(0.0, 0.0));
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Random Hermitian matrix `(G + G*)/2` with Gaussian `G`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = random_gaussian(rng, dim, dim);
    g.add(&g.adjoint()).expect("square").scale(0.5)
}

/// Haar-distributed-enough random unitary: two passes of modified
/// Gram-Schmidt over a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = random_gaussian(rng, dim, dim);
    orthonormalize_columns(&g).expect("Gaussian matrix has full rank almost surely")
}

/// Orthonormalize the columns of a tall matrix (rows >= cols) by two rounds
/// of modified Gram-Schmidt. Fails only if a column is (numerically) linearly
/// dependent on its predecessors.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = m.rows();
    let cols = m.cols();
    if rows < cols {
        return Err(Error::DimMismatch {
            context: "orthonormalize_columns: matrix must be tall",
            left: rows,
            right: cols,
        });
    }
    let mut col: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m.get(i, j)).collect())
        .collect();
    for j in 0..cols {
        let (done, rest) = col.split_at_mut(j);
        let current = &mut rest[0];
        for _pass in 0..2 {
            for earlier in done.iter() {
                let proj: Complex64 = earlier
                    .iter()
                    .zip(current.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (c, e) in current.iter_mut().zip(earlier) {
                    *c -= *e * proj;
                }
            }
        }
        let norm: f64 = current.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::DimMismatch {
                context: "orthonormalize_columns: rank deficient input",
                left: j,
                right: cols,
            });
        }
        for c in current.iter_mut() {
            *c /= norm;
        }
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| col[j][i]))
}
