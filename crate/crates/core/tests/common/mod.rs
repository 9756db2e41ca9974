//! Shared brute-force oracles and fixtures for the integration tests.
//!
//! Every oracle here is a definition-level re-computation, independent of
//! the library's production path for the same quantity.

#![allow(dead_code)]

use num_complex::Complex64;
use qmaj::config::Config;
use qmaj::linalg::ComplexMatrix;
use qmaj::measurement::Povm;
use qmaj::multiparty::{MultipartyState, TensorSpace};
use qmaj::state::DensityMatrix;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Entrywise triple-loop matrix product.
pub fn matmul_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.cols(), b.rows());
    let mut out = ComplexMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = c(0.0, 0.0);
            for k in 0..a.cols() {
                acc += a.get(i, k) * b.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// Adjoint as two explicit steps: transpose, then conjugate.
pub fn adjoint_oracle(a: &ComplexMatrix) -> ComplexMatrix {
    let mut transposed = ComplexMatrix::zeros(a.cols(), a.rows());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            transposed.set(j, i, a.get(i, j));
        }
    }
    let mut out = ComplexMatrix::zeros(transposed.rows(), transposed.cols());
    for i in 0..transposed.rows() {
        for j in 0..transposed.cols() {
            out.set(i, j, transposed.get(i, j).conj());
        }
    }
    out
}

/// Kronecker product straight from the index definition
/// `out[i·p + k, j·q + l] = a[i,j] · b[k,l]`.
pub fn kron_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out.set(i * b.rows() + k, j * b.cols() + l, a.get(i, j) * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Partial trace by brute multi-index contraction: decode every row/column
/// pair into mixed-radix digits and accumulate the entries whose non-kept
/// digits coincide.
pub fn partial_trace_oracle(m: &ComplexMatrix, dims: &[usize], keep: usize) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    assert_eq!(m.rows(), total);
    let d = dims[keep];
    let decode = |mut index: usize| -> Vec<usize> {
        let mut digits = vec![0; dims.len()];
        for (pos, &dim) in dims.iter().enumerate().rev() {
            digits[pos] = index % dim;
            index /= dim;
        }
        digits
    };
    let mut out = ComplexMatrix::zeros(d, d);
    for row in 0..total {
        for col in 0..total {
            let rd = decode(row);
            let cd = decode(col);
            let matches = (0..dims.len()).all(|j| j == keep || rd[j] == cd[j]);
            if matches {
                let prev = out.get(rd[keep], cd[keep]);
                out.set(rd[keep], cd[keep], prev + m.get(row, col));
            }
        }
    }
    out
}

/// Characteristic-polynomial eigenvalue oracle for Hermitian matrices:
/// coefficients by the Faddeev–LeVerrier recurrence, roots by bisection
/// bracketed between the recursively computed roots of the derivative
/// (valid because Hermitian characteristic polynomials are real-rooted).
/// Returns eigenvalues sorted non-increasing; panics if root isolation
/// loses a root (degenerate spectra — feed it generic matrices).
pub fn charpoly_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    // monic coefficients: p(x) = x^n + coeffs[0] x^{n-1} + … + coeffs[n-1]
    let mut coeffs = vec![0.0; n];
    let mut m = ComplexMatrix::identity(n);
    for k in 1..=n {
        m = matmul_oracle(a, &m);
        let mut tr = c(0.0, 0.0);
        for i in 0..n {
            tr += m.get(i, i);
        }
        let ck = -tr.re / k as f64;
        coeffs[k - 1] = ck;
        for i in 0..n {
            let v = m.get(i, i);
            m.set(i, i, v + c(ck, 0.0));
        }
    }
    let mut poly = Vec::with_capacity(n + 1);
    poly.push(1.0);
    poly.extend_from_slice(&coeffs);
    let mut roots = real_roots(&poly);
    assert_eq!(roots.len(), n, "root isolation lost a root");
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    roots
}

fn eval_poly(poly: &[f64], x: f64) -> f64 {
    poly.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(poly: &[f64]) -> Vec<f64> {
    let degree = poly.len() - 1;
    poly[..degree]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (degree - i) as f64)
        .collect()
}

/// All real roots of a real-rooted monic-ish polynomial, by recursive
/// derivative bracketing plus bisection.
fn real_roots(poly: &[f64]) -> Vec<f64> {
    let degree = poly.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    if degree == 1 {
        return vec![-poly[1] / poly[0]];
    }
    let bound = 1.0 + poly[1..].iter().map(|c| (c / poly[0]).abs()).fold(0.0, f64::max);
    let mut brackets = vec![-bound];
    brackets.extend(real_roots(&derivative(poly)));
    brackets.push(bound);
    brackets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut roots = Vec::new();
    for pair in brackets.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let (flo, fhi) = (eval_poly(poly, lo), eval_poly(poly, hi));
        if flo == 0.0 {
            // exact hit on a bracket; bisection below would miss it
            if roots.last().is_none_or(|&r| (r - lo).abs() > 1e-12) {
                roots.push(lo);
            }
            continue;
        }
        if flo * fhi > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fmid = eval_poly(poly, mid);
            if fmid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if flo * fmid < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// The Bell pair `(|00⟩ + |11⟩)/√2` on 2 ⊗ 2.
pub fn bell_state(cfg: &Config) -> MultipartyState {
    let space = TensorSpace::new(vec![2, 2], cfg).unwrap();
    let amps = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
    MultipartyState::new(space, DensityMatrix::pure_state(&amps, cfg).unwrap()).unwrap()
}

/// Projective measurement onto the computational basis of `dim`.
pub fn computational_povm(dim: usize, cfg: &Config) -> Povm {
    let ops = (0..dim).map(|i| ComplexMatrix::matrix_unit(dim, i, i)).collect();
    Povm::new(ops, cfg).unwrap().0
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(vec![
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
    ])
    .unwrap()
}
