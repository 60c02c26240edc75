//! Dense linear-algebra helpers shared by every experiment.
//!
//! Everything here is built on `nalgebra` dense matrices. The routines that
//! `nalgebra` does not ship (matrix exponential/logarithm, tridiagonal
//! eigenpairs, circulant Fourier multipliers, pseudospectral inverse
//! iteration) live in the submodules.

mod expm;
mod fourier;
mod logm;
mod sigma;
mod svd;
mod tridiag;

pub use expm::expm;
pub use fourier::{circulant_from_symbol, fourier_frequencies, symbol_circulant_real};
pub use logm::{logm, sqrtm, LogmError};
pub use sigma::{sigma_min_dense, SchurSigma};
pub use svd::{singular_values, svd, Svd};
pub use tridiag::{SymTridiagonal, TridiagError};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type Vector = DVector<f64>;

/// Standard symplectic structure `[[0, -I], [I, 0]]` in `m x m` blocks.
pub fn standard_symplectic(m: usize) -> Mat {
    let n = 2 * m;
    let mut j = Mat::zeros(n, n);
    for i in 0..m {
        j[(i, m + i)] = -1.0;
        j[(m + i, i)] = 1.0;
    }
    j
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Symmetric part `(M + M^T) / 2`.
pub fn sym_part(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[Mat]) -> Mat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// `|| T^T J T - J ||_max`.
pub fn symplectic_residual(t: &Mat) -> f64 {
    let j = standard_symplectic(t.nrows() / 2);
    max_abs(&(t.transpose() * &j * t - &j))
}

/// `|| J B + B^T J ||_max`.
pub fn hamiltonian_residual(b: &Mat) -> f64 {
    let j = standard_symplectic(b.nrows() / 2);
    max_abs(&(&j * b + b.transpose() * &j))
}

/// Eigenvalues of a real square matrix from its real Schur form.
///
/// The 2x2 diagonal blocks are solved here with a complex square root:
/// nalgebra's own block formula returns NaN imaginary parts when a block
/// carries a nearly defective real pair.
pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    let n = m.nrows();
    let (_, t) = m.clone().schur().unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let sub = if i + 1 < n { t[(i + 1, i)] } else { 0.0 };
        if sub == 0.0 || i + 1 == n {
            out.push(Complex64::new(t[(i, i)], 0.0));
            i += 1;
        } else {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], sub, t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = Complex64::new(0.25 * (a - d) * (a - d) + b * c, 0.0).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            i += 2;
        }
    }
    out
}

/// Eigenvalues and eigenvectors of a real symmetric matrix, ascending.
pub fn sym_eigen_sorted(m: &Mat) -> (Vector, Mat) {
    let eig = nalgebra::SymmetricEigen::new(sym_part(m));
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Mat::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_sym_eigenvalue(m: &Mat) -> f64 {
    nalgebra::SymmetricEigen::new(sym_part(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Numerical rank from singular values, counting those above `threshold`.
pub fn rank_with_threshold(singular_values: &[f64], threshold: f64) -> usize {
    singular_values.iter().filter(|&&s| s > threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_symplectic_squares_to_minus_identity() {
        for m in 1..=4 {
            let j = standard_symplectic(m);
            let jj = &j * &j;
            assert!(max_abs(&(jj + Mat::identity(2 * m, 2 * m))) == 0.0);
        }
        let j1 = standard_symplectic(1);
        assert_eq!(j1, Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = Mat::from_element(1, 1, 2.0);
        let b = Mat::identity(2, 2) * 3.0;
        let d = block_diag(&[a, b]);
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(2, 2)], 3.0);
        assert_eq!(d[(0, 2)], 0.0);
    }
}
