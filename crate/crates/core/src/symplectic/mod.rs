//! Floating-point symplectic linear algebra on `R^{2m}` with
//! `J = [[0, -I], [I, 0]]`, `ω̃(u, v) = u^T J v`, quadratic forms
//! `q(ρ) = ½ <ρ, Qρ>` and Hamilton matrices `B = -J Q`.

mod birkhoff;
mod classify;
mod logpolar;
pub mod random;
mod subspaces;
mod williamson;

pub use birkhoff::{assemble_a, birkhoff_normal_form, default_jordan_scale, BirkhoffNormalForm, ChainBlock};
pub use classify::{classify, ClassifyMode, EigenGroup, SpectrumClassification};
pub use logpolar::{symplectic_log, symplectic_polar, PolarDecomposition};
pub use subspaces::{stable_unstable_subspaces, InvariantSubspaces};
pub use williamson::{escape_rate_form, williamson, EscapeRateReport, WilliamsonDecomposition};

use crate::linalg::{hamiltonian_residual, max_abs, standard_symplectic, symplectic_residual, Mat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coefficient matrix is not symmetric (residual {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not Hamiltonian: |JB + B^T J| = {0:e}")]
    NotHamiltonian(f64),
    #[error("matrix is not symplectic: |S^T J S - J| = {0:e}")]
    NotSymplectic(f64),
    #[error("eigenvalues cannot be grouped into pairs/quadruples: {0}")]
    GroupingFailed(String),
    #[error("negative real eigenvalue {0}: no real Hamilton-matrix logarithm exists")]
    NegativeRealEigenvalue(f64),
    #[error("elliptic eigenvalue present: {0}")]
    EllipticEigenvaluePresent(String),
    #[error("Jordan chain detection ambiguous: {0}")]
    DefectiveBeyondTolerance(String),
    #[error("quadratic form is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

/// Tolerances of the symplectic routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// eigenvalue pairing and unit-circle/imaginary-axis detection, relative
    pub unit_tol: f64,
    /// singular-value threshold of the Jordan rank tests, relative
    pub rank_tol: f64,
    /// eigenvalue clustering radius for defective eigenvalues, relative
    pub cluster_tol: f64,
    /// symplecticity of inputs, relative to `max(1, |S|^2)`
    pub symplectic_tol: f64,
    /// Hamiltonian structure of inputs, relative to `max(1, |B|)`
    pub hamiltonian_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { unit_tol: 1e-7, rank_tol: 1e-8, cluster_tol: 1e-3, symplectic_tol: 1e-8, hamiltonian_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticHamiltonian {
    pub dim: usize,
    #[serde(with = "crate::io::rows")]
    pub coeff: Mat,
}

impl QuadraticHamiltonian {
    pub fn new(coeff: Mat) -> Result<Self, SymplecticError> {
        let n = coeff.nrows();
        if n == 0 || n % 2 != 0 || coeff.ncols() != n {
            return Err(SymplecticError::DimensionMismatch(format!(
                "coefficient array is {}x{}, need an even square size",
                n,
                coeff.ncols()
            )));
        }
        let asym = max_abs(&(&coeff - coeff.transpose()));
        if asym > 1e-12 * max_abs(&coeff).max(1.0) {
            return Err(SymplecticError::NotSymmetric(asym));
        }
        let coeff = crate::linalg::sym_part(&coeff);
        Ok(Self { dim: n, coeff })
    }

    pub fn half_dim(&self) -> usize {
        self.dim / 2
    }

    /// `q(ρ) = ½ <ρ, Qρ>`.
    pub fn eval(&self, rho: &[f64]) -> f64 {
        let v = crate::linalg::Vector::from_column_slice(rho);
        0.5 * v.dot(&(&self.coeff * &v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonMatrix {
    pub dim: usize,
    #[serde(with = "crate::io::rows")]
    pub entries: Mat,
}

impl HamiltonMatrix {
    pub fn new(entries: Mat) -> Result<Self, SymplecticError> {
        Self::with_tolerance(entries, Tolerances::default().hamiltonian_tol)
    }

    pub fn with_tolerance(entries: Mat, tol: f64) -> Result<Self, SymplecticError> {
        let n = entries.nrows();
        if n == 0 || n % 2 != 0 || entries.ncols() != n {
            return Err(SymplecticError::DimensionMismatch(format!("{}x{}", n, entries.ncols())));
        }
        let res = hamiltonian_residual(&entries);
        if res > tol * max_abs(&entries).max(1.0) {
            return Err(SymplecticError::NotHamiltonian(res));
        }
        Ok(Self { dim: n, entries })
    }

    /// The quadratic form `q` with `B = -J Q`, i.e. `Q = J B`.
    pub fn quadratic_form(&self) -> QuadraticHamiltonian {
        let j = standard_symplectic(self.dim / 2);
        let q = crate::linalg::sym_part(&(j * &self.entries));
        QuadraticHamiltonian { dim: self.dim, coeff: q }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticTransform {
    pub dim: usize,
    #[serde(with = "crate::io::rows")]
    pub entries: Mat,
}

impl SymplecticTransform {
    pub fn new(entries: Mat) -> Result<Self, SymplecticError> {
        check_symplectic(&entries, Tolerances::default().symplectic_tol)?;
        Ok(Self { dim: entries.nrows(), entries })
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.entries)
    }
}

/// Relative symplecticity test `|S^T J S - J| ≤ tol max(1, |S|^2)`.
pub fn check_symplectic(s: &Mat, tol: f64) -> Result<(), SymplecticError> {
    let n = s.nrows();
    if n == 0 || n % 2 != 0 || s.ncols() != n {
        return Err(SymplecticError::DimensionMismatch(format!("{}x{}", n, s.ncols())));
    }
    let res = symplectic_residual(s);
    let scale = max_abs(s).powi(2).max(1.0);
    if res > tol * scale {
        return Err(SymplecticError::NotSymplectic(res));
    }
    Ok(())
}

/// `J` for `m` degrees of freedom.
pub fn standard_symplectic_matrix(m: usize) -> Mat {
    standard_symplectic(m)
}

/// Hamilton matrix `B = -J Q` of `q`; `ρ' = Bρ` is the Hamilton vector field.
pub fn hamilton_matrix(q: &QuadraticHamiltonian) -> HamiltonMatrix {
    let j = standard_symplectic(q.half_dim());
    HamiltonMatrix { dim: q.dim, entries: -(j * &q.coeff) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;

    #[test]
    fn hyperbolic_model_form() {
        let lam = 0.7;
        let q = QuadraticHamiltonian::new(Mat::from_row_slice(2, 2, &[0.0, lam, lam, 0.0])).unwrap();
        let b = hamilton_matrix(&q);
        assert_eq!(b.entries, Mat::from_row_slice(2, 2, &[lam, 0.0, 0.0, -lam]));
        assert!((q.eval(&[2.0, 3.0]) - lam * 6.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_oscillator_form() {
        let q = QuadraticHamiltonian::new(Mat::identity(2, 2)).unwrap();
        let b = hamilton_matrix(&q);
        assert_eq!(b.entries, Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let ev = eigenvalues(&b.entries);
        assert!(ev.iter().all(|z| z.re.abs() < 1e-15 && (z.im.abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn complex_quadruple_form() {
        // B = blockdiag(Λ^T, -Λ) with Λ = [[1, -1], [1, 1]], Q = J B
        let lt = Mat::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let b = crate::linalg::block_diag(&[lt.clone(), -lt.transpose()]);
        let q = HamiltonMatrix::new(b.clone()).unwrap().quadratic_form();
        let back = hamilton_matrix(&QuadraticHamiltonian::new(q.coeff).unwrap());
        assert!(max_abs(&(back.entries - &b)) < 1e-15);
        let mut ev: Vec<_> = eigenvalues(&b).into_iter().map(|z| (z.re, z.im)).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
        for (a, e) in ev.iter().zip(expected) {
            assert!((a.0 - e.0).abs() < 1e-12 && (a.1 - e.1).abs() < 1e-12);
        }
    }

    #[test]
    fn hamilton_matrix_is_hamiltonian() {
        let q = QuadraticHamiltonian::new(Mat::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64))).unwrap();
        assert!(hamiltonian_residual(&hamilton_matrix(&q).entries) < 1e-15);
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(QuadraticHamiltonian::new(Mat::identity(3, 3)).is_err());
        assert!(matches!(
            QuadraticHamiltonian::new(Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])),
            Err(SymplecticError::NotSymmetric(_))
        ));
        assert!(HamiltonMatrix::new(Mat::identity(2, 2)).is_err());
    }

    #[test]
    fn json_shape() {
        let q = QuadraticHamiltonian::new(Mat::identity(2, 2)).unwrap();
        let text = serde_json::to_string(&q).unwrap();
        assert_eq!(text, r#"{"dim":2,"coeff":[[1.0,0.0],[0.0,1.0]]}"#);
    }
}
