use super::{HamiltonMatrix, SymplecticError};
use crate::linalg::{eigenvalues, max_abs, standard_symplectic, svd, Mat};
use serde::{Deserialize, Serialize};

/// Expanding (`Λ+`) and contracting (`Λ-`) invariant subspaces of a
/// loxodromic Hamilton matrix, as orthonormal column bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSubspaces {
    #[serde(with = "crate::io::rows")]
    pub unstable_basis: Mat,
    #[serde(with = "crate::io::rows")]
    pub stable_basis: Mat,
    /// `max |BU - U(U^T B U)|` over both bases
    pub invariance_residual: f64,
    /// `max |U^T J U|` over both bases
    pub lagrangian_residual: f64,
}

/// Matrix sign function by the scaled Newton iteration.
fn matrix_sign(b: &Mat) -> Result<Mat, SymplecticError> {
    let n = b.nrows();
    let mut x = b.clone();
    for _ in 0..100 {
        let inv = x
            .clone()
            .try_inverse()
            .ok_or_else(|| SymplecticError::EllipticEigenvaluePresent("singular iterate in sign iteration".into()))?;
        let det = x.determinant().abs();
        let c = if det.is_finite() && det > 0.0 { det.powf(-1.0 / n as f64) } else { 1.0 };
        let next = (&x * c + inv / c) * 0.5;
        let change = max_abs(&(&next - &x));
        x = next;
        if change <= 1e-14 * max_abs(&x).max(1.0) {
            return Ok(x);
        }
    }
    Err(SymplecticError::NoConvergence("matrix sign iteration".into()))
}

/// Orthonormal basis of the range of a rank-`k` projector.
fn range_basis(p: &Mat, k: usize) -> Mat {
    svd(p).u.columns(0, k).into_owned()
}

fn residuals(b: &Mat, u: &Mat, j: &Mat) -> (f64, f64) {
    let restricted = u.transpose() * b * u;
    (max_abs(&(b * u - u * restricted)), max_abs(&(u.transpose() * j * u)))
}

/// The invariant Lagrangian subspaces of `B` on which it expands/contracts.
pub fn stable_unstable_subspaces(b: &HamiltonMatrix) -> Result<InvariantSubspaces, SymplecticError> {
    let m = b.dim / 2;
    let bm = &b.entries;
    let eigs = eigenvalues(bm);
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if let Some(z) = eigs.iter().find(|z| z.re.abs() <= 1e-7 * scale) {
        return Err(SymplecticError::EllipticEigenvaluePresent(format!("eigenvalue {z} on the imaginary axis")));
    }
    let s = matrix_sign(bm)?;
    let id = Mat::identity(b.dim, b.dim);
    let unstable = range_basis(&((&id + &s) * 0.5), m);
    let stable = range_basis(&((&id - &s) * 0.5), m);
    let j = standard_symplectic(m);
    let (iu, lu) = residuals(bm, &unstable, &j);
    let (is, ls) = residuals(bm, &stable, &j);
    Ok(InvariantSubspaces {
        unstable_basis: unstable,
        stable_basis: stable,
        invariance_residual: iu.max(is),
        lagrangian_residual: lu.max(ls),
    })
}
