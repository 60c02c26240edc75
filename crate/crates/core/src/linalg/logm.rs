use super::{eigenvalues, Mat};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogmError {
    #[error("matrix has an eigenvalue on the closed negative real axis ({0})")]
    NegativeRealEigenvalue(f64),
    #[error("matrix is singular")]
    Singular,
    #[error("square-root iteration did not converge")]
    NoConvergence,
}

fn inverse(m: &Mat) -> Result<Mat, LogmError> {
    m.clone().try_inverse().ok_or(LogmError::Singular)
}

/// Principal square root by the scaled Denman–Beavers iteration.
pub fn sqrtm(a: &Mat) -> Result<Mat, LogmError> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::identity(n, n);
    for iter in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        // determinant scaling only in the early phase; it would spoil the
        // quadratic convergence near the fixed point
        let g = if iter < 6 {
            let d = (y.determinant() * z.determinant()).abs();
            if d.is_finite() && d > 0.0 {
                d.powf(-1.0 / (2.0 * n as f64))
            } else {
                1.0
            }
        } else {
            1.0
        };
        let y_next = (&y * g + &zi / g) * 0.5;
        let z_next = (&z * g + &yi / g) * 0.5;
        let delta = (&y_next - &y).norm() / y_next.norm().max(1e-300);
        y = y_next;
        z = z_next;
        if delta < 1e-15 * (n as f64) {
            return Ok(y);
        }
    }
    let check = &y * &y - a;
    if check.norm() <= 1e-10 * a.norm().max(1.0) {
        Ok(y)
    } else {
        Err(LogmError::NoConvergence)
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` by Golub–Welsch.
fn gauss_legendre_unit(m: usize) -> Vec<(f64, f64)> {
    let mut jac = Mat::zeros(m, m);
    for k in 1..m {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut out: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            ((x + 1.0) / 2.0, v0 * v0)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Rejects matrices with an eigenvalue on the closed negative real axis,
/// where no real principal logarithm exists.
pub fn logm(a: &Mat) -> Result<Mat, LogmError> {
    let n = a.nrows();
    let scale = a.norm().max(1.0);
    for z in eigenvalues(a) {
        if z.norm() <= 1e-14 * scale {
            return Err(LogmError::Singular);
        }
        if z.re < 0.0 && z.im.abs() <= 1e-10 * z.norm() {
            return Err(LogmError::NegativeRealEigenvalue(z.re));
        }
    }
    let id = Mat::identity(n, n);
    let mut r = a.clone();
    let mut k = 0;
    while (&r - &id).norm() > 0.05 {
        r = sqrtm(&r)?;
        k += 1;
        if k > 64 {
            return Err(LogmError::NoConvergence);
        }
    }
    let x = &r - &id;
    let mut acc = Mat::zeros(n, n);
    for (t, w) in gauss_legendre_unit(12) {
        let m = &id + &x * t;
        let sol = m.lu().solve(&x).ok_or(LogmError::Singular)?;
        acc += sol * w;
    }
    Ok(acc * 2f64.powi(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, max_abs};

    #[test]
    fn sqrt_of_spd() {
        let a = Mat::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s = sqrtm(&a).unwrap();
        assert!(max_abs(&(&s * &s - &a)) < 1e-13);
    }

    #[test]
    fn log_inverts_exp_for_nonnormal_input() {
        let b = Mat::from_row_slice(3, 3, &[0.5, 2.0, -1.0, 0.0, 0.5, 3.0, 0.2, 0.0, -1.5]);
        let l = logm(&expm(&b)).unwrap();
        assert!(max_abs(&(l - b)) < 1e-10);
    }

    #[test]
    fn log_rejects_negative_real() {
        let a = Mat::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -0.5]);
        assert!(matches!(logm(&a), Err(LogmError::NegativeRealEigenvalue(_))));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre_unit(6);
        let s: f64 = q.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-14);
    }
}
