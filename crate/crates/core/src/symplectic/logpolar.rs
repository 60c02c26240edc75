use super::{check_symplectic, HamiltonMatrix, SymplecticError, SymplecticTransform, Tolerances};
use crate::linalg::{eigenvalues, logm, max_abs, standard_symplectic, sym_part, LogmError, Mat};
use serde::{Deserialize, Serialize};

/// Principal real logarithm of a symplectic map, projected onto the Hamilton
/// matrices. Eigenvalues on the closed negative real axis are rejected.
pub fn symplectic_log(s: &Mat, tol: &Tolerances) -> Result<HamiltonMatrix, SymplecticError> {
    check_symplectic(s, tol.symplectic_tol)?;
    for z in eigenvalues(s) {
        if z.re <= 0.0 && z.im.abs() <= tol.unit_tol * z.norm().max(f64::MIN_POSITIVE) {
            return Err(SymplecticError::NegativeRealEigenvalue(z.re));
        }
    }
    let l = logm(s).map_err(|e| match e {
        LogmError::NegativeRealEigenvalue(v) => SymplecticError::NegativeRealEigenvalue(v),
        LogmError::Singular => SymplecticError::NegativeRealEigenvalue(0.0),
        LogmError::NoConvergence => SymplecticError::NoConvergence("matrix logarithm".into()),
    })?;
    let j = standard_symplectic(s.nrows() / 2);
    let b = -(&j * sym_part(&(&j * l)));
    Ok(HamiltonMatrix { dim: s.nrows(), entries: b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarDecomposition {
    /// orthogonal symplectic factor
    pub q_orth: SymplecticTransform,
    /// symmetric positive definite symplectic factor, `K = Q P`
    pub p_pos: SymplecticTransform,
}

/// `K = Q P` with `Q` orthogonal and `P` symmetric positive definite; both
/// are symplectic when `K` is.
pub fn symplectic_polar(k: &Mat, tol: &Tolerances) -> Result<PolarDecomposition, SymplecticError> {
    check_symplectic(k, tol.symplectic_tol)?;
    let n = k.nrows();
    let mut x = k.clone();
    let mut converged = false;
    for _ in 0..100 {
        let inv_t = x
            .clone()
            .try_inverse()
            .ok_or_else(|| SymplecticError::NoConvergence("singular polar iterate".into()))?
            .transpose();
        let g = (inv_t.norm() / x.norm()).sqrt();
        let next = (&x * g + inv_t / g) * 0.5;
        let change = max_abs(&(&next - &x));
        x = next;
        if change <= 1e-15 * n as f64 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SymplecticError::NoConvergence("polar Newton iteration".into()));
    }
    let p = sym_part(&(x.transpose() * k));
    Ok(PolarDecomposition {
        q_orth: SymplecticTransform { dim: n, entries: x },
        p_pos: SymplecticTransform { dim: n, entries: p },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, hamiltonian_residual, symplectic_residual, Vector};
    use crate::symplectic::random::{random_hamiltonian, random_symplectic};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Polar factors from the SVD `K = U Σ V^T`: `Q = U V^T`, `P = V Σ V^T`.
    fn svd_polar(k: &Mat) -> (Mat, Mat) {
        let f = crate::linalg::svd(k);
        let s = Mat::from_diagonal(&f.singular_values);
        (&f.u * f.v.transpose(), &f.v * s * f.v.transpose())
    }

    #[test]
    fn hyperbolic_log() {
        let s = Mat::from_diagonal(&Vector::from_vec(vec![E, 1.0 / E]));
        let b = symplectic_log(&s, &tol()).unwrap();
        assert!(max_abs(&(b.entries - Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0])))) < 1e-13);
    }

    #[test]
    fn negative_real_map_rejected() {
        let s = Mat::from_diagonal(&Vector::from_vec(vec![-E * E, -1.0 / (E * E)]));
        assert!(matches!(symplectic_log(&s, &tol()), Err(SymplecticError::NegativeRealEigenvalue(_))));
    }

    #[test]
    fn principal_branch_of_rotation() {
        let th = 2.5_f64;
        let s = Mat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let b = symplectic_log(&s, &tol()).unwrap();
        let ev = eigenvalues(&b.entries);
        assert!(ev.iter().all(|z| z.im.abs() < std::f64::consts::PI));
        assert!(max_abs(&(expm(&b.entries) - &s)) < 1e-12);
    }

    #[test]
    fn polar_trivial_cases() {
        let k = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 0.5]));
        let pd = symplectic_polar(&k, &tol()).unwrap();
        assert!(max_abs(&(&pd.q_orth.entries - Mat::identity(2, 2))) < 1e-14);
        assert!(max_abs(&(&pd.p_pos.entries - &k)) < 1e-14);
        let th = 0.9_f64;
        let r = Mat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let pd = symplectic_polar(&r, &tol()).unwrap();
        assert!(max_abs(&(&pd.q_orth.entries - &r)) < 1e-14);
        assert!(max_abs(&(&pd.p_pos.entries - Mat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn polar_rejects_non_symplectic() {
        let k = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 2.0]));
        assert!(matches!(symplectic_polar(&k, &tol()), Err(SymplecticError::NotSymplectic(_))));
    }

    #[test]
    fn polar_matches_svd_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let k = expm(&random_hamiltonian(&mut rng, 2, 0.6)) * expm(&random_hamiltonian(&mut rng, 2, 0.6));
            let pd = symplectic_polar(&k, &tol()).unwrap();
            let (q, p) = (&pd.q_orth.entries, &pd.p_pos.entries);
            let (q_ref, p_ref) = svd_polar(&k);
            assert!(max_abs(&(q - q_ref)) <= 1e-9);
            assert!(max_abs(&(p - &p_ref)) <= 1e-9 * max_abs(&p_ref).max(1.0));
            assert!(max_abs(&(q * p - &k)) <= 1e-9 * max_abs(&k));
            assert!(max_abs(&(q.transpose() * q - Mat::identity(4, 4))) <= 1e-9);
            assert!(symplectic_residual(q) <= 1e-9);
            assert!(symplectic_residual(p) <= 1e-9 * max_abs(p).powi(2).max(1.0));
            assert!(p.clone().symmetric_eigenvalues().min() > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn log_exp_round_trip(seed in any::<u64>(), m in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_symplectic(&mut rng, m, 0.5);
            let b = symplectic_log(&s, &tol()).unwrap();
            prop_assert!(hamiltonian_residual(&b.entries) <= 1e-8);
            prop_assert!(max_abs(&(expm(&b.entries) - &s)) <= 1e-8 * max_abs(&s).max(1.0));
        }
    }
}
