use super::{BirkhoffNormalForm, QuadraticHamiltonian, SymplecticError, SymplecticTransform};
use crate::linalg::{block_diag, max_abs, standard_symplectic, sym_part, CMat, Mat, Vector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `q(Tρ) = Σ_j (x_j² + ξ_j²) / r_j²` with `r_1 ≤ … ≤ r_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilliamsonDecomposition {
    pub radii: Vec<f64>,
    pub transform: SymplecticTransform,
    /// `max |T^T Q T - 2 diag(r^-2, r^-2)|`
    pub residual: f64,
}

impl WilliamsonDecomposition {
    /// `Σ_j (x_j² + ξ_j²) / r_j²`.
    pub fn diagonal_form(&self, rho: &[f64]) -> f64 {
        let m = self.radii.len();
        (0..m).map(|j| (rho[j] * rho[j] + rho[m + j] * rho[m + j]) / (self.radii[j] * self.radii[j])).sum()
    }
}

/// Symplectic diagonalization of a positive definite quadratic form.
pub fn williamson(q: &QuadraticHamiltonian) -> Result<WilliamsonDecomposition, SymplecticError> {
    let n = q.dim;
    let m = n / 2;
    let eig = q.coeff.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min <= 1e-12 * q.coeff.norm() {
        return Err(SymplecticError::NotPositiveDefinite(min));
    }
    let inv_sqrt = &eig.eigenvectors
        * Mat::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * eig.eigenvectors.transpose();
    let j = standard_symplectic(m);
    let mmat = &inv_sqrt * &j * &inv_sqrt;
    // iM is Hermitian; its spectrum is ±ω_j
    let im: CMat = mmat.map(|v| Complex64::new(0.0, v));
    let he = im.symmetric_eigen();
    let mut pos: Vec<usize> = (0..n).filter(|&i| he.eigenvalues[i] > 0.0).collect();
    if pos.len() != m {
        return Err(SymplecticError::NotPositiveDefinite(min));
    }
    pos.sort_by(|&a, &b| he.eigenvalues[a].total_cmp(&he.eigenvalues[b]));
    let mut w = Mat::zeros(n, n);
    let mut omega = Vec::with_capacity(m);
    for (jx, &i) in pos.iter().enumerate() {
        let u = he.eigenvectors.column(i);
        let mut k = 0;
        for r in 0..n {
            if u[r].norm() > u[k].norm() * (1.0 + 1e-12) {
                k = r;
            }
        }
        let phase = u[k].conj() / u[k].norm();
        for r in 0..n {
            let z = u[r] * phase * std::f64::consts::SQRT_2;
            w[(r, jx)] = z.re;
            w[(r, m + jx)] = z.im;
        }
        omega.push(he.eigenvalues[i]);
    }
    let scale = Vector::from_fn(n, |i, _| (1.0 / omega[i % m]).sqrt());
    let t = inv_sqrt * w * Mat::from_diagonal(&scale);
    let radii: Vec<f64> = omega.iter().map(|o| (2.0 * o).sqrt()).collect();
    let target = Mat::from_diagonal(&Vector::from_fn(n, |i, _| 2.0 / (radii[i % m] * radii[i % m])));
    let residual = max_abs(&(t.transpose() * &q.coeff * &t - target));
    Ok(WilliamsonDecomposition { radii, transform: SymplecticTransform { dim: n, entries: t }, residual })
}

/// Quadratic part of `H_q G` for the escape function
/// `G = ½(log(1 + |x|²) - log(1 + |ξ|²))` in normal-form coordinates, with
/// its Williamson certificate when positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeRateReport {
    pub sym_form: QuadraticHamiltonian,
    pub jordan_scale: f64,
    /// smallest eigenvalue of `blockdiag(sym A, sym A)`; the failure margin
    pub min_eigenvalue: f64,
    pub certificate: Option<WilliamsonDecomposition>,
}

impl EscapeRateReport {
    pub fn is_positive(&self) -> bool {
        self.certificate.is_some()
    }
}

/// `H_q G` at quadratic order equals `⟨x, (sym A) x⟩ + ⟨ξ, (sym A) ξ⟩`.
pub fn escape_rate_form(nf: &BirkhoffNormalForm) -> EscapeRateReport {
    let s = sym_part(&nf.block_matrix_a);
    let blocks = block_diag(&[s.clone(), s]);
    let min_eigenvalue = blocks.clone().symmetric_eigenvalues().min();
    let sym_form = QuadraticHamiltonian { dim: blocks.nrows(), coeff: blocks * 2.0 };
    let certificate = if min_eigenvalue > 0.0 { williamson(&sym_form).ok() } else { None };
    EscapeRateReport { sym_form, jordan_scale: nf.jordan_scale, min_eigenvalue, certificate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symplectic_residual;
    use crate::symplectic::random::{conjugated_normal_form, random_chains, random_spd, random_symplectic};
    use crate::symplectic::{birkhoff_normal_form, ChainBlock, HamiltonMatrix, Tolerances};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn form(coeff: Mat) -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(coeff).unwrap()
    }

    fn nf_for(chains: &[ChainBlock], eps: f64) -> BirkhoffNormalForm {
        let a = crate::symplectic::birkhoff::assemble_a(chains, eps);
        let b = block_diag(&[a.transpose(), -a]);
        birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), Some(eps), &Tolerances::default()).unwrap()
    }

    #[test]
    fn circle_form_is_identity() {
        let w = williamson(&form(Mat::identity(2, 2) * 2.0)).unwrap();
        assert!((w.radii[0] - 1.0).abs() < 1e-14);
        assert!(max_abs(&(&w.transform.entries - Mat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn anisotropic_form_by_sampling() {
        let (a, b) = (3.0_f64, 0.4_f64);
        let q = form(Mat::from_row_slice(2, 2, &[2.0 * a, 0.0, 0.0, 2.0 * b]));
        let w = williamson(&q).unwrap();
        assert!((w.radii[0] - (a * b).powf(-0.25)).abs() < 1e-12);
        let expected = Mat::from_row_slice(2, 2, &[(b / a).powf(0.25), 0.0, 0.0, (a / b).powf(0.25)]);
        assert!(max_abs(&(&w.transform.entries - expected)) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let rho = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let t = &w.transform.entries;
            let img = [t[(0, 0)] * rho[0] + t[(0, 1)] * rho[1], t[(1, 0)] * rho[0] + t[(1, 1)] * rho[1]];
            let lhs = q.eval(&img);
            let rhs = (a * b).sqrt() * (rho[0] * rho[0] + rho[1] * rho[1]);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn indefinite_rejected() {
        let q = form(Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(matches!(williamson(&q), Err(SymplecticError::NotPositiveDefinite(_))));
    }

    #[test]
    fn escape_rate_scalar_block() {
        let lam = 0.36;
        let rep = escape_rate_form(&nf_for(&[ChainBlock { lambda: Complex64::new(lam, 0.0), size: 1 }], 1.0));
        assert!(max_abs(&(&rep.sym_form.coeff - Mat::identity(2, 2) * (2.0 * lam))) < 1e-15);
        let cert = rep.certificate.unwrap();
        assert!((cert.radii[0] - lam.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn escape_rate_complex_block() {
        let rep = escape_rate_form(&nf_for(&[ChainBlock { lambda: Complex64::new(0.7, 1.3), size: 1 }], 1.0));
        assert!(max_abs(&(&rep.sym_form.coeff - Mat::identity(4, 4) * 1.4)) < 1e-15);
        assert!(rep.is_positive());
    }

    #[test]
    fn escape_rate_jordan_chain_needs_rescaling() {
        let chain = [ChainBlock { lambda: Complex64::new(0.1, 0.0), size: 2 }];
        let coarse = escape_rate_form(&nf_for(&chain, 1.0));
        assert!((coarse.min_eigenvalue - (0.1 - 0.5)).abs() < 1e-12);
        assert!(coarse.certificate.is_none());
        let fine = escape_rate_form(&nf_for(&chain, 0.05));
        assert!(fine.min_eigenvalue > 0.0);
        assert!(fine.is_positive());
    }

    #[test]
    fn random_spd_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let q = form(random_spd(&mut rng, 4, 0.2, 5.0));
            let w = williamson(&q).unwrap();
            assert!(symplectic_residual(&w.transform.entries) <= 1e-9);
            assert!(w.residual <= 1e-9);
            assert!(w.radii.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn radii_invariant_under_symplectic_conjugation(seed in any::<u64>(), m in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_spd(&mut rng, 2 * m, 0.3, 3.0);
            let t0 = random_symplectic(&mut rng, m, 0.4);
            let moved = sym_part(&(t0.transpose() * &q * &t0));
            let r1 = williamson(&form(q)).unwrap().radii;
            let r2 = williamson(&form(moved)).unwrap().radii;
            for (a, b) in r1.iter().zip(&r2) {
                prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{} vs {}", a, b);
            }
        }

        #[test]
        fn certificate_once_scale_small(seed in any::<u64>(), m in 1usize..=4, kmax in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chains = random_chains(&mut rng, m, kmax);
            let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.25);
            let min_re = chains.iter().map(|c| c.lambda.re).fold(f64::INFINITY, f64::min);
            let eps = rng.random_range(0.05..=1.0) * min_re / 2.0;
            let nf = birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), Some(eps.min(1.0)), &Tolerances::default()).unwrap();
            let rep = escape_rate_form(&nf);
            prop_assert!(rep.is_positive(), "min eigenvalue {}", rep.min_eigenvalue);
        }
    }
}
