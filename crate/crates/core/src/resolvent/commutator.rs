use super::{semiclassical_derivative, ResolventError};
use crate::linalg::{sym_eigen_sorted, symbol_circulant_real, CMat, Mat};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Rescaled model `P = λ h sym(X D_X)` on a periodic `X` grid, conjugated by
/// `e^{sG}` with `G = ½ log(1 + X^2) - ½ log(1 + (h̃ D_X)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSetup {
    pub h: f64,
    pub h_tilde: f64,
    pub lambda: f64,
    pub s: f64,
    pub n: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    /// `-Im <P_s u, u> / (h h̃ |u|^2)` per sample
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
}

/// Coherent state centred at `(x0, xi0)` with the `h̃`-scale width.
pub fn coherent_state(x: &[f64], h_tilde: f64, x0: f64, xi0: f64) -> Vec<Complex64> {
    x.iter()
        .map(|&xx| Complex64::from_polar((-(xx - x0).powi(2) / (2.0 * h_tilde)).exp(), xi0 * xx / h_tilde))
        .collect()
}

fn conjugated_operator(setup: &CommutatorSetup) -> (Vec<f64>, CMat) {
    let n = setup.n;
    let l = setup.half_width;
    let length = 2.0 * l;
    let dx = length / n as f64;
    let x: Vec<f64> = (0..n).map(|j| -l + j as f64 * dx).collect();
    // λ h sym(X D_X): the semiclassical derivative with h = 1 is D_X
    let d = semiclassical_derivative(n, length, 1.0);
    let p = CMat::from_fn(n, n, |i, j| d[(i, j)] * (x[i] + x[j]) * (0.5 * setup.lambda * setup.h));

    let mut g: Mat = symbol_circulant_real(n, length, |k| -0.5 * (1.0 + (setup.h_tilde * k).powi(2)).ln());
    for (j, &xx) in x.iter().enumerate() {
        g[(j, j)] += 0.5 * (1.0 + xx * xx).ln();
    }
    let (vals, vecs) = sym_eigen_sorted(&g);
    let exp_g = |sign: f64| {
        let scaled = Mat::from_fn(n, n, |i, j| vecs[(i, j)] * (sign * setup.s * vals[j]).exp());
        let m = scaled * vecs.transpose();
        m.map(|v| Complex64::new(v, 0.0))
    };
    (x, exp_g(-1.0) * p * exp_g(1.0))
}

/// `-Im <e^{-sG} P e^{sG} u, u> / (h h̃ |u|^2)` for each sample state.
pub fn positive_commutator_check(setup: &CommutatorSetup, centres: &[(f64, f64)]) -> Result<CommutatorReport, ResolventError> {
    if !(setup.h > 0.0 && setup.h_tilde > 0.0) {
        return Err(ResolventError::InvalidParameter("h and h_tilde must be positive".into()));
    }
    if setup.n < super::MIN_GRID {
        return Err(ResolventError::GridTooCoarse(format!("n = {}", setup.n)));
    }
    let (x, ps) = conjugated_operator(setup);
    let ratios: Vec<f64> = centres
        .iter()
        .map(|&(x0, xi0)| {
            let u = DVector::from_vec(coherent_state(&x, setup.h_tilde, x0, xi0));
            let pu = &ps * &u;
            let q = u.dotc(&pu);
            -q.im / (setup.h * setup.h_tilde * u.norm_squared())
        })
        .collect();
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CommutatorReport { ratios, min_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(h: f64, s: f64, n: usize) -> CommutatorSetup {
        CommutatorSetup { h, h_tilde: 0.1, lambda: 1.0, s, n, half_width: 6.0 }
    }

    const CENTRES: [(f64, f64); 3] = [(0.0, 0.0), (0.2, 0.0), (0.0, -0.2)];

    #[test]
    fn unconjugated_operator_is_self_adjoint() {
        let r = positive_commutator_check(&setup(0.01, 0.0, 128), &CENTRES).unwrap();
        for v in r.ratios {
            assert!((v * 0.01 * 0.1).abs() < 1e-10);
        }
    }

    #[test]
    fn small_conjugation_gives_positive_ratio() {
        let s = 0.05;
        let coarse = positive_commutator_check(&setup(0.01, s, 128), &CENTRES).unwrap();
        let fine = positive_commutator_check(&setup(0.01, s, 256), &CENTRES).unwrap();
        assert!(coarse.min_ratio > 0.0);
        // leading order: s λ <a_0> / h̃, and <a_0> ~ h̃ at the origin
        assert!((coarse.ratios[0] / s - 1.0).abs() < 0.3);
        for (a, b) in coarse.ratios.iter().zip(&fine.ratios) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn ratio_stable_under_h_halving() {
        let a = positive_commutator_check(&setup(0.02, 0.05, 128), &CENTRES).unwrap();
        let b = positive_commutator_check(&setup(0.01, 0.05, 128), &CENTRES).unwrap();
        assert!((a.min_ratio / b.min_ratio - 1.0).abs() < 0.3);
    }
}
