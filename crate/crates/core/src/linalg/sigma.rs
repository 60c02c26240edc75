use super::CMat;
use nalgebra::DVector;
use num_complex::Complex64;

type CVec = DVector<Complex64>;

/// Smallest singular value by a dense SVD.
pub fn sigma_min_dense(m: &CMat) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator by
/// Lanczos with full reorthogonalization.
fn lanczos_max<F: FnMut(&CVec) -> CVec>(n: usize, mut apply: F, max_steps: usize) -> f64 {
    let mut basis: Vec<CVec> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut v = CVec::from_fn(n, |i, _| {
        let t = i as f64;
        Complex64::new(1.0 + 0.3 * (1.7 * t).sin(), 0.2 * (0.9 * t).cos())
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut last = 0.0;
    let steps = max_steps.min(n);
    for step in 0..steps {
        let mut w = apply(&v);
        let a = v.dotc(&w).re;
        alpha.push(a);
        basis.push(v.clone());
        for _ in 0..2 {
            for b in &basis {
                let p = b.dotc(&w);
                w -= b * p;
            }
        }
        let bnorm = w.norm();
        let tri_max = {
            let k = alpha.len();
            let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alpha[i];
                if i + 1 < k {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            nalgebra::SymmetricEigen::new(t)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        if step > 2 && (tri_max - last).abs() <= 1e-13 * tri_max.abs() {
            return tri_max;
        }
        last = tri_max;
        if bnorm <= 1e-14 * tri_max.abs().max(1e-300) {
            return tri_max;
        }
        beta.push(bnorm);
        v = w / Complex64::new(bnorm, 0.0);
    }
    last
}

/// Complex Schur factorization `A = U R U*` reused across shifts for
/// smallest-singular-value scans of `A - w I`.
pub struct SchurSigma {
    u: CMat,
    r: CMat,
}

impl SchurSigma {
    pub fn new(a: &CMat) -> Self {
        let schur = nalgebra::linalg::Schur::new(a.clone());
        let (u, r) = schur.unpack();
        Self { u, r }
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    fn solve_upper(&self, w: Complex64, b: &CVec) -> CVec {
        let n = self.dim();
        let mut x = b.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.r[(i, j)] * x[j];
            }
            x[i] = s / (self.r[(i, i)] - w);
        }
        x
    }

    fn solve_upper_adjoint(&self, w: Complex64, b: &CVec) -> CVec {
        // (R - w)^* is lower triangular
        let n = self.dim();
        let mut x = b.clone();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.r[(j, i)].conj() * x[j];
            }
            x[i] = s / (self.r[(i, i)] - w).conj();
        }
        x
    }

    /// `sigma_min(A - w I)`.
    pub fn sigma_min(&self, w: Complex64) -> f64 {
        let n = self.dim();
        let diag_min = (0..n)
            .map(|i| (self.r[(i, i)] - w).norm())
            .fold(f64::INFINITY, f64::min);
        if diag_min == 0.0 {
            return 0.0;
        }
        let top = lanczos_max(
            n,
            |x| {
                let y = self.solve_upper(w, x);
                self.solve_upper_adjoint(w, &y)
            },
            60,
        );
        1.0 / top.sqrt()
    }

    /// `|| (A - w I)^{-1} D ||` for a diagonal (multiplication) operator `D`.
    pub fn inverse_times_diag_norm(&self, w: Complex64, d: &[f64]) -> f64 {
        let n = self.dim();
        let ustar = self.u.adjoint();
        let top = lanczos_max(
            n,
            |x| {
                let dx = CVec::from_fn(n, |i, _| x[i] * d[i]);
                let y = &ustar * dx;
                let z = self.solve_upper(w, &y);
                let z2 = self.solve_upper_adjoint(w, &z);
                let back = &self.u * z2;
                CVec::from_fn(n, |i, _| back[i] * d[i])
            },
            60,
        );
        top.max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| {
            let (a, b) = (i as f64, j as f64);
            Complex64::new((0.7 * a + 1.3 * b).sin(), 0.3 * (a - 2.0 * b).cos())
                + if i == j { Complex64::new(0.5 * a, -0.2) } else { Complex64::new(0.0, 0.0) }
        })
    }

    #[test]
    fn schur_sigma_matches_dense_svd() {
        let a = test_matrix(24);
        let s = SchurSigma::new(&a);
        for w in [Complex64::new(0.3, 0.1), Complex64::new(-1.0, 0.0), Complex64::new(4.0, -0.5)] {
            let shifted = &a - CMat::identity(24, 24) * w;
            let dense = sigma_min_dense(&shifted);
            let fast = s.sigma_min(w);
            assert!((dense - fast).abs() <= 1e-9 * dense.max(1e-12), "{dense} vs {fast}");
        }
    }

    #[test]
    fn cutoff_norm_matches_dense() {
        let n = 20;
        let a = test_matrix(n);
        let s = SchurSigma::new(&a);
        let d: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.0 } else { 1.0 }).collect();
        let w = Complex64::new(0.2, 0.05);
        let inv = (&a - CMat::identity(n, n) * w).try_inverse().unwrap();
        let dm = CMat::from_diagonal(&CVec::from_fn(n, |i, _| Complex64::new(d[i], 0.0)));
        let dense = (inv * dm).singular_values().max();
        let fast = s.inverse_times_diag_norm(w, &d);
        assert!((dense - fast).abs() <= 1e-9 * dense);
    }
}
