use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TridiagError {
    #[error("eigenvalue index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("inverse iteration did not converge for eigenvalue {0}")]
    NoConvergence(f64),
}

/// Real symmetric tridiagonal matrix. Eigenvalues by Sturm-sequence
/// bisection, eigenvectors by inverse iteration.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// LU factors of a general tridiagonal matrix with partial pivoting.
struct TridiagLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn factor(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>, tiny: f64) -> Self {
        let n = d.len();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for v in d.iter_mut() {
            if *v == 0.0 {
                *v = tiny;
            }
        }
        Self { d, du, du2, dl, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
                b[i + 1] -= self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
    }
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    fn norm_bound(&self) -> f64 {
        let n = self.order();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.order();
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_bound().max(1.0);
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, index: usize) -> Result<f64, TridiagError> {
        let n = self.order();
        if index >= n {
            return Err(TridiagError::IndexOutOfRange { index, order: n });
        }
        let bound = self.norm_bound();
        let (mut lo, mut hi) = (-bound - 1.0, bound + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * (lo.abs().max(hi.abs())) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Index of the eigenvalue closest to `target`.
    pub fn nearest_index(&self, target: f64) -> Result<usize, TridiagError> {
        let n = self.order();
        let below = self.count_below(target);
        let mut best = None::<(usize, f64)>;
        for idx in [below.wrapping_sub(1), below] {
            if idx < n {
                let v = self.eigenvalue(idx)?;
                let d = (v - target).abs();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((idx, d));
                }
            }
        }
        best.map(|(i, _)| i)
            .ok_or(TridiagError::IndexOutOfRange { index: 0, order: n })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Unit eigenvector for a computed eigenvalue, orthogonalized against
    /// `against` (vectors of nearby eigenvalues).
    pub fn eigenvector(&self, lambda: f64, against: &[Vec<f64>]) -> Result<Vec<f64>, TridiagError> {
        let n = self.order();
        let scale = self.norm_bound().max(1.0);
        let shift = lambda + 1e-13 * scale * if lambda >= 0.0 { 1.0 } else { -1.0 };
        let lu = TridiagLu::factor(
            self.off.clone(),
            self.diag.iter().map(|d| d - shift).collect(),
            self.off.clone(),
            f64::EPSILON * scale,
        );
        // deterministic, generic starting vector
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin())
            .collect();
        for _ in 0..8 {
            for w in against {
                let p: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= p * b);
            }
            lu.solve(&mut v);
            let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(TridiagError::NoConvergence(lambda));
            }
            v.iter_mut().for_each(|a| *a /= nrm);
            let av = self.apply(&v);
            let res = av
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if res <= 1e-12 * scale {
                break;
            }
        }
        for w in against {
            let p: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(w).for_each(|(a, b)| *a -= p * b);
        }
        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= nrm);
        // sign convention: largest component positive
        let imax = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        Ok(v)
    }

    /// The `count` smallest eigenpairs, ascending.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>, TridiagError> {
        let scale = self.norm_bound().max(1.0);
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
        for k in 0..count {
            let lam = self.eigenvalue(k)?;
            let cluster: Vec<Vec<f64>> = out
                .iter()
                .filter(|(l, _)| (l - lam).abs() <= 1e-3 * scale)
                .map(|(_, v)| v.clone())
                .collect();
            let v = self.eigenvector(lam, &cluster)?;
            out.push((lam, v));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in 0..n {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((t.eigenvalue(k).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_residual_free() {
        let t = SymTridiagonal::new(
            (0..40).map(|i| (i as f64 * 0.3).sin() * 3.0).collect(),
            (0..39).map(|i| 1.0 + 0.1 * (i as f64).cos()).collect(),
        );
        let pairs = t.lowest_eigenpairs(10).unwrap();
        for (i, (l, v)) in pairs.iter().enumerate() {
            let av = t.apply(v);
            let r: f64 = av.iter().zip(v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-11, "residual {r}");
            for (_, w) in &pairs[..i] {
                let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                assert!(d.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_decoupled_blocks() {
        // two identical decoupled blocks give exactly doubled eigenvalues
        let mut diag = vec![2.0; 10];
        diag.extend(vec![2.0; 10]);
        let mut off = vec![-1.0; 9];
        off.push(0.0);
        off.extend(vec![-1.0; 9]);
        let t = SymTridiagonal::new(diag, off);
        let pairs = t.lowest_eigenpairs(2).unwrap();
        assert!((pairs[0].0 - pairs[1].0).abs() < 1e-13);
        let d: f64 = pairs[0].1.iter().zip(&pairs[1].1).map(|(a, b)| a * b).sum();
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn nearest_index_picks_closest() {
        let t = laplacian(20);
        let v5 = t.eigenvalue(5).unwrap();
        assert_eq!(t.nearest_index(v5 + 1e-6).unwrap(), 5);
    }
}
