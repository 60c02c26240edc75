use super::classify::{analyze, ClassifyMode, RepCluster, SpectrumClassification};
use super::subspaces::stable_unstable_subspaces;
use super::{HamiltonMatrix, SymplecticError, SymplecticTransform, Tolerances};
use crate::linalg::{block_diag, max_abs, svd, symplectic_residual, to_complex, CMat, Mat};
use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One Jordan chain of the normal form: `λ` with `Re λ > 0` (and `Im λ > 0`
/// for a complex chain) and its length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainBlock {
    pub lambda: Complex64,
    pub size: usize,
}

impl ChainBlock {
    pub fn is_complex(&self) -> bool {
        self.lambda.im != 0.0
    }

    /// Number of `A` rows/columns: `size` for real chains, `2 size` for
    /// complex ones.
    pub fn width(&self) -> usize {
        if self.is_complex() {
            2 * self.size
        } else {
            self.size
        }
    }

    /// Lower bidiagonal chain block: `λ` (or `Λ = [[α, -β], [β, α]]`) on the
    /// diagonal and `ε` (or `ε I`) below it.
    pub fn a_block(&self, eps: f64) -> Mat {
        let w = self.width();
        let mut a = Mat::zeros(w, w);
        if self.is_complex() {
            let (al, be) = (self.lambda.re, self.lambda.im);
            for l in 0..self.size {
                let o = 2 * l;
                a[(o, o)] = al;
                a[(o + 1, o + 1)] = al;
                a[(o, o + 1)] = -be;
                a[(o + 1, o)] = be;
                if l > 0 {
                    a[(o, o - 2)] = eps;
                    a[(o + 1, o - 1)] = eps;
                }
            }
        } else {
            for l in 0..self.size {
                a[(l, l)] = self.lambda.re;
                if l > 0 {
                    a[(l, l - 1)] = eps;
                }
            }
        }
        a
    }
}

/// Block-diagonal `A` of a list of chains.
pub fn assemble_a(blocks: &[ChainBlock], eps: f64) -> Mat {
    block_diag(&blocks.iter().map(|b| b.a_block(eps)).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffNormalForm {
    pub transform: SymplecticTransform,
    #[serde(with = "crate::io::rows")]
    pub block_matrix_a: Mat,
    pub chains: Vec<ChainBlock>,
    pub eigenvalues: SpectrumClassification,
    pub jordan_scale: f64,
    /// `max |T^{-1} B T - blockdiag(A^T, -A)|`
    pub residual: f64,
}

impl BirkhoffNormalForm {
    /// `blockdiag(A^T, -A)`.
    pub fn normal_matrix(&self) -> Mat {
        block_diag(&[self.block_matrix_a.transpose(), -self.block_matrix_a.clone()])
    }
}

/// `min(1, min_j Re λ_j / 2)`.
pub fn default_jordan_scale(spec: &SpectrumClassification) -> f64 {
    spec.groups.iter().map(|g| g.lambda().re / 2.0).fold(1.0, f64::min)
}

/// Right singular vectors spanning the `dim`-dimensional null space.
fn null_space<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, dim: usize) -> DMatrix<T> {
    let n = m.ncols();
    svd(m).v.columns(n - dim, dim).into_owned()
}

/// Orthonormal basis of `range(w)` (w may be empty).
fn orth<T: ComplexField<RealField = f64>>(w: &DMatrix<T>) -> DMatrix<T> {
    if w.ncols() == 0 {
        return w.clone();
    }
    let qr = w.clone().qr();
    qr.q().columns(0, w.ncols().min(w.nrows())).into_owned()
}

/// Jordan chains of the nilpotent restriction of `nmat` to its generalized
/// kernel; chain lengths given descending. Returns `[x_1, .., x_k]` per chain
/// with `nmat x_1 = 0` and `nmat x_{l+1} = x_l`.
fn jordan_chains<T: ComplexField<RealField = f64>>(nmat: &DMatrix<T>, lengths: &[usize]) -> Vec<Vec<DVector<T>>> {
    let n = nmat.nrows();
    let kmax = lengths.first().copied().unwrap_or(0);
    let mut powers = vec![DMatrix::<T>::identity(n, n)];
    for j in 1..=kmax {
        powers.push(&powers[j - 1] * nmat);
    }
    let nullity = |j: usize| lengths.iter().map(|&k| k.min(j)).sum::<usize>();
    let mut chains: Vec<Vec<DVector<T>>> = Vec::new();
    for j in (1..=kmax).rev() {
        let tops = lengths.iter().filter(|&&k| k == j).count();
        if tops == 0 {
            continue;
        }
        let kj = null_space(&powers[j], nullity(j));
        let km1 = null_space(&powers[j - 1], nullity(j - 1));
        // vectors of existing chains sitting at level j
        let mut w_cols: Vec<DVector<T>> = km1.column_iter().map(|c| c.into_owned()).collect();
        for ch in &chains {
            w_cols.push(ch[j - 1].clone());
        }
        let w = if w_cols.is_empty() { DMatrix::<T>::zeros(n, 0) } else { DMatrix::from_columns(&w_cols) };
        let q = orth(&w);
        let complement = &kj - &q * (q.adjoint() * &kj);
        let u = svd(&complement).u;
        for i in 0..tops {
            let top = u.column(i).into_owned();
            let mut chain = vec![top];
            for _ in 1..j {
                let next = nmat * chain.last().expect("nonempty");
                chain.push(next);
            }
            chain.reverse();
            chains.push(chain);
        }
    }
    chains
}

/// Index of the largest-magnitude entry, first on ties.
fn dominant_index<T: ComplexField<RealField = f64>>(v: &DVector<T>) -> usize {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].clone().modulus() > v[best].clone().modulus() * (1.0 + 1e-12) {
            best = i;
        }
    }
    best
}

/// Real columns of one chain block of `E`, with the `ε^l` rescaling applied.
fn chain_columns(cluster: &RepCluster, b: &Mat, eps: f64) -> Vec<(ChainBlock, Vec<DVector<f64>>)> {
    let n = b.nrows();
    let v = cluster.value;
    let mut out = Vec::new();
    if v.im == 0.0 {
        let nmat = b - Mat::identity(n, n) * v.re;
        for chain in jordan_chains(&nmat, &cluster.chains) {
            let eig = &chain[0];
            let sign = eig[dominant_index(eig)].signum();
            let cols = chain.iter().enumerate().map(|(l, x)| x * (sign * eps.powi(l as i32 + 1))).collect();
            out.push((ChainBlock { lambda: Complex64::new(v.re, 0.0), size: chain.len() }, cols));
        }
    } else {
        let mut nmat: CMat = to_complex(b);
        for i in 0..n {
            nmat[(i, i)] -= v;
        }
        for chain in jordan_chains(&nmat, &cluster.chains) {
            let eig = &chain[0];
            let d = eig[dominant_index(eig)];
            let phase = d.conj() / d.norm();
            let mut cols = Vec::with_capacity(2 * chain.len());
            for (l, x) in chain.iter().enumerate() {
                let e = x * (phase * eps.powi(l as i32 + 1) * std::f64::consts::SQRT_2);
                cols.push(e.map(|z| z.re));
                cols.push(e.map(|z| z.im));
            }
            out.push((ChainBlock { lambda: v, size: chain.len() }, cols));
        }
    }
    out
}

/// Symplectic `T` with `T^{-1} B T = blockdiag(A^T, -A)` for a loxodromic
/// Hamilton matrix; chain couplings are scaled to `jordan_scale`
/// (`None` uses [`default_jordan_scale`]).
pub fn birkhoff_normal_form(
    b: &HamiltonMatrix,
    jordan_scale: Option<f64>,
    tol: &Tolerances,
) -> Result<BirkhoffNormalForm, SymplecticError> {
    let (spec, reps) = analyze(&b.entries, ClassifyMode::HamiltonMatrix, tol)?;
    if !spec.is_loxodromic {
        return Err(SymplecticError::EllipticEigenvaluePresent(format!(
            "{} elliptic pair(s) in the spectrum",
            spec.n_elliptic
        )));
    }
    let eps = jordan_scale.unwrap_or_else(|| default_jordan_scale(&spec));
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(SymplecticError::DimensionMismatch(format!("jordan_scale {eps} outside (0, 1]")));
    }
    let n = b.dim;
    let m = n / 2;
    let bm = &b.entries;

    let mut blocks: Vec<(ChainBlock, Vec<DVector<f64>>)> = reps.iter().flat_map(|c| chain_columns(c, bm, eps)).collect();
    blocks.sort_by(|x, y| {
        (x.0.is_complex(), x.0.lambda.re, x.0.lambda.im, std::cmp::Reverse(x.0.size))
            .partial_cmp(&(y.0.is_complex(), y.0.lambda.re, y.0.lambda.im, std::cmp::Reverse(y.0.size)))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let e_cols: Vec<DVector<f64>> = blocks.iter().flat_map(|(_, c)| c.iter().cloned()).collect();
    if e_cols.len() != m {
        return Err(SymplecticError::DefectiveBeyondTolerance(format!(
            "chains span {} of {} expanding directions",
            e_cols.len(),
            m
        )));
    }
    let mut e = Mat::from_columns(&e_cols);
    let j = crate::linalg::standard_symplectic(m);
    let f0 = stable_unstable_subspaces(b)?.stable_basis;
    let pairing = e.transpose() * &j * &f0;
    let pairing_inv = pairing
        .try_inverse()
        .ok_or_else(|| SymplecticError::DefectiveBeyondTolerance("expanding and contracting bases do not pair".into()))?;
    let mut f = -(&f0 * pairing_inv);

    // balance |e| and |f| chain by chain; A and the pairing are unchanged
    let mut off = 0;
    for (blk, _) in &blocks {
        let w = blk.width();
        let ne = e.columns(off, w).norm();
        let nf = f.columns(off, w).norm();
        if ne > 0.0 && nf > 0.0 {
            let c = (nf / ne).sqrt();
            e.columns_mut(off, w).scale_mut(c);
            f.columns_mut(off, w).scale_mut(1.0 / c);
        }
        off += w;
    }

    let mut t = Mat::zeros(n, n);
    t.columns_mut(0, m).copy_from(&e);
    t.columns_mut(m, m).copy_from(&f);
    let chains: Vec<ChainBlock> = blocks.iter().map(|(c, _)| *c).collect();
    let a = assemble_a(&chains, eps);
    let nf = block_diag(&[a.transpose(), -a.clone()]);
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| SymplecticError::DefectiveBeyondTolerance("singular transform".into()))?;
    let residual = max_abs(&(&t_inv * bm * &t - &nf));
    let sres = symplectic_residual(&t);
    if sres > tol.symplectic_tol * max_abs(&t).powi(2).max(1.0) {
        return Err(SymplecticError::NotSymplectic(sres));
    }
    Ok(BirkhoffNormalForm {
        transform: SymplecticTransform { dim: n, entries: t },
        block_matrix_a: a,
        chains,
        eigenvalues: spec,
        jordan_scale: eps,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::random::{conjugated_normal_form, random_chains};
    use crate::symplectic::EigenGroup;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Multiset distance by greedy nearest matching.
    fn multiset_error(mut a: Vec<Complex64>, b: &[Complex64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut worst: f64 = 0.0;
        for z in b {
            let (i, d) = a
                .iter()
                .enumerate()
                .map(|(i, w)| (i, (w - z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            worst = worst.max(d);
            a.swap_remove(i);
        }
        worst
    }

    fn input_multiset(chains: &[ChainBlock]) -> Vec<Complex64> {
        let mut out = Vec::new();
        for c in chains {
            let orbit = if c.is_complex() {
                vec![c.lambda, c.lambda.conj(), -c.lambda, -c.lambda.conj()]
            } else {
                vec![c.lambda, -c.lambda]
            };
            for z in orbit {
                out.extend(std::iter::repeat_n(z, c.size));
            }
        }
        out
    }

    fn assert_same_chains(got: &[ChainBlock], want: &[ChainBlock]) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_eq!(g.size, w.size);
            assert!((g.lambda - w.lambda).norm() < 1e-9, "{:?} vs {:?}", g, w);
        }
    }

    #[test]
    fn diagonal_is_already_normal() {
        let lam = 0.7;
        let b = HamiltonMatrix::new(Mat::from_row_slice(2, 2, &[lam, 0.0, 0.0, -lam])).unwrap();
        let nf = birkhoff_normal_form(&b, None, &tol()).unwrap();
        assert!(max_abs(&(&nf.transform.entries - Mat::identity(2, 2))) < 1e-14);
        assert_eq!(nf.block_matrix_a, Mat::from_element(1, 1, lam));
    }

    #[test]
    fn real_chain_of_length_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chains = [ChainBlock { lambda: Complex64::new(1.0, 0.0), size: 2 }];
        let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.4);
        let nf = birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), Some(1.0), &tol()).unwrap();
        assert_same_chains(&nf.chains, &chains);
        assert!(nf.residual <= 1e-6, "residual {}", nf.residual);
        let got = nf.eigenvalues.exponent_multiset();
        assert!(multiset_error(got, &input_multiset(&chains)) <= 1e-6);
        assert!(matches!(nf.eigenvalues.groups[0], EigenGroup::RealHyperbolic { chain_size: 2, .. }));
        assert!(nf.transform.residual() <= 1e-9);
    }

    #[test]
    fn complex_quadruple_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chains = [ChainBlock { lambda: Complex64::new(1.0, 2.0), size: 1 }];
        let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.4);
        let nf = birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), None, &tol()).unwrap();
        let expected = Mat::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 1.0]);
        assert!(max_abs(&(&nf.block_matrix_a - expected)) < 1e-10);
        assert!(nf.residual <= 1e-6);
    }

    #[test]
    fn chain_scale_shrinks_couplings() {
        let chains = [ChainBlock { lambda: Complex64::new(0.4, 0.0), size: 3 }];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.3);
        let nf = birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), None, &tol()).unwrap();
        assert!((nf.jordan_scale - 0.2).abs() < 1e-9);
        assert!((nf.block_matrix_a[(1, 0)] - 0.2).abs() < 1e-12);
        assert!(nf.residual <= 1e-6);
    }

    #[test]
    fn elliptic_rejected() {
        let b = HamiltonMatrix::new(Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(matches!(
            birkhoff_normal_form(&b, None, &tol()),
            Err(SymplecticError::EllipticEigenvaluePresent(_))
        ));
    }

    #[test]
    fn repeated_eigenvalue_two_chains() {
        let chains = [
            ChainBlock { lambda: Complex64::new(0.6, 0.0), size: 2 },
            ChainBlock { lambda: Complex64::new(0.6, 0.0), size: 1 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.3);
        let nf = birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), Some(0.3), &tol()).unwrap();
        assert_same_chains(&nf.chains, &chains);
        assert!(nf.residual <= 1e-6, "residual {}", nf.residual);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_recovers_structure(seed in any::<u64>(), m in 1usize..=4, kmax in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chains = random_chains(&mut rng, m, kmax);
            let (b, _) = conjugated_normal_form(&mut rng, &chains, 0.25);
            let nf = birkhoff_normal_form(&HamiltonMatrix::new(b).unwrap(), None, &tol()).unwrap();
            prop_assert!(nf.residual <= 1e-6, "residual {}", nf.residual);
            prop_assert!(nf.transform.residual() <= 1e-9, "symplectic {}", nf.transform.residual());
            let err = multiset_error(nf.eigenvalues.exponent_multiset(), &input_multiset(&chains));
            prop_assert!(err <= 1e-6, "eigenvalue error {}", err);
            let mut got: Vec<usize> = nf.chains.iter().map(|c| c.size).collect();
            let mut want: Vec<usize> = chains.iter().map(|c| c.size).collect();
            got.sort_unstable();
            want.sort_unstable();
            prop_assert_eq!(got, want);
        }
    }
}
