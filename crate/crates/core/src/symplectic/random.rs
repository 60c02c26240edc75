//! Seeded random test inputs: Hamilton matrices, symplectic maps and
//! conjugated normal forms.

use super::birkhoff::{assemble_a, ChainBlock};
use crate::linalg::{block_diag, expm, standard_symplectic, Mat};
use num_complex::Complex64;
use rand::Rng;

/// Symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Mat {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-scale..=scale));
    (&a + a.transpose()) * 0.5
}

/// `B = -J S` for a random symmetric `S`.
pub fn random_hamiltonian<R: Rng>(rng: &mut R, m: usize, scale: f64) -> Mat {
    -(standard_symplectic(m) * random_symmetric(rng, 2 * m, scale))
}

/// `exp(B)` for a random Hamilton matrix `B`.
pub fn random_symplectic<R: Rng>(rng: &mut R, m: usize, scale: f64) -> Mat {
    expm(&random_hamiltonian(rng, m, scale))
}

/// Random symmetric positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
    let q = g.qr().q();
    let d = Mat::from_diagonal(&crate::linalg::Vector::from_fn(n, |_, _| rng.random_range(lo..=hi)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random loxodromic chain layout filling `m` degrees of freedom, with
/// distinct eigenvalues, chain sizes at most `max_chain` and real parts in
/// `[0.2, 1.2]`.
pub fn random_chains<R: Rng>(rng: &mut R, m: usize, max_chain: usize) -> Vec<ChainBlock> {
    let mut out: Vec<ChainBlock> = Vec::new();
    let mut left = m;
    while left > 0 {
        let complex = left >= 2 && rng.random_bool(0.4);
        let width = if complex { 2 } else { 1 };
        let size = rng.random_range(1..=max_chain.min(left / width).max(1));
        // draw eigenvalues until they are well separated from earlier ones
        let lambda = loop {
            let re = rng.random_range(0.2..1.2);
            let im = if complex { rng.random_range(0.3..1.5) } else { 0.0 };
            let z = Complex64::new(re, im);
            if out.iter().all(|c| (c.lambda - z).norm() > 0.15) {
                break z;
            }
        };
        out.push(ChainBlock { lambda, size });
        left -= size * width;
    }
    out
}

/// `T_0 blockdiag(A^T, -A) T_0^{-1}` for a random symplectic `T_0`; also
/// returns `T_0`.
pub fn conjugated_normal_form<R: Rng>(rng: &mut R, chains: &[ChainBlock], scale: f64) -> (Mat, Mat) {
    let a = assemble_a(chains, 1.0);
    let nf = block_diag(&[a.transpose(), -a]);
    let m = nf.nrows() / 2;
    let t0 = random_symplectic(rng, m, scale);
    let t0_inv = t0.clone().try_inverse().expect("symplectic maps are invertible");
    (&t0 * nf * t0_inv, t0)
}
