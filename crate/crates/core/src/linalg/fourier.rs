use super::{CMat, Mat};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Angular wavenumbers of an `n`-point periodic grid of period `length`,
/// in FFT order. For even `n` the Nyquist entry is `-n/2`.
pub fn fourier_frequencies(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let mi = if m < n.div_ceil(2) { m as i64 } else { m as i64 - n as i64 };
            2.0 * PI * mi as f64 / length
        })
        .collect()
}

/// Dense matrix of the Fourier multiplier with symbol `symbol(k)` on an
/// `n`-point periodic grid. The result is circulant; a real symbol gives a
/// Hermitian matrix.
pub fn circulant_from_symbol<F: Fn(f64) -> Complex64>(n: usize, length: f64, symbol: F) -> CMat {
    let ks = fourier_frequencies(n, length);
    let s: Vec<Complex64> = ks.iter().map(|&k| symbol(k)).collect();
    let col: Vec<Complex64> = (0..n)
        .map(|d| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, sm) in s.iter().enumerate() {
                let ang = 2.0 * PI * (m as f64) * (d as f64) / n as f64;
                acc += sm * Complex64::from_polar(1.0, ang);
            }
            acc / n as f64
        })
        .collect();
    CMat::from_fn(n, n, |j, l| col[(j + n - l) % n])
}

/// Real symmetric Fourier multiplier for an even real symbol.
pub fn symbol_circulant_real<F: Fn(f64) -> f64>(n: usize, length: f64, symbol: F) -> Mat {
    let c = circulant_from_symbol(n, length, |k| Complex64::new(symbol(k), 0.0));
    let m = c.map(|z| z.re);
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_multiplier_differentiates_trig_polynomial() {
        let n = 32;
        let len = 2.0 * PI;
        let d = circulant_from_symbol(n, len, |k| Complex64::new(0.0, k));
        let x: Vec<f64> = (0..n).map(|j| j as f64 * len / n as f64).collect();
        let u = nalgebra::DVector::from_iterator(n, x.iter().map(|&t| Complex64::new((3.0 * t).sin(), 0.0)));
        let du = &d * u;
        for (j, &t) in x.iter().enumerate() {
            assert!((du[j].re - 3.0 * (3.0 * t).cos()).abs() < 1e-11);
            assert!(du[j].im.abs() < 1e-11);
        }
    }

    #[test]
    fn even_symbol_gives_symmetric_real_matrix() {
        let m = symbol_circulant_real(16, 3.0, |k| k * k);
        assert!((&m - m.transpose()).norm() < 1e-12);
    }
}
