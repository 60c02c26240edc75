use super::ResolventError;
use crate::linalg::fourier_frequencies;
use num_complex::Complex64;

/// Uniform periodic grid `x_j = -L + j dx` on `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub n: usize,
    pub half_width: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, half_width: f64) -> Self {
        Self { n, half_width }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.n).map(|j| -self.half_width + j as f64 * dx).collect()
    }

    pub fn norm(&self, u: &[Complex64]) -> f64 {
        (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }
}

/// Fraction of the discrete mass allowed outside the representable window.
const OVERFLOW_TOL: f64 = 1e-12;

/// `v(X) = s^{1/2} u(s X)`, evaluated by trigonometric interpolation of `u`.
/// Arguments outside the grid window read as zero.
pub fn dilate(u: &[Complex64], grid: PeriodicGrid, s: f64) -> Result<Vec<Complex64>, ResolventError> {
    if u.len() != grid.n {
        return Err(ResolventError::InvalidParameter(format!("state has {} samples, grid has {}", u.len(), grid.n)));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(ResolventError::InvalidParameter(format!("dilation factor {s} must be positive")));
    }
    let n = grid.n;
    let l = grid.half_width;
    let x = grid.points();
    if s < 1.0 {
        // the image of u is wider by 1/s; everything beyond |x| = s L is lost
        let total: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let lost: f64 = x.iter().zip(u).filter(|(xx, _)| xx.abs() > s * l).map(|(_, z)| z.norm_sqr()).sum();
        if lost > OVERFLOW_TOL * total {
            return Err(ResolventError::SupportOverflow(format!(
                "mass fraction {:e} lies beyond |x| = {}",
                lost / total,
                s * l
            )));
        }
    }
    let ks = fourier_frequencies(n, 2.0 * l);
    // Fourier coefficients with respect to exp(i k (x + L))
    let coeff: Vec<Complex64> = ks
        .iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &uj) in u.iter().enumerate() {
                acc += uj * Complex64::from_polar(1.0, -k * (x[j] + l));
            }
            acc / n as f64
        })
        .collect();
    let nyquist = n % 2 == 0;
    let amp = s.sqrt();
    Ok(x.iter()
        .map(|&xx| {
            let y = s * xx;
            if y < -l || y >= l {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, (&k, &c)) in ks.iter().zip(&coeff).enumerate() {
                if nyquist && m == n / 2 {
                    // split the Nyquist mode symmetrically so real data stay real
                    acc += c * Complex64::new((k * (y + l)).cos(), 0.0);
                } else {
                    acc += c * Complex64::from_polar(1.0, k * (y + l));
                }
            }
            acc * amp
        })
        .collect())
}

/// `T u(X) = (h/h̃)^{1/4} u((h/h̃)^{1/2} X)` in one transverse dimension.
pub fn rescale_state(u: &[Complex64], grid: PeriodicGrid, h: f64, h_tilde: f64) -> Result<Vec<Complex64>, ResolventError> {
    if !(h > 0.0 && h_tilde > h) {
        return Err(ResolventError::InvalidParameter(format!("need 0 < h < h_tilde, got h = {h}, h_tilde = {h_tilde}")));
    }
    dilate(u, grid, (h / h_tilde).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: PeriodicGrid, width: f64) -> Vec<Complex64> {
        grid.points()
            .iter()
            .map(|&x| Complex64::new((-x * x / (2.0 * width * width)).exp(), 0.0))
            .collect()
    }

    /// Second moment of |u|^2 relative to its mass.
    fn spread(grid: PeriodicGrid, u: &[Complex64]) -> f64 {
        let x = grid.points();
        let m: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let s: f64 = x.iter().zip(u).map(|(xx, z)| xx * xx * z.norm_sqr()).sum();
        (s / m).sqrt()
    }

    #[test]
    fn rescaling_is_unitary_on_gaussians() {
        let grid = PeriodicGrid::new(256, 8.0);
        let u = gaussian(grid, 0.3);
        let v = rescale_state(&u, grid, 0.01, 0.04).unwrap();
        assert!((grid.norm(&u) - grid.norm(&v)).abs() < 1e-6 * grid.norm(&u));
    }

    #[test]
    fn gaussian_width_scales() {
        let grid = PeriodicGrid::new(256, 8.0);
        let w = 0.3;
        let (h, ht) = (0.01, 0.09);
        let v = rescale_state(&gaussian(grid, w), grid, h, ht).unwrap();
        let expected = gaussian(grid, w * (ht / h).sqrt());
        // |u|^2 of a Gaussian of width w has spread w / sqrt(2)
        assert!((spread(grid, &v) - spread(grid, &expected)).abs() < 1e-6);
        let amp = (h / ht).powf(0.25);
        for (a, b) in v.iter().zip(&expected) {
            assert!((a - b * amp).norm() < 1e-6);
        }
    }

    #[test]
    fn round_trip_returns_state() {
        let grid = PeriodicGrid::new(256, 8.0);
        let u: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&x| Complex64::from_polar((-x * x / 0.18).exp(), 2.0 * x))
            .collect();
        let (h, ht) = (0.02, 0.08);
        let v = rescale_state(&u, grid, h, ht).unwrap();
        let back = dilate(&v, grid, (ht / h).sqrt()).unwrap();
        let err = u.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn wide_state_overflows() {
        let grid = PeriodicGrid::new(128, 4.0);
        let u = gaussian(grid, 1.0);
        assert!(matches!(rescale_state(&u, grid, 0.01, 1.0), Err(ResolventError::SupportOverflow(_))));
    }
}
