//! Warp profiles `f(r)` of surfaces of revolution `dr^2 + f(r)^2 dθ^2`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum WarpProfile {
    /// Hyperbolic cylinder, `f = cosh r`; the neck `r = 0` is a hyperbolic
    /// closed geodesic.
    Cosh,
    /// Flat cylinder, `f = 1`.
    Flat,
    /// Smooth periodic warp `f = cosh(ρ(r))` with
    /// `ρ(r) = (P/π) sin(π r / P)`, period `2P`. Agrees with `cosh r` to
    /// third order at the neck.
    PeriodicCosh { half_period: f64 },
}

impl WarpProfile {
    /// `(f, f', f'')` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            WarpProfile::Cosh => (r.cosh(), r.sinh(), r.cosh()),
            WarpProfile::Flat => (1.0, 0.0, 0.0),
            WarpProfile::PeriodicCosh { half_period } => {
                let p = half_period;
                let w = std::f64::consts::PI / p;
                let rho = (w * r).sin() / w;
                let drho = (w * r).cos();
                let ddrho = -w * (w * r).sin();
                let (c, s) = (rho.cosh(), rho.sinh());
                (c, s * drho, c * drho * drho + s * ddrho)
            }
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// Gaussian curvature `-f''/f`.
    pub fn curvature(&self, r: f64) -> f64 {
        let (f, _, f2) = self.eval(r);
        -f2 / f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        for prof in [WarpProfile::Cosh, WarpProfile::PeriodicCosh { half_period: 3.0 }] {
            for &r in &[-1.3, 0.0, 0.4, 2.2] {
                let h = 1e-5;
                let (_, d1, d2) = prof.eval(r);
                let fd1 = (prof.f(r + h) - prof.f(r - h)) / (2.0 * h);
                let fd2 = (prof.eval(r + h).1 - prof.eval(r - h).1) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-8);
                assert!((d2 - fd2).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn neck_has_unit_negative_curvature() {
        assert_eq!(WarpProfile::Cosh.curvature(0.0), -1.0);
        assert!((WarpProfile::PeriodicCosh { half_period: 3.0 }.curvature(0.0) + 1.0).abs() < 1e-14);
        assert_eq!(WarpProfile::Flat.curvature(0.7), 0.0);
    }

    #[test]
    fn periodic_profile_is_periodic() {
        let p = WarpProfile::PeriodicCosh { half_period: 2.5 };
        for &r in &[0.1, 1.7, -2.0] {
            assert!((p.f(r) - p.f(r + 5.0)).abs() < 1e-12);
        }
    }
}
