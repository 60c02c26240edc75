//! Hamiltonian flows of the built-in model systems: integration, closed
//! orbits, linearized Poincaré maps, time averages and geometric control.

mod control;
mod integrator;
mod orbit;

pub use control::{check_geometric_control, trajectory_average, ControlReport, ControlWitness, Neighborhood, RadialDamping};
pub use integrator::{Control, DenseStep, Dopri5};
pub use orbit::{find_closed_orbit, linearized_poincare_map, ClosedOrbit, MonodromyData, OrbitOptions};

use crate::linalg::Mat;
use crate::profile::WarpProfile;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("integration failed: {0}")]
    StepFailure(String),
    #[error("Newton shooting did not converge after {0} iterations (residual {1:.3e})")]
    MaxIterations(usize, f64),
    #[error("section is not transverse to the flow: {0}")]
    SectionNotTransverse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// One Gaussian bump `height * exp(-|x - center|^2 / width^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub height: f64,
    pub width: f64,
}

/// Serializable description of a built-in model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Geodesic flow of `dr^2 + f(r)^2 dθ^2`, sampled on `|r| ≤ R`.
    SurfaceOfRevolution {
        #[serde(flatten)]
        profile: WarpProfile,
        #[serde(rename = "R")]
        half_length: f64,
    },
    /// `|ξ|^2/2 + Σ bumps`.
    BumpPotential { bumps: Vec<Bump> },
    /// `(|x|^2 + |ξ|^2)/2` in `n` degrees of freedom.
    Harmonic { n: usize },
    /// `λ x ξ` in one degree of freedom.
    Hyperbolic { lambda: f64 },
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;

/// User-supplied symbol. Without a Hessian, the variational equations use
/// central differences of the gradient.
#[derive(Clone)]
pub struct CustomSymbol {
    pub p: ScalarFn,
    pub gradient: VectorFn,
    pub hessian: Option<MatrixFn>,
}

#[derive(Clone)]
pub enum Model {
    Builtin(ModelSpec),
    Custom(CustomSymbol),
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Builtin(s) => write!(f, "{s:?}"),
            Model::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A real symbol `p(x, ξ)` on `T*R^n` with phase points `z = (x, ξ)`.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pub dim_config: usize,
    pub model: Model,
}

impl HamiltonianSystem {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self, FlowError> {
        let n = match spec {
            ModelSpec::SurfaceOfRevolution { half_length, .. } => {
                if !(*half_length > 0.0) {
                    return Err(FlowError::InvalidParameter("R must be positive".into()));
                }
                2
            }
            ModelSpec::BumpPotential { bumps } => {
                let n = bumps.first().map(|b| b.center.len()).unwrap_or(0);
                if n == 0 || bumps.iter().any(|b| b.center.len() != n || !(b.width > 0.0)) {
                    return Err(FlowError::InvalidParameter("bumps need equal, nonzero dimensions and positive widths".into()));
                }
                n
            }
            ModelSpec::Harmonic { n } => {
                if *n == 0 {
                    return Err(FlowError::InvalidParameter("n must be positive".into()));
                }
                *n
            }
            ModelSpec::Hyperbolic { .. } => 1,
        };
        Ok(Self { dim_config: n, model: Model::Builtin(spec.clone()) })
    }

    pub fn surface(profile: WarpProfile, half_length: f64) -> Self {
        Self::from_spec(&ModelSpec::SurfaceOfRevolution { profile, half_length }).expect("valid surface")
    }

    pub fn harmonic(n: usize) -> Self {
        Self::from_spec(&ModelSpec::Harmonic { n }).expect("valid oscillator")
    }

    pub fn hyperbolic(lambda: f64) -> Self {
        Self { dim_config: 1, model: Model::Builtin(ModelSpec::Hyperbolic { lambda }) }
    }

    /// Two equal bumps at `(±d, 0)`; the segment between them carries a
    /// hyperbolic closed orbit bouncing along the axis.
    pub fn double_bump(d: f64, height: f64, width: f64) -> Self {
        let bumps = vec![
            Bump { center: vec![-d, 0.0], height, width },
            Bump { center: vec![d, 0.0], height, width },
        ];
        Self::from_spec(&ModelSpec::BumpPotential { bumps }).expect("valid bumps")
    }

    pub fn custom(dim_config: usize, symbol: CustomSymbol) -> Self {
        Self { dim_config, model: Model::Custom(symbol) }
    }

    pub fn spec(&self) -> Option<&ModelSpec> {
        match &self.model {
            Model::Builtin(s) => Some(s),
            Model::Custom(_) => None,
        }
    }

    pub fn phase_dim(&self) -> usize {
        2 * self.dim_config
    }

    /// Indices of configuration coordinates that are angles (period `2π`).
    pub fn angle_indices(&self) -> &'static [usize] {
        match self.spec() {
            Some(ModelSpec::SurfaceOfRevolution { .. }) => &[1],
            _ => &[],
        }
    }

    /// Difference `a - b` with angle components wrapped into `(-π, π]`.
    pub fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        for &i in self.angle_indices() {
            d[i] = wrap_angle(d[i]);
        }
        d
    }

    pub fn p(&self, z: &[f64]) -> f64 {
        let n = self.dim_config;
        let (x, xi) = z.split_at(n);
        match &self.model {
            Model::Custom(c) => (c.p)(z),
            Model::Builtin(spec) => match spec {
                ModelSpec::SurfaceOfRevolution { profile, .. } => {
                    let f = profile.f(x[0]);
                    0.5 * (xi[0] * xi[0] + xi[1] * xi[1] / (f * f))
                }
                ModelSpec::BumpPotential { bumps } => {
                    0.5 * xi.iter().map(|v| v * v).sum::<f64>() + bumps.iter().map(|b| bump_value(b, x)).sum::<f64>()
                }
                ModelSpec::Harmonic { .. } => 0.5 * z.iter().map(|v| v * v).sum::<f64>(),
                ModelSpec::Hyperbolic { lambda } => lambda * x[0] * xi[0],
            },
        }
    }

    /// `(∂_x p, ∂_ξ p)`.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim_config;
        let (x, xi) = z.split_at(n);
        match &self.model {
            Model::Custom(c) => (c.gradient)(z),
            Model::Builtin(spec) => match spec {
                ModelSpec::SurfaceOfRevolution { profile, .. } => {
                    let (f, f1, _) = profile.eval(x[0]);
                    let eta = xi[1];
                    vec![-eta * eta * f1 / (f * f * f), 0.0, xi[0], eta / (f * f)]
                }
                ModelSpec::BumpPotential { bumps } => {
                    let mut g = vec![0.0; 2 * n];
                    for b in bumps {
                        let e = bump_value(b, x);
                        for i in 0..n {
                            g[i] -= 2.0 * e * (x[i] - b.center[i]) / (b.width * b.width);
                        }
                    }
                    g[n..].copy_from_slice(xi);
                    g
                }
                ModelSpec::Harmonic { .. } => z.to_vec(),
                ModelSpec::Hyperbolic { lambda } => vec![lambda * xi[0], lambda * x[0]],
            },
        }
    }

    pub fn hessian(&self, z: &[f64]) -> Mat {
        let n = self.dim_config;
        let d = 2 * n;
        let (x, xi) = z.split_at(n);
        match &self.model {
            Model::Custom(c) => match &c.hessian {
                Some(h) => h(z),
                None => {
                    let mut h = Mat::zeros(d, d);
                    for j in 0..d {
                        let step = 1e-5 * z[j].abs().max(1.0);
                        let mut zp = z.to_vec();
                        let mut zm = z.to_vec();
                        zp[j] += step;
                        zm[j] -= step;
                        let (gp, gm) = ((c.gradient)(&zp), (c.gradient)(&zm));
                        for i in 0..d {
                            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
                        }
                    }
                    crate::linalg::sym_part(&h)
                }
            },
            Model::Builtin(spec) => match spec {
                ModelSpec::SurfaceOfRevolution { profile, .. } => {
                    let (f, f1, f2) = profile.eval(x[0]);
                    let eta = xi[1];
                    let f3 = f * f * f;
                    let mut h = Mat::zeros(4, 4);
                    h[(0, 0)] = -eta * eta * (f2 / f3 - 3.0 * f1 * f1 / (f3 * f));
                    h[(0, 3)] = -2.0 * eta * f1 / f3;
                    h[(3, 0)] = h[(0, 3)];
                    h[(2, 2)] = 1.0;
                    h[(3, 3)] = 1.0 / (f * f);
                    h
                }
                ModelSpec::BumpPotential { bumps } => {
                    let mut h = Mat::zeros(d, d);
                    for b in bumps {
                        let e = bump_value(b, x);
                        let w2 = b.width * b.width;
                        for i in 0..n {
                            for j in 0..n {
                                let di = x[i] - b.center[i];
                                let dj = x[j] - b.center[j];
                                h[(i, j)] += e * (4.0 * di * dj / (w2 * w2) - if i == j { 2.0 / w2 } else { 0.0 });
                            }
                        }
                    }
                    for i in n..d {
                        h[(i, i)] = 1.0;
                    }
                    h
                }
                ModelSpec::Harmonic { .. } => Mat::identity(d, d),
                ModelSpec::Hyperbolic { lambda } => Mat::from_row_slice(2, 2, &[0.0, *lambda, *lambda, 0.0]),
            },
        }
    }

    /// `H_p = (∂_ξ p, -∂_x p)`.
    pub fn hamilton_field(&self, z: &[f64]) -> Vec<f64> {
        let g = self.gradient(z);
        let n = self.dim_config;
        let mut v = vec![0.0; 2 * n];
        for i in 0..n {
            v[i] = g[n + i];
            v[n + i] = -g[i];
        }
        v
    }

    /// Linearization `D H_p = -J Hess p`.
    pub fn field_jacobian(&self, z: &[f64]) -> Mat {
        let h = self.hessian(z);
        let n = self.dim_config;
        let mut a = Mat::zeros(2 * n, 2 * n);
        for j in 0..2 * n {
            for i in 0..n {
                a[(i, j)] = h[(n + i, j)];
                a[(n + i, j)] = -h[(i, j)];
            }
        }
        a
    }
}

fn bump_value(b: &Bump, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
    b.height * (-r2 / (b.width * b.width)).exp()
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Local error tolerance handed to the integrator for a requested `tol`.
/// The global energy error grows with the number of steps, so the local
/// tolerance is kept two orders smaller.
pub(crate) fn integrator_for(tol: f64) -> Dopri5 {
    Dopri5::new(0.01 * tol)
}

/// Accepted integrator steps of a single trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim_config: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        self.states.last().expect("trajectory has a start point")
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// CSV header `t, x1.., xi1.., p`.
    pub fn csv_header(&self) -> Vec<String> {
        let n = self.dim_config;
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("x{i}")));
        h.extend((1..=n).map(|i| format!("xi{i}")));
        h.push("p".into());
        h
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.times.iter().zip(&self.states).zip(&self.energies).map(|((t, z), e)| {
            let mut row = vec![*t];
            row.extend_from_slice(z);
            row.push(*e);
            row
        })
    }
}

fn check_start(sys: &HamiltonianSystem, start: &[f64], tol: f64) -> Result<(), FlowError> {
    if start.len() != sys.phase_dim() {
        return Err(FlowError::InvalidParameter(format!("expected {} phase coordinates, got {}", sys.phase_dim(), start.len())));
    }
    if !(tol > 0.0) {
        return Err(FlowError::InvalidParameter("tol must be positive".into()));
    }
    Ok(())
}

/// `exp(t H_p)(start)`, recorded at every accepted step. Negative `t`
/// integrates backwards.
pub fn flow(sys: &HamiltonianSystem, start: &[f64], t: f64, tol: f64) -> Result<Trajectory, FlowError> {
    check_start(sys, start, tol)?;
    let mut traj = Trajectory { dim_config: sys.dim_config, times: vec![0.0], states: vec![start.to_vec()], energies: vec![sys.p(start)] };
    integrator_for(tol).integrate(
        |_, z, dz| dz.copy_from_slice(&sys.hamilton_field(z)),
        0.0,
        start,
        t,
        |step| {
            traj.times.push(step.t1);
            traj.states.push(step.y1.to_vec());
            traj.energies.push(sys.p(step.y1));
            Control::Continue
        },
    )?;
    Ok(traj)
}

/// End point of [`flow`] without recording the path.
pub fn flow_to(sys: &HamiltonianSystem, start: &[f64], t: f64, tol: f64) -> Result<Vec<f64>, FlowError> {
    check_start(sys, start, tol)?;
    integrator_for(tol)
        .integrate(|_, z, dz| dz.copy_from_slice(&sys.hamilton_field(z)), 0.0, start, t, |_| Control::Continue)
        .map(|(_, z)| z)
}

/// `exp(t H_p)(start)` together with its derivative in the initial point.
pub fn flow_with_monodromy(sys: &HamiltonianSystem, start: &[f64], t: f64, tol: f64) -> Result<(Vec<f64>, Mat), FlowError> {
    check_start(sys, start, tol)?;
    let d = sys.phase_dim();
    let mut y0 = start.to_vec();
    y0.extend(Mat::identity(d, d).iter());
    let (_, y) = integrator_for(tol).integrate(
        |_, y, dy| {
            let z = &y[..d];
            dy[..d].copy_from_slice(&sys.hamilton_field(z));
            let a = sys.field_jacobian(z);
            let m = nalgebra::DMatrixView::from_slice(&y[d..], d, d);
            let prod = a * m;
            dy[d..].copy_from_slice(prod.as_slice());
        },
        0.0,
        &y0,
        t,
        |_| Control::Continue,
    )?;
    Ok((y[..d].to_vec(), Mat::from_column_slice(d, d, &y[d..])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn systems() -> Vec<HamiltonianSystem> {
        vec![
            HamiltonianSystem::surface(WarpProfile::Cosh, 3.0),
            HamiltonianSystem::surface(WarpProfile::PeriodicCosh { half_period: 3.0 }, 3.0),
            HamiltonianSystem::double_bump(1.0, 1.0, 0.5),
            HamiltonianSystem::harmonic(2),
            HamiltonianSystem::hyperbolic(0.7),
        ]
    }

    fn point(sys: &HamiltonianSystem, u: &[f64]) -> Vec<f64> {
        (0..sys.phase_dim()).map(|i| u[i % u.len()]).collect()
    }

    #[test]
    fn harmonic_rotation_returns() {
        let sys = HamiltonianSystem::harmonic(1);
        let tol = 1e-9;
        let end = flow_to(&sys, &[1.0, 0.0], 2.0 * PI, tol).unwrap();
        assert!((end[0] - 1.0).abs() < tol && end[1].abs() < tol, "{end:?}");
    }

    #[test]
    fn hyperbolic_model_solution() {
        let lambda = 0.8;
        let sys = HamiltonianSystem::hyperbolic(lambda);
        let (x0, xi0, t) = (0.3, -1.2, 2.5);
        let end = flow_to(&sys, &[x0, xi0], t, 1e-10).unwrap();
        assert!((end[0] - x0 * (lambda * t).exp()).abs() < 1e-8);
        assert!((end[1] - xi0 * (-lambda * t).exp()).abs() < 1e-8);
    }

    #[test]
    fn neck_geodesic_stays_on_neck() {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let traj = flow(&sys, &[0.0, 0.0, 0.0, 1.0], 2.0 * PI, 1e-10).unwrap();
        assert!(traj.states.iter().all(|z| z[0].abs() <= 1e-9 && z[2].abs() <= 1e-9));
        let end = traj.end();
        assert!(wrap_angle(end[1]).abs() < 1e-8 && (end[1] - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"model":"surface_of_revolution","profile":"cosh","R":3.0}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, ModelSpec::SurfaceOfRevolution { profile: WarpProfile::Cosh, half_length: 3.0 });
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let json = r#"{"model":"bump_potential","bumps":[{"center":[1.0,0.0],"height":1.0,"width":0.5}]}"#;
        assert!(HamiltonianSystem::from_spec(&serde_json::from_str(json).unwrap()).is_ok());
    }

    #[test]
    fn custom_symbol_uses_difference_hessian() {
        let sys = HamiltonianSystem::custom(
            1,
            CustomSymbol {
                p: Arc::new(|z: &[f64]| 0.5 * z[1] * z[1] + z[0].powi(4) / 4.0),
                gradient: Arc::new(|z: &[f64]| vec![z[0].powi(3), z[1]]),
                hessian: None,
            },
        );
        let h = sys.hessian(&[0.7, 0.1]);
        assert!((h[(0, 0)] - 3.0 * 0.49).abs() < 1e-8 && (h[(1, 1)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn energy_drift_over_long_times() {
        let tol = 1e-8;
        for sys in systems() {
            let start = match sys.spec() {
                Some(ModelSpec::Hyperbolic { .. }) => vec![0.5, 0.4],
                Some(ModelSpec::SurfaceOfRevolution { .. }) => vec![0.3, 0.0, 0.6, 0.8 * 0.3f64.cosh()],
                _ => point(&sys, &[0.3, -0.2, 0.4, 0.5]),
            };
            // the hyperbolic model runs to x ~ 1e30, keep t moderate there
            let t = if matches!(sys.spec(), Some(ModelSpec::Hyperbolic { .. })) { 20.0 } else { 100.0 };
            let traj = flow(&sys, &start, t, tol).unwrap();
            assert!(traj.energy_drift() <= 10.0 * tol, "{:?}: drift {}", sys.model, traj.energy_drift());
        }
    }

    #[test]
    fn monodromy_of_harmonic_is_rotation() {
        let sys = HamiltonianSystem::harmonic(1);
        let (_, m) = flow_with_monodromy(&sys, &[1.0, 0.5], 1.0, 1e-11).unwrap();
        let expect = Mat::from_row_slice(2, 2, &[1f64.cos(), 1f64.sin(), -1f64.sin(), 1f64.cos()]);
        assert!(crate::linalg::max_abs(&(m - expect)) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gradient_matches_differences(which in 0usize..5, u in prop::collection::vec(-1.5f64..1.5, 4)) {
            let sys = &systems()[which];
            let z = point(sys, &u);
            let g = sys.gradient(&z);
            let h = sys.hessian(&z);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for j in 0..z.len() {
                let step = 1e-6;
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += step;
                zm[j] -= step;
                let fd = (sys.p(&zp) - sys.p(&zm)) / (2.0 * step);
                prop_assert!((fd - g[j]).abs() <= 1e-5 * scale);
                let (gp, gm) = (sys.gradient(&zp), sys.gradient(&zm));
                for i in 0..z.len() {
                    let fdh = (gp[i] - gm[i]) / (2.0 * step);
                    prop_assert!((fdh - h[(i, j)]).abs() <= 1e-5 * scale.max(h.amax()));
                }
            }
        }

        #[test]
        fn reversal_returns_to_start(which in 0usize..5, u in prop::collection::vec(-1.0f64..1.0, 4), t in 0.5f64..8.0) {
            let sys = &systems()[which];
            let z = point(sys, &u);
            let tol = 1e-9;
            let there = flow_to(sys, &z, t, tol).unwrap();
            let back = flow_to(sys, &there, -t, tol).unwrap();
            let scale = z.iter().chain(&there).fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in back.iter().zip(&z) {
                prop_assert!((a - b).abs() <= 10.0 * tol * scale, "{a} vs {b}");
            }
        }
    }
}
