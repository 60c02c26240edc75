use super::{check_start, integrator_for, Control, FlowError, HamiltonianSystem, ModelSpec};
use crate::resolvent::smooth_step;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `strength` on `|r| ≥ outer`, zero on `|r| ≤ inner`, smooth in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDamping {
    pub inner: f64,
    pub outer: f64,
    pub strength: f64,
}

impl RadialDamping {
    pub fn eval(&self, r: f64) -> f64 {
        self.strength * smooth_step((r.abs() - self.inner) / (self.outer - self.inner))
    }
}

/// `(1/T) ∫_0^T a(exp(t H_p) start) dt`, integrated as an extra ODE component.
pub fn trajectory_average<A>(sys: &HamiltonianSystem, a: A, start: &[f64], t: f64, tol: f64) -> Result<f64, FlowError>
where
    A: Fn(&[f64]) -> f64,
{
    check_start(sys, start, tol)?;
    if !(t > 0.0) {
        return Err(FlowError::InvalidParameter("T must be positive".into()));
    }
    let d = sys.phase_dim();
    let mut y0 = start.to_vec();
    y0.push(0.0);
    let (_, y) = integrator_for(tol).integrate(
        |_, y, dy| {
            dy[..d].copy_from_slice(&sys.hamilton_field(&y[..d]));
            dy[d] = a(&y[..d]);
        },
        0.0,
        &y0,
        t,
        |_| Control::Continue,
    )?;
    Ok(y[d] / t)
}

/// Phase-space region excluded from the control check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Neighborhood {
    None,
    /// On a surface of revolution: `|r| < r_max` and `||c| - c0| < c_tol`
    /// for the Clairaut constant `c = η`.
    ClairautBand { r_max: f64, c0: f64, c_tol: f64 },
}

impl Neighborhood {
    pub fn contains(&self, z: &[f64]) -> bool {
        match *self {
            Neighborhood::None => false,
            Neighborhood::ClairautBand { r_max, c0, c_tol } => z[0].abs() < r_max && (z[3].abs() - c0).abs() < c_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlWitness {
    pub index: usize,
    pub point: Vec<f64>,
    /// signed time of the first visit to `{a > 0}` within `|t| ≤ T`
    pub witness_time: Option<f64>,
    /// forward average `⟨a⟩_T` at the sample
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub samples: usize,
    pub t_max: f64,
    pub seed: u64,
    pub controlled_fraction: f64,
    pub min_average: f64,
    /// largest `|witness_time|` over controlled samples
    pub max_witness_time: f64,
    pub failures: Vec<String>,
    pub witnesses: Vec<ControlWitness>,
}

/// Unit-speed point (`p = 1/2`) drawn from the sampling box of the model.
fn sample_point(sys: &HamiltonianSystem, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, FlowError> {
    match sys.spec() {
        Some(ModelSpec::SurfaceOfRevolution { profile, half_length }) => {
            let r = rng.random_range(-half_length..=*half_length);
            let theta = rng.random_range(0.0..2.0 * PI);
            let phi = rng.random_range(0.0..2.0 * PI);
            Ok(vec![r, theta, phi.cos(), profile.f(r) * phi.sin()])
        }
        Some(ModelSpec::Harmonic { n }) => {
            // uniform direction on the energy sphere |z| = 1
            let mut z: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            loop {
                let s = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if s > 1e-3 && s <= 1.0 {
                    return Ok(z.iter().map(|v| v / s).collect());
                }
                z = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            }
        }
        _ => Err(FlowError::InvalidParameter("control sampling is defined for surfaces of revolution and oscillators".into())),
    }
}

/// Time of the first visit to `{a > 0}` along the flow in direction of
/// `t_end`, checked on each step and at interior dense-output nodes.
fn first_visit<A>(sys: &HamiltonianSystem, a: &A, start: &[f64], t_end: f64, tol: f64) -> Result<Option<f64>, FlowError>
where
    A: Fn(&[f64]) -> f64,
{
    if a(start) > 0.0 {
        return Ok(Some(0.0));
    }
    let mut hit = None;
    integrator_for(tol).integrate(
        |_, z, dz| dz.copy_from_slice(&sys.hamilton_field(z)),
        0.0,
        start,
        t_end,
        |step| {
            for j in 1..=4 {
                let t = step.t0 + (step.t1 - step.t0) * j as f64 / 4.0;
                let z = if j == 4 { step.y1.to_vec() } else { step.eval(t) };
                if a(&z) > 0.0 {
                    hit = Some(t);
                    return Control::Stop;
                }
            }
            Control::Continue
        },
    )?;
    Ok(hit)
}

/// Samples `samples` unit-speed points outside `v`, deterministically from
/// `seed` (stream `i` of a ChaCha8 generator for sample `i`), and checks that
/// each trajectory meets `{a > 0}` within `|t| ≤ t_max`.
pub fn check_geometric_control<A>(sys: &HamiltonianSystem, a: A, v: &Neighborhood, t_max: f64, samples: usize, seed: u64, tol: f64) -> ControlReport
where
    A: Fn(&[f64]) -> f64 + Sync,
{
    let results: Vec<Result<ControlWitness, String>> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut point = sample_point(sys, &mut rng).map_err(|e| e.to_string())?;
            let mut tries = 0;
            while v.contains(&point) {
                tries += 1;
                if tries > 100_000 {
                    return Err(format!("sample {index}: could not leave the excluded neighbourhood"));
                }
                point = sample_point(sys, &mut rng).map_err(|e| e.to_string())?;
            }
            let forward = first_visit(sys, &a, &point, t_max, tol).map_err(|e| format!("sample {index}: {e}"))?;
            let witness_time = match forward {
                Some(t) => Some(t),
                None => first_visit(sys, &a, &point, -t_max, tol).map_err(|e| format!("sample {index}: {e}"))?,
            };
            let average = trajectory_average(sys, &a, &point, t_max, tol).map_err(|e| format!("sample {index}: {e}"))?;
            Ok(ControlWitness { index, point, witness_time, average })
        })
        .collect();
    let mut witnesses = Vec::with_capacity(samples);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(w) => witnesses.push(w),
            Err(e) => failures.push(e),
        }
    }
    let controlled = witnesses.iter().filter(|w| w.witness_time.is_some()).count();
    ControlReport {
        samples,
        t_max,
        seed,
        controlled_fraction: if samples == 0 { 0.0 } else { controlled as f64 / samples as f64 },
        min_average: witnesses.iter().map(|w| w.average).fold(f64::INFINITY, f64::min),
        max_witness_time: witnesses.iter().filter_map(|w| w.witness_time).map(f64::abs).fold(0.0, f64::max),
        failures,
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::WarpProfile;

    fn neck_band() -> Neighborhood {
        Neighborhood::ClairautBand { r_max: 0.2, c0: 1.0, c_tol: 0.01 }
    }

    #[test]
    fn sine_squared_mean() {
        // x = cos t, ξ = -sin t
        let sys = HamiltonianSystem::harmonic(1);
        let avg = trajectory_average(&sys, |z: &[f64]| z[1] * z[1], &[1.0, 0.0], 2.0 * PI, 1e-12).unwrap();
        assert!((avg - 0.5).abs() < 1e-10, "{avg}");
    }

    #[test]
    fn constant_average_is_exact() {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let avg = trajectory_average(&sys, |_: &[f64]| 0.37, &[0.4, 1.0, 0.6, 0.8 * 0.4f64.cosh()], 12.0, 1e-8).unwrap();
        assert!((avg - 0.37).abs() < 1e-13);
    }

    #[test]
    fn meridian_average_matches_quadrature() {
        // along a meridian r(t) = r0 + t, so the average is a 1D integral of a(r)
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let damp = RadialDamping { inner: 0.5, outer: 1.0, strength: 1.0 };
        let (r0, t) = (-2.0, 10.0);
        let avg = trajectory_average(&sys, |z: &[f64]| damp.eval(z[0]), &[r0, 0.0, 1.0, 0.0], t, 1e-9).unwrap();
        let n = 200_000;
        let h = t / n as f64;
        let oracle = (0..n).map(|i| damp.eval(r0 + (i as f64 + 0.5) * h)).sum::<f64>() * h / t;
        assert!(avg > 0.0);
        assert!((avg - oracle).abs() < 1e-6, "{avg} vs {oracle}");
    }

    #[test]
    fn global_and_zero_damping() {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let full = check_geometric_control(&sys, |_: &[f64]| 1.0, &neck_band(), 5.0, 20, 3, 1e-8);
        assert_eq!(full.controlled_fraction, 1.0);
        assert!((full.min_average - 1.0).abs() < 1e-12);
        let none = check_geometric_control(&sys, |_: &[f64]| 0.0, &neck_band(), 5.0, 20, 3, 1e-8);
        assert_eq!(none.controlled_fraction, 0.0);
        assert!(none.failures.is_empty());
    }

    #[test]
    fn samples_are_reproducible_and_outside_band() {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let damp = RadialDamping { inner: 0.5, outer: 1.0, strength: 1.0 };
        let a = |z: &[f64]| damp.eval(z[0]);
        let r1 = check_geometric_control(&sys, a, &neck_band(), 20.0, 40, 11, 1e-8);
        let r2 = check_geometric_control(&sys, a, &neck_band(), 20.0, 40, 11, 1e-8);
        assert_eq!(r1, r2);
        for w in &r1.witnesses {
            assert!(!neck_band().contains(&w.point));
            assert!((sys.p(&w.point) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn neck_itself_is_not_controlled() {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let damp = RadialDamping { inner: 0.5, outer: 1.0, strength: 1.0 };
        let hit = first_visit(&sys, &|z: &[f64]| damp.eval(z[0]), &[0.0, 0.0, 0.0, 1.0], 50.0, 1e-8).unwrap();
        assert_eq!(hit, None);
    }
}
