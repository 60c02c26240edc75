use super::{flow_with_monodromy, FlowError, HamiltonianSystem};
use crate::linalg::{eigenvalues, standard_symplectic, svd, Mat, Vector};
use crate::symplectic::{classify, ClassifyMode, SpectrumClassification, SymplecticError, Tolerances};
use serde::{Deserialize, Serialize};

impl From<SymplecticError> for FlowError {
    fn from(e: SymplecticError) -> Self {
        FlowError::InvalidParameter(format!("monodromy classification: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitOptions {
    /// integration tolerance of the shooting flows
    pub tol: f64,
    pub max_iterations: usize,
    /// Newton stops once the shooting residual is below this
    pub residual_tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 40, residual_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbit {
    pub point: Vec<f64>,
    pub period: f64,
    pub energy: f64,
    /// unit normal of the section hyperplane through the initial guess
    pub section_normal: Vec<f64>,
    /// `|Φ_T(point) - point|`
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    /// linearized return map on a symplectic basis of the section inside the
    /// energy shell
    #[serde(with = "crate::io::rows")]
    pub ds0: Mat,
    #[serde(with = "crate::io::rows")]
    pub monodromy: Mat,
    pub classification: SpectrumClassification,
    /// eigenvalues of `ds0` as `[re, im]`
    pub multipliers: Vec<[f64; 2]>,
    pub det: f64,
    /// `max |dS0^T J dS0 - J|`
    pub symplectic_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shooting_residual(sys: &HamiltonianSystem, z: &[f64], t: f64, guess: &[f64], normal: &[f64], energy: f64, tol: f64) -> Result<(Vec<f64>, Vec<f64>, Mat), FlowError> {
    let (end, m) = flow_with_monodromy(sys, z, t, tol)?;
    let mut r = sys.difference(&end, z);
    r.push(dot(normal, &sys.difference(z, guess)));
    r.push(sys.p(z) - energy);
    Ok((r, end, m))
}

/// Newton shooting for a periodic orbit through the hyperplane orthogonal to
/// `H_p(guess)`, on the energy shell of `guess`. The period is confined to
/// `[T0/4, 4 T0]`; iterates that need to leave it count as non-convergence
/// (otherwise `T -> 0` solves the shooting equations trivially).
pub fn find_closed_orbit(sys: &HamiltonianSystem, guess: &[f64], period_guess: f64, opts: &OrbitOptions) -> Result<ClosedOrbit, FlowError> {
    let d = sys.phase_dim();
    if guess.len() != d || !(period_guess > 0.0) {
        return Err(FlowError::InvalidParameter("guess must be a phase point and the period positive".into()));
    }
    let v0 = sys.hamilton_field(guess);
    let speed = norm(&v0);
    if !(speed > 1e-10 * norm(&sys.gradient(guess)).max(1.0)) {
        return Err(FlowError::SectionNotTransverse(format!("|H_p| = {speed:e} at the guess")));
    }
    let normal: Vec<f64> = v0.iter().map(|v| v / speed).collect();
    let energy = sys.p(guess);

    let mut z = guess.to_vec();
    let mut t = period_guess;
    let (mut r, mut end, mut m) = shooting_residual(sys, &z, t, guess, &normal, energy, opts.tol)?;
    for it in 0..opts.max_iterations {
        let rn = norm(&r);
        if rn <= opts.residual_tol {
            return Ok(ClosedOrbit { residual: norm(&sys.difference(&end, &z)), point: z, period: t, energy, section_normal: normal, iterations: it });
        }
        let mut jac = Mat::zeros(d + 2, d + 1);
        let field_end = sys.hamilton_field(&end);
        let grad = sys.gradient(&z);
        for i in 0..d {
            for j in 0..d {
                jac[(i, j)] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, d)] = field_end[i];
            jac[(d, i)] = normal[i];
            jac[(d + 1, i)] = grad[i];
        }
        let f = svd(&jac);
        let cutoff = 1e-12 * f.singular_values[0];
        let utr = f.u.transpose() * Vector::from_column_slice(&r);
        let mut step = Vector::zeros(d + 1);
        for k in 0..f.singular_values.len() {
            let s = f.singular_values[k];
            if s > cutoff {
                step += f.v.column(k) * (utr[k] / s);
            }
        }
        // backtracking on the residual norm
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..8 {
            let z_new: Vec<f64> = (0..d).map(|i| z[i] - lambda * step[i]).collect();
            let t_new = t - lambda * step[d];
            if t_new >= 0.25 * period_guess && t_new <= 4.0 * period_guess && z_new.iter().all(|v| v.is_finite()) {
                if let Ok((r_new, end_new, m_new)) = shooting_residual(sys, &z_new, t_new, guess, &normal, energy, opts.tol) {
                    if norm(&r_new) < rn {
                        accepted = Some((z_new, t_new, r_new, end_new, m_new));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((z_new, t_new, r_new, end_new, m_new)) => {
                z = z_new;
                t = t_new;
                r = r_new;
                end = end_new;
                m = m_new;
            }
            None => return Err(FlowError::MaxIterations(it + 1, rn)),
        }
    }
    Err(FlowError::MaxIterations(opts.max_iterations, norm(&r)))
}

/// Basis `W` of the span of `vs` with `W^T J W = J_k` (columns
/// `e_1..e_k, f_1..f_k`).
fn symplectic_basis(mut rest: Vec<Vector>, j: &Mat) -> Result<Mat, FlowError> {
    let k = rest.len() / 2;
    let mut es = Vec::with_capacity(k);
    let mut fs = Vec::with_capacity(k);
    for _ in 0..k {
        let e = rest.remove(0);
        let je: Vector = j.transpose() * &e;
        let (idx, w) = rest
            .iter()
            .enumerate()
            .map(|(i, r)| (i, je.dot(r)))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .ok_or_else(|| FlowError::SectionNotTransverse("odd section dimension".into()))?;
        if w.abs() < 1e-12 {
            return Err(FlowError::SectionNotTransverse("restricted form is degenerate".into()));
        }
        let f = rest.remove(idx) / (-w);
        let s = (f.norm() / e.norm()).sqrt();
        let (e, f) = (e * s, f / s);
        for r in rest.iter_mut() {
            let beta = e.dot(&(j * &*r));
            let alpha = -f.dot(&(j * &*r));
            *r += &e * alpha + &f * beta;
        }
        es.push(e);
        fs.push(f);
    }
    let cols: Vec<Vector> = es.into_iter().chain(fs).collect();
    Ok(Mat::from_columns(&cols))
}

/// Derivative of the first-return map on the section
/// `{⟨∇p, w⟩ = 0, ⟨H_p, w⟩ = 0}` at `orbit.point`.
pub fn linearized_poincare_map(sys: &HamiltonianSystem, orbit: &ClosedOrbit, opts: &OrbitOptions) -> Result<MonodromyData, FlowError> {
    let d = sys.phase_dim();
    let z = &orbit.point;
    let grad = Vector::from_vec(sys.gradient(z));
    let field = Vector::from_vec(sys.hamilton_field(z));
    let fn2 = field.norm_squared();
    if fn2 <= 1e-20 || grad.norm_squared() <= 1e-20 {
        return Err(FlowError::SectionNotTransverse("orbit point is critical for p".into()));
    }
    let (_, m) = flow_with_monodromy(sys, z, orbit.period, opts.tol)?;

    let u = Mat::from_columns(&[grad.normalize(), field.normalize()]);
    let proj = Mat::identity(d, d) - &u * u.transpose();
    let f = svd(&proj);
    let vs: Vec<Vector> = (0..d - 2).map(|i| f.u.column(i).into_owned()).collect();
    let j = standard_symplectic(d / 2);
    let w = symplectic_basis(vs, &j)?;
    let jk = standard_symplectic(d / 2 - 1);

    let mut mw = &m * &w;
    for c in 0..mw.ncols() {
        let along = field.dot(&mw.column(c)) / fn2;
        let col = mw.column(c) - &field * along;
        mw.set_column(c, &col);
    }
    let ds0 = -(&jk * w.transpose() * &j * mw);
    let symplectic_residual = (ds0.transpose() * &jk * &ds0 - &jk).amax();
    let classification = classify(&ds0, ClassifyMode::PoincareMap, &Tolerances::default())?;
    let multipliers = eigenvalues(&ds0).iter().map(|z| [z.re, z.im]).collect();
    Ok(MonodromyData { det: ds0.determinant(), ds0, monodromy: m, classification, multipliers, symplectic_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::WarpProfile;
    use std::f64::consts::PI;

    fn cosh_neck() -> (HamiltonianSystem, ClosedOrbit) {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let r0: f64 = 0.05;
        let orbit = find_closed_orbit(&sys, &[r0, 0.0, 0.0, r0.cosh()], 2.0 * PI + 0.2, &OrbitOptions::default()).unwrap();
        (sys, orbit)
    }

    #[test]
    fn cosh_neck_orbit_and_period() {
        let (sys, orbit) = cosh_neck();
        // the neck geodesic has length 2π f(0)
        assert!((orbit.period - 2.0 * PI).abs() < 1e-6, "period {}", orbit.period);
        assert!(orbit.point[0].abs() < 1e-8 && orbit.point[2].abs() < 1e-8);
        assert!(orbit.residual <= 1e-8);
        let traj = super::super::flow(&sys, &orbit.point, orbit.period, 1e-10).unwrap();
        assert!(traj.energy_drift() <= 1e-8);
    }

    #[test]
    fn cosh_neck_multipliers() {
        let (sys, orbit) = cosh_neck();
        let data = linearized_poincare_map(&sys, &orbit, &OrbitOptions::default()).unwrap();
        // Jacobi fields along the neck solve J'' = J
        let expect = [(2.0 * PI).exp(), (-2.0 * PI).exp()];
        let mut mus: Vec<f64> = data.multipliers.iter().map(|m| m[0]).collect();
        mus.sort_by(|a, b| b.total_cmp(a));
        for (mu, e) in mus.iter().zip(expect) {
            assert!((mu / e - 1.0).abs() < 1e-3, "{mu} vs {e}");
        }
        assert!((data.det - 1.0).abs() < 1e-6);
        assert!(data.symplectic_residual <= 1e-6);
        assert!(data.classification.is_loxodromic);
        assert_eq!(data.classification.n_hr, 1);
        let fund = Mat::from_row_slice(2, 2, &[(2.0 * PI).cosh(), (2.0 * PI).sinh(), (2.0 * PI).sinh(), (2.0 * PI).cosh()]);
        assert!((data.ds0.trace() - fund.trace()).abs() < 1e-3 * fund.trace());
    }

    #[test]
    fn flat_cylinder_is_not_loxodromic() {
        let sys = HamiltonianSystem::surface(WarpProfile::Flat, 3.0);
        let orbit = find_closed_orbit(&sys, &[0.3, 0.0, 0.0, 1.0], 2.0 * PI, &OrbitOptions::default()).unwrap();
        let data = linearized_poincare_map(&sys, &orbit, &OrbitOptions::default()).unwrap();
        assert!(!data.classification.is_loxodromic);
        assert!(data.multipliers.iter().all(|m| ((m[0] * m[0] + m[1] * m[1]).sqrt() - 1.0).abs() < 1e-6));
    }

    fn axis_potential(x: f64, d: f64, w: f64) -> f64 {
        (-(x - d).powi(2) / (w * w)).exp() + (-(x + d).powi(2) / (w * w)).exp()
    }

    /// Period of the one-dimensional oscillation in the axis potential,
    /// `2 ∫ dx / sqrt(2(E - V))` with `x = a sin φ` removing the endpoint
    /// singularities.
    fn axis_period(energy: f64, d: f64, w: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, d);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if axis_potential(mid, d, w) < energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let n = 20000;
        let h = PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let phi = -0.5 * PI + (i as f64 + 0.5) * h;
            let x = a * phi.sin();
            s += a * phi.cos() / (2.0 * (energy - axis_potential(x, d, w))).sqrt();
        }
        2.0 * s * h
    }

    #[test]
    fn double_bump_axis_orbit() {
        let (d, w, energy) = (1.0, 0.5, 0.5);
        let sys = HamiltonianSystem::double_bump(d, 1.0, w);
        let xi = (2.0 * (energy - axis_potential(0.0, d, w))).sqrt();
        let oracle = axis_period(energy, d, w);
        let orbit = find_closed_orbit(&sys, &[0.0, 0.0, xi, 0.0], oracle * 1.02, &OrbitOptions::default()).unwrap();
        assert!((orbit.period - oracle).abs() < 1e-6 * oracle, "{} vs {}", orbit.period, oracle);
        let mu = |tol: f64| {
            let opts = OrbitOptions { tol, ..OrbitOptions::default() };
            let data = linearized_poincare_map(&sys, &orbit, &opts).unwrap();
            assert!(data.classification.is_loxodromic && data.classification.n_hr == 1);
            assert!((data.det - 1.0).abs() < 1e-6 && data.symplectic_residual <= 1e-6);
            data.multipliers.iter().map(|m| m[0]).fold(0.0, f64::max)
        };
        let (coarse, fine) = (mu(1e-8), mu(1e-10));
        assert!(fine > 1.0);
        assert!((coarse - fine).abs() <= 1e-4 * fine, "{coarse} vs {fine}");
    }

    #[test]
    fn no_orbit_in_hyperbolic_model() {
        let sys = HamiltonianSystem::hyperbolic(1.0);
        let err = find_closed_orbit(&sys, &[1.0, 1.0], 1.0, &OrbitOptions::default()).unwrap_err();
        assert!(matches!(err, FlowError::MaxIterations(..)), "{err:?}");
    }

    #[test]
    fn equilibrium_guess_is_not_transverse() {
        let sys = HamiltonianSystem::harmonic(1);
        let err = find_closed_orbit(&sys, &[0.0, 0.0], 1.0, &OrbitOptions::default()).unwrap_err();
        assert!(matches!(err, FlowError::SectionNotTransverse(_)));
    }

    #[test]
    fn harmonic_two_dimensional_map_is_rotation() {
        // isotropic oscillator: every orbit closes at 2π and the return map is
        // the identity on the section
        let sys = HamiltonianSystem::harmonic(2);
        let orbit = find_closed_orbit(&sys, &[1.0, 0.0, 0.0, 0.5], 2.0 * PI, &OrbitOptions::default()).unwrap();
        let data = linearized_poincare_map(&sys, &orbit, &OrbitOptions::default()).unwrap();
        assert!((data.ds0.clone() - Mat::identity(2, 2)).amax() < 1e-8);
    }
}
