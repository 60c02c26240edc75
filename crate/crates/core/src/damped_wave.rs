//! Damped waves `(∂_t^2 - Δ + 2a ∂_t) u = 0` on a periodic surface of
//! revolution, one angular mode `e^{ikθ}` at a time.
//!
//! Grid functions live on `r_i = -P + i h`, `h = 2P/N` with `N` odd. The
//! mode operator `Δ_k = -(1/f)(f v')' + k^2/f^2` is discretized with the
//! Fourier derivative and conjugated by `sqrt(h f)`, so the `f`-weighted
//! `L^2` norm becomes the Euclidean one and `Δ_k` a symmetric matrix `S`.
//! Second-order differences are not used: their group velocity vanishes at
//! the grid scale, which produces spurious undamped modes parked on the neck.

use crate::flow::RadialDamping;
use crate::linalg::{eigenvalues, expm, sym_eigen_sorted, Mat, Vector};
use crate::profile::WarpProfile;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MIN_GRID: usize = 32;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DampedWaveError {
    #[error("grid of {0} points is below the minimum {MIN_GRID}")]
    GridTooCoarse(usize),
    #[error("companion linearization unreliable: {0}")]
    LinearizationIllConditioned(String),
    #[error("time stepping failed: {0}")]
    StepFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Damping {
    Radial(RadialDamping),
    Constant { value: f64 },
    Off,
}

impl Damping {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Damping::Radial(d) => d.eval(r),
            Damping::Constant { value } => *value,
            Damping::Off => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampedWaveProblem {
    pub profile: WarpProfile,
    /// `r` is periodic with period `2P`
    pub half_period: f64,
    pub damping: Damping,
    pub n_grid: usize,
    pub modes: Vec<usize>,
    pub epsilon: f64,
}

impl DampedWaveProblem {
    /// Periodic cosh neck with damping on `|r| ≥ r0`, reaching full
    /// strength at `|r| = r0 + 0.5`.
    pub fn neck(half_period: f64, r0: f64, strength: f64, n_grid: usize, k_max: usize, epsilon: f64) -> Self {
        Self {
            profile: WarpProfile::PeriodicCosh { half_period },
            half_period,
            damping: Damping::Radial(RadialDamping { inner: r0, outer: r0 + 0.5, strength }),
            n_grid,
            modes: (0..=k_max).collect(),
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), DampedWaveError> {
        if self.n_grid < MIN_GRID {
            return Err(DampedWaveError::GridTooCoarse(self.n_grid));
        }
        if self.n_grid % 2 == 0 {
            // an even grid carries the sawtooth mode, which the spectral
            // derivative annihilates and which then never propagates
            return Err(DampedWaveError::InvalidParameter("n_grid must be odd".into()));
        }
        if !(self.half_period > 0.0) || !(self.epsilon >= 0.0) {
            return Err(DampedWaveError::InvalidParameter("half_period must be positive and epsilon nonnegative".into()));
        }
        match self.profile {
            WarpProfile::Flat => {}
            WarpProfile::PeriodicCosh { half_period } if (half_period - self.half_period).abs() <= 1e-12 * half_period => {}
            _ => return Err(DampedWaveError::InvalidParameter("profile must be periodic with the problem's period".into())),
        }
        match self.damping {
            Damping::Radial(d) => {
                if !(d.strength >= 0.0 && d.inner > 0.0 && d.outer > d.inner && d.outer < self.half_period) {
                    return Err(DampedWaveError::InvalidParameter("need 0 < inner < outer < half_period and strength ≥ 0".into()));
                }
            }
            Damping::Constant { value } if value < 0.0 => {
                return Err(DampedWaveError::InvalidParameter("damping must be nonnegative".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_grid).map(|i| -self.half_period + i as f64 * h).collect()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.n_grid as f64
    }

    pub fn max_damping(&self) -> f64 {
        self.grid().iter().map(|&r| self.damping.eval(r)).fold(0.0, f64::max)
    }
}

/// `P(τ) = -τ^2 + S + 2iτ diag(a)` for one angular mode.
///
/// Dynamics and eigenfrequencies use the Galerkin restriction to the lowest
/// two thirds of the eigenvectors of `S`, where the pencil reads
/// `-τ^2 + diag(μ^2) + 2iτ V^T A V`. The discarded top of the collocation
/// spectrum is aliased and carries spuriously weakly damped modes.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub k: usize,
    /// `sqrt(h f_i)`, the conjugation to Euclidean coordinates
    pub weight: Vector,
    pub stiffness: Mat,
    /// `a` on the grid
    pub damping: Vector,
    /// eigenvalues `μ^2` of `S`, ascending, and orthonormal eigenvectors
    pub mu2: Vector,
    pub basis: Mat,
    /// number of eigenvectors kept for the dynamics
    pub retained: usize,
    /// `V^T diag(a) V` on the retained eigenvectors
    pub modal_damping: Mat,
}

/// Fourier differentiation matrix on `N` (odd) equispaced points of a
/// period `length`.
fn fourier_derivative(n: usize, length: f64) -> Mat {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let scale = 2.0 * std::f64::consts::PI / length;
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            scale * 0.5 * sign / (0.5 * d * step).sin()
        }
    })
}

/// `S = B^T B + k^2 F^{-2}` with `B = F^{1/2} D F^{-1/2}`, the conjugated
/// spectral discretization of `-(1/f) D(f D) + k^2/f^2`.
pub fn assemble_pencil(problem: &DampedWaveProblem, k: usize) -> Result<Pencil, DampedWaveError> {
    problem.validate()?;
    let n = problem.n_grid;
    let h = problem.spacing();
    let r = problem.grid();
    let f: Vec<f64> = r.iter().map(|&x| problem.profile.f(x)).collect();
    let weight = Vector::from_iterator(n, f.iter().map(|v| (h * v).sqrt()));
    let d = fourier_derivative(n, 2.0 * problem.half_period);
    let b = Mat::from_fn(n, n, |i, j| (f[i] / f[j]).sqrt() * d[(i, j)]);
    let mut s = b.transpose() * &b;
    let kk = (k * k) as f64;
    for i in 0..n {
        s[(i, i)] += kk / (f[i] * f[i]);
    }
    let s = crate::linalg::sym_part(&s);
    let damping = Vector::from_iterator(n, r.iter().map(|&x| problem.damping.eval(x)));
    let (mu2, basis) = sym_eigen_sorted(&s);
    let mu2 = mu2.map(|v| v.max(0.0));
    let retained = 2 * n / 3;
    let v = basis.columns(0, retained);
    let modal_damping = crate::linalg::sym_part(&(v.transpose() * Mat::from_diagonal(&damping) * v));
    Ok(Pencil { k, weight, stiffness: s, damping, mu2, basis, retained, modal_damping })
}

impl Pencil {
    pub fn n(&self) -> usize {
        self.weight.len()
    }

    /// Largest retained `μ^2`.
    pub fn mu2_max(&self) -> f64 {
        self.mu2[self.retained - 1]
    }

    /// `|τ| ≤ max a + sqrt(max a^2 + max μ^2)` for every eigenfrequency.
    pub fn frequency_bound(&self) -> f64 {
        let amax = self.damping.amax();
        amax + (amax * amax + self.mu2_max()).sqrt()
    }

    /// Coefficients of a Euclidean vector on the retained eigenvectors.
    pub fn project(&self, v: &Vector) -> Vector {
        self.basis.columns(0, self.retained).transpose() * v
    }

    /// Euclidean coordinates of grid values.
    pub fn to_euclidean(&self, values: &[f64]) -> Vector {
        Vector::from_iterator(self.n(), values.iter().zip(self.weight.iter()).map(|(v, w)| v * w))
    }

    /// `‖v‖^2_{H^s} = Σ (1 + μ_j^2)^s |⟨e_j, v⟩|^2` for Euclidean `v`.
    pub fn sobolev_norm_sq(&self, v: &Vector, s: f64) -> f64 {
        let c = self.basis.transpose() * v;
        c.iter().zip(self.mu2.iter()).map(|(c, m)| (1.0 + m).powf(s) * c * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfrequencySet {
    pub k: usize,
    /// `[Re τ, Im τ]`
    pub frequencies: Vec<[f64; 2]>,
    /// `max(-min Im τ, max Im τ - 2 max a)`, clipped at 0
    pub strip_violation: f64,
    /// max distance from `-τ̄` to the set
    pub symmetry_residual: f64,
}

impl EigenfrequencySet {
    pub fn taus(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.frequencies.iter().map(|f| Complex64::new(f[0], f[1]))
    }

    /// Smallest `Im τ` among frequencies with `|τ| > 1e-9` (the `τ = 0`
    /// static mode of `k = 0` carries no energy).
    pub fn min_decay(&self) -> f64 {
        self.taus().filter(|t| t.norm() > 1e-9).map(|t| t.im).fold(f64::INFINITY, f64::min)
    }

    /// `min Im τ log⟨Re τ⟩` over `|Re τ| ≥ 1`.
    pub fn log_scaled_min_decay(&self) -> f64 {
        self.taus()
            .filter(|t| t.re.abs() >= 1.0)
            .map(|t| t.im * (1.0 + t.re * t.re).sqrt().ln())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Poles of `P(τ)^{-1}`. With `τ = iσ` the pencil becomes the real problem
/// `σ^2 - 2σ D + diag(μ^2)` (`D = V^T A V`), linearized as
/// `σ [v; w] = [[0, c], [-diag(μ^2)/c, 2D]] [v; w]` with `c = max μ` for
/// balance. Conjugate pairs of `σ` give the
/// `τ ↦ -τ̄` symmetry.
pub fn eigenfrequencies(pencil: &Pencil, max_damping: f64) -> Result<EigenfrequencySet, DampedWaveError> {
    let n = pencil.retained;
    let c = pencil.mu2_max().sqrt().max(1.0);
    let mut comp = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        comp[(i, n + i)] = c;
        comp[(n + i, i)] = -pencil.mu2[i] / c;
        for j in 0..n {
            comp[(n + i, n + j)] = 2.0 * pencil.modal_damping[(i, j)];
        }
    }
    let taus: Vec<Complex64> = eigenvalues(&comp).iter().map(|s| Complex64::new(-s.im, s.re)).collect();
    if taus.iter().any(|t| !t.is_finite()) {
        return Err(DampedWaveError::LinearizationIllConditioned("non-finite eigenvalue".into()));
    }
    let bound = 2.0 * max_damping;
    let strip_violation = taus.iter().map(|t| (-t.im).max(t.im - bound)).fold(0.0, f64::max);
    let symmetry_residual = taus
        .iter()
        .map(|t| {
            let m = -t.conj();
            taus.iter().map(|u| (u - m).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let tol = 1e-8 * pencil.frequency_bound().max(1.0);
    if strip_violation > tol || symmetry_residual > tol {
        return Err(DampedWaveError::LinearizationIllConditioned(format!(
            "strip violation {strip_violation:e}, symmetry residual {symmetry_residual:e}"
        )));
    }
    let mut frequencies: Vec<[f64; 2]> = taus.iter().map(|t| [t.re, t.im]).collect();
    frequencies.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(EigenfrequencySet { k: pencil.k, frequencies, strip_violation, symmetry_residual })
}

/// Initial velocity `∂_t u(0) = f` of one angular mode (`u(0) = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Gaussian { center: f64, width: f64 },
    /// random coefficients on the lowest `band` eigenvectors of `Δ_k`
    RandomBand { band: usize, seed: u64 },
}

impl InitialData {
    fn euclidean(&self, problem: &DampedWaveProblem, pencil: &Pencil) -> Vector {
        match *self {
            InitialData::Gaussian { center, width } => {
                let values: Vec<f64> = problem.grid().iter().map(|&r| (-((r - center) / width).powi(2)).exp()).collect();
                pencil.to_euclidean(&values)
            }
            InitialData::RandomBand { band, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(pencil.k as u64);
                let mut v = Vector::zeros(pencil.n());
                for j in 0..band.min(pencil.n()) {
                    v += pencil.basis.column(j) * rng.random_range(-1.0..1.0);
                }
                v
            }
        }
    }
}

/// Least-squares line through `(t, log E)` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `E ~ exp(intercept - rate t)`
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window_start: f64,
    pub window_end: f64,
}

pub fn fit_log_decay(times: &[f64], energies: &[f64], start: f64, end: f64) -> DecayFit {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energies)
        .filter(|(t, e)| **t >= start && **t <= end && **e > 0.0)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let sty = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>();
    let syy = pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    let slope = sty / stt;
    let sse = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum::<f64>();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 0.0 };
    DecayFit { rate: -slope, intercept: my - slope * mt, r_squared, window_start: start, window_end: end }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    /// `None` for a superposition of modes
    pub k: Option<usize>,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub e0: Vec<f64>,
    pub eeps: Vec<f64>,
    /// `2 ∫_0^t ⟨a ∂_t u, ∂_t u⟩`, by Hermite-corrected trapezoid sums
    pub dissipated: Vec<f64>,
    /// `max_t |E^0(t) - E^0(0) + dissipated(t)| / E^0(0)`
    pub dissipation_residual: f64,
    /// largest one-step increase of `E^0`, relative to `E^0(0)`
    pub max_increase: f64,
    /// largest one-step increase of `E^ε`, relative to `E^ε(0)`
    pub eeps_max_increase: f64,
    pub fit: DecayFit,
}

impl EnergyTrace {
    pub fn csv_header() -> [&'static str; 3] {
        ["t", "E0", "Eeps"]
    }
}

/// Relative increase of `E^0` per step tolerated by [`evolve`].
pub const MONOTONE_TOL: f64 = 1e-8;

/// Time step used when none is given: `0.1 / max|τ|`.
pub fn default_dt(pencils: &[&Pencil]) -> f64 {
    0.1 / pencils.iter().map(|p| p.frequency_bound()).fold(1.0, f64::max)
}

/// Evolves one mode from `u = 0, ∂_t u = f` with the exact propagator
/// `exp(dt G)`, `G = [[0, I], [-diag(μ^2), -2D]]` on the retained modes.
pub fn evolve(problem: &DampedWaveProblem, k: usize, initial: &InitialData, t_max: f64, dt: Option<f64>) -> Result<EnergyTrace, DampedWaveError> {
    let pencil = assemble_pencil(problem, k)?;
    let f = initial.euclidean(problem, &pencil);
    evolve_pencil(&pencil, problem.epsilon, &f, t_max, dt.unwrap_or_else(|| default_dt(&[&pencil])))
}

fn evolve_pencil(pencil: &Pencil, epsilon: f64, f: &Vector, t_max: f64, dt: f64) -> Result<EnergyTrace, DampedWaveError> {
    let m = pencil.retained;
    if !(t_max > 0.0) || !(dt > 0.0) {
        return Err(DampedWaveError::InvalidParameter("t_max and dt must be positive".into()));
    }
    if dt > 0.1 / pencil.frequency_bound() * (1.0 + 1e-12) {
        return Err(DampedWaveError::InvalidParameter(format!("dt = {dt} does not resolve max|τ| = {}", pencil.frequency_bound())));
    }
    let f = pencil.project(f);
    if f.norm() == 0.0 {
        return Err(DampedWaveError::InvalidParameter("initial data vanishes".into()));
    }
    let mu2 = pencil.mu2.rows(0, m);
    let damp = &pencil.modal_damping;
    // modal coordinates y = (c, c') of u = Σ c_j e_j
    let mut g = Mat::zeros(2 * m, 2 * m);
    for i in 0..m {
        g[(i, m + i)] = 1.0;
        g[(m + i, i)] = -mu2[i];
        for j in 0..m {
            g[(m + i, m + j)] = -2.0 * damp[(i, j)];
        }
    }
    let prop = expm(&(g * dt));
    let weights: Vec<f64> = mu2.iter().map(|v| (1.0 + v).powf(epsilon)).collect();
    let steps = (t_max / dt).ceil() as usize;

    let mut y = Vector::zeros(2 * m);
    y.rows_mut(m, m).copy_from(&f);
    let mut times = Vec::with_capacity(steps + 1);
    let mut e0 = Vec::with_capacity(steps + 1);
    let mut eeps = Vec::with_capacity(steps + 1);
    let mut dissipated = Vec::with_capacity(steps + 1);
    // energies, rate 2<a u_t, u_t> and its time derivative 4<a u_t, u_tt>
    let measure = |y: &Vector| {
        let c = y.rows(0, m);
        let d = y.rows(m, m);
        let e = 0.5 * (0..m).map(|j| d[j] * d[j] + mu2[j] * c[j] * c[j]).sum::<f64>();
        let ee = 0.5 * (0..m).map(|j| weights[j] * (d[j] * d[j] + mu2[j] * c[j] * c[j])).sum::<f64>();
        let ad = damp * d;
        let acc = -c.component_mul(&mu2) - &ad * 2.0;
        (e, ee, 2.0 * ad.dot(&d), 4.0 * ad.dot(&acc))
    };
    let (mut e, mut ee, mut rate, mut drate) = measure(&y);
    times.push(0.0);
    e0.push(e);
    eeps.push(ee);
    dissipated.push(0.0);
    let (e_init, ee_init) = (e, ee);
    let mut total = 0.0;
    let mut residual: f64 = 0.0;
    let mut max_increase: f64 = 0.0;
    let mut eeps_max_increase: f64 = 0.0;
    for step in 1..=steps {
        y = &prop * &y;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(DampedWaveError::StepFailure(format!("non-finite state at step {step}")));
        }
        let (e1, ee1, rate1, drate1) = measure(&y);
        total += 0.5 * dt * (rate + rate1) + dt * dt / 12.0 * (drate - drate1);
        residual = residual.max((e1 - e_init + total).abs() / e_init);
        max_increase = max_increase.max((e1 - e) / e_init);
        eeps_max_increase = eeps_max_increase.max((ee1 - ee) / ee_init);
        (e, ee, rate, drate) = (e1, ee1, rate1, drate1);
        times.push(step as f64 * dt);
        e0.push(e);
        eeps.push(ee);
        dissipated.push(total);
    }
    if max_increase > MONOTONE_TOL {
        return Err(DampedWaveError::StepFailure(format!("energy increased by {max_increase:e} of its initial value")));
    }
    let t_end = *times.last().unwrap();
    let fit = fit_log_decay(&times, &e0, 0.25 * t_end, t_end);
    Ok(EnergyTrace { k: Some(pencil.k), epsilon, times, e0, eeps, dissipated, dissipation_residual: residual, max_increase, eeps_max_increase, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDecay {
    pub k: usize,
    pub min_decay: f64,
    pub fitted_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub epsilon: f64,
    pub modes: Vec<ModeDecay>,
    /// superposed trace, data normalized to `‖f_k‖_{H^ε} = 1` per mode
    pub trace: EnergyTrace,
    /// `Σ_k ‖f_k‖^2_{H^ε}`
    pub data_norm_sq: f64,
    /// smallest `C` with `E^0(t) ≤ C e^{-t/C} ‖f‖^2_{H^ε}` on the trace
    pub envelope_constant: Option<f64>,
}

/// Smallest `C ∈ [1, 1e8]` with `E(t) ≤ C e^{-t/C} norm_sq` for all samples.
pub fn envelope_constant(times: &[f64], energies: &[f64], norm_sq: f64) -> Option<f64> {
    let holds = |c: f64| times.iter().zip(energies).all(|(t, e)| *e <= c * (-t / c).exp() * norm_sq);
    let (mut lo, mut hi) = (0.0f64, 8.0f64 * std::f64::consts::LN_10);
    if holds(1.0) {
        return Some(1.0);
    }
    if !holds(hi.exp()) {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi.exp())
}

/// Superposes all modes of `problem`, fits `log E^0` on `[t_max/4, t_max]`
/// and records the per-mode oracle `2 min Im τ`.
pub fn decay_report(problem: &DampedWaveProblem, initial: &InitialData, t_max: f64) -> Result<DecayReport, DampedWaveError> {
    problem.validate()?;
    if problem.modes.is_empty() {
        return Err(DampedWaveError::InvalidParameter("no modes".into()));
    }
    let pencils: Vec<Pencil> = problem.modes.par_iter().map(|&k| assemble_pencil(problem, k)).collect::<Result<_, _>>()?;
    let dt = default_dt(&pencils.iter().collect::<Vec<_>>());
    let amax = problem.max_damping();
    let per_mode: Vec<(EnergyTrace, f64)> = pencils
        .par_iter()
        .map(|p| {
            let f = initial.euclidean(problem, p);
            let f = &f / p.sobolev_norm_sq(&f, problem.epsilon).sqrt();
            let trace = evolve_pencil(p, problem.epsilon, &f, t_max, dt)?;
            let decay = eigenfrequencies(p, amax)?.min_decay();
            Ok((trace, decay))
        })
        .collect::<Result<_, DampedWaveError>>()?;

    let first = &per_mode[0].0;
    let len = first.times.len();
    let mut trace = EnergyTrace {
        k: None,
        epsilon: problem.epsilon,
        times: first.times.clone(),
        e0: vec![0.0; len],
        eeps: vec![0.0; len],
        dissipated: vec![0.0; len],
        dissipation_residual: 0.0,
        max_increase: 0.0,
        eeps_max_increase: 0.0,
        fit: first.fit,
    };
    for (t, _) in &per_mode {
        for i in 0..len {
            trace.e0[i] += t.e0[i];
            trace.eeps[i] += t.eeps[i];
            trace.dissipated[i] += t.dissipated[i];
        }
    }
    let (e_init, ee_init) = (trace.e0[0], trace.eeps[0]);
    for i in 1..len {
        trace.dissipation_residual = trace.dissipation_residual.max((trace.e0[i] - e_init + trace.dissipated[i]).abs() / e_init);
        trace.max_increase = trace.max_increase.max((trace.e0[i] - trace.e0[i - 1]) / e_init);
        trace.eeps_max_increase = trace.eeps_max_increase.max((trace.eeps[i] - trace.eeps[i - 1]) / ee_init);
    }
    let t_end = trace.times[len - 1];
    trace.fit = fit_log_decay(&trace.times, &trace.e0, 0.25 * t_end, t_end);
    let data_norm_sq = per_mode.len() as f64;
    Ok(DecayReport {
        epsilon: problem.epsilon,
        modes: per_mode.iter().map(|(t, d)| ModeDecay { k: t.k.unwrap_or(0), min_decay: *d, fitted_rate: t.fit.rate }).collect(),
        envelope_constant: envelope_constant(&trace.times, &trace.e0, data_norm_sq),
        trace,
        data_norm_sq,
    })
}
