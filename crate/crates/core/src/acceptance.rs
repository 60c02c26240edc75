//! The acceptance suite: nine criteria with fixed seeds, tolerances and
//! runtime budgets. Shared by the `acceptance` test target and `selftest`.

use crate::damped_wave::{self, DampedWaveProblem, Damping, InitialData};
use crate::flow::{self, HamiltonianSystem, Neighborhood, OrbitOptions, RadialDamping};
use crate::linalg::{expm, max_abs, sym_part, symplectic_residual, Mat, Vector};
use crate::profile::WarpProfile;
use crate::resolvent::{self, AbsorberKind, AbsorbingProfile, HarmonicSymbol};
use crate::spectra::{self, BarrierTopSelection};
use crate::symplectic::random::{conjugated_normal_form, random_chains, random_spd, random_symplectic};
use crate::symplectic::{
    birkhoff_normal_form, escape_rate_form, symplectic_log, symplectic_polar, williamson,
    ChainBlock, HamiltonMatrix, QuadraticHamiltonian, SymplecticError, Tolerances,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{E, PI};
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    /// lines printed with the result that do not affect it
    pub notes: Vec<String>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.seconds < self.budget_seconds
    }

    /// One line: `[PASS] 4 monodromy oracle (0.41 s / 10 s)`.
    pub fn summary_line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!("[{tag}] {} {} ({:.2} s / {} s)", self.id, self.title, self.seconds, self.budget_seconds)
    }

    /// Summary line followed by the checks and notes, indented.
    pub fn report(&self) -> String {
        let mut out = self.summary_line();
        for c in &self.checks {
            out.push_str(&format!("\n    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail));
        }
        if self.seconds >= self.budget_seconds {
            out.push_str(&format!("\n    FAIL runtime {:.2} s exceeds the budget", self.seconds));
        }
        for n in &self.notes {
            out.push_str(&format!("\n    note {n}"));
        }
        out
    }
}

struct Builder {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        Self { checks: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    fn fail(&mut self, name: &str, err: impl std::fmt::Display) {
        self.check(name, false, format!("error: {err}"));
    }
}

fn timed(id: usize, title: &'static str, budget_seconds: f64, body: impl FnOnce(&mut Builder)) -> CriterionResult {
    let start = Instant::now();
    let mut b = Builder::new();
    body(&mut b);
    CriterionResult { id, title, checks: b.checks, notes: b.notes, seconds: start.elapsed().as_secs_f64(), budget_seconds }
}

pub const CRITERIA: usize = 9;

/// Runs one criterion by number (1 to 9).
pub fn run(id: usize) -> Option<CriterionResult> {
    Some(match id {
        1 => symplectic_residuals(),
        2 => log_exp_round_trip(),
        3 => normal_form_recovery(),
        4 => monodromy_oracle(),
        5 => nonconcentration_scaling(),
        6 => resolvent_bounds(),
        7 => harmonic_lower_bound(),
        8 => damped_wave_suite(),
        9 => geometric_control(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=CRITERIA).filter_map(run).collect()
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn symplectic_residuals() -> CriterionResult {
    timed(1, "symplectic residuals", 10.0, |b| {
        let tol = Tolerances::default();
        let (mut t_res, mut w_res, mut radii_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut errors = Vec::new();
        let mut count = 0;
        for m in 1..=4usize {
            let mut r = rng(0x5eed_0001, m as u64);
            for i in 0..200 {
                let q = random_spd(&mut r, 2 * m, 0.2, 5.0);
                let t0 = random_symplectic(&mut r, m, 0.4);
                let moved = sym_part(&(t0.transpose() * &q * &t0));
                let chains = random_chains(&mut r, m, 3);
                let (bm, _) = conjugated_normal_form(&mut r, &chains, 0.25);
                let k = random_symplectic(&mut r, m, 0.4);
                let outcome = (|| -> Result<(), SymplecticError> {
                    let w = williamson(&QuadraticHamiltonian::new(q)?)?;
                    let w2 = williamson(&QuadraticHamiltonian::new(moved)?)?;
                    let hm = HamiltonMatrix::new(bm)?;
                    let nf = birkhoff_normal_form(&hm, None, &tol)?;
                    let pd = symplectic_polar(&k, &tol)?;
                    for t in [&w.transform, &w2.transform, &nf.transform, &pd.q_orth, &pd.p_pos] {
                        t_res = t_res.max(symplectic_residual(&t.entries));
                    }
                    w_res = w_res.max(w.residual).max(w2.residual);
                    for (a, c) in w.radii.iter().zip(&w2.radii) {
                        radii_err = radii_err.max((a - c).abs());
                    }
                    Ok(())
                })();
                count += 1;
                if let Err(e) = outcome {
                    errors.push(format!("m = {m}, sample {i}: {e}"));
                }
            }
        }
        b.check("inputs processed", errors.is_empty(), format!("{count} inputs, {} errors {:?}", errors.len(), errors.first()));
        b.check("max |T^T J T - J|", t_res <= 1e-9, format!("{t_res:.3e} <= 1e-9"));
        b.check("williamson reconstruction", w_res <= 1e-9, format!("{w_res:.3e} <= 1e-9"));
        b.check("radii under pre-conjugation", radii_err <= 1e-8, format!("{radii_err:.3e} <= 1e-8"));
    })
}

pub fn log_exp_round_trip() -> CriterionResult {
    timed(2, "log/exp round trip", 5.0, |b| {
        let tol = Tolerances::default();
        let mut worst: f64 = 0.0;
        let mut errors = Vec::new();
        for i in 0..200u64 {
            let m = 1 + (i % 4) as usize;
            let mut r = rng(0x5eed_0002, i);
            let s = random_symplectic(&mut r, m, 0.5);
            match symplectic_log(&s, &tol) {
                Ok(h) => worst = worst.max(max_abs(&(expm(&h.entries) - &s))),
                Err(e) => errors.push(format!("sample {i}: {e}")),
            }
        }
        b.check("admissible inputs accepted", errors.is_empty(), format!("{} rejected {:?}", errors.len(), errors.first()));
        b.check("max |exp(log S) - S|", worst <= 1e-8, format!("{worst:.3e} <= 1e-8 over 200 maps"));
        let s = Mat::from_diagonal(&Vector::from_vec(vec![-E * E, -1.0 / (E * E)]));
        let res = symplectic_log(&s, &tol);
        b.check(
            "diag(-e^2, -e^-2) rejected",
            matches!(res, Err(SymplecticError::NegativeRealEigenvalue(_))),
            format!("{:?}", res.map(|_| "accepted")),
        );
    })
}

/// Largest distance under greedy nearest matching of two multisets.
pub fn multiset_error(mut a: Vec<Complex64>, b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for z in b {
        let (i, d) = a
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("same length");
        worst = worst.max(d);
        a.swap_remove(i);
    }
    worst
}

/// `±λ` (and conjugates) of every chain, repeated by chain size.
pub fn chain_multiset(chains: &[ChainBlock]) -> Vec<Complex64> {
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

pub fn normal_form_recovery() -> CriterionResult {
    timed(3, "normal-form recovery", 30.0, |b| {
        let tol = Tolerances::default();
        let (mut eig_err, mut block_res): (f64, f64) = (0.0, 0.0);
        let mut chain_mismatch = 0;
        let mut not_certified = Vec::new();
        let mut errors = Vec::new();
        let mut chained = 0;
        for i in 0..200u64 {
            let m = 1 + (i % 4) as usize;
            let mut r = rng(0x5eed_0003, i);
            let chains = random_chains(&mut r, m, 3);
            chained += chains.iter().any(|c| c.size > 1) as usize;
            let (bm, _) = conjugated_normal_form(&mut r, &chains, 0.25);
            let min_re = chains.iter().map(|c| c.lambda.re).fold(f64::INFINITY, f64::min);
            // every other sample sits exactly on the threshold ε = min Re λ / 2
            let eps = if i % 2 == 0 { min_re / 2.0 } else { r.random_range(0.05..1.0) * min_re / 2.0 };
            let outcome = (|| -> Result<(), SymplecticError> {
                let hm = HamiltonMatrix::new(bm)?;
                let nf = birkhoff_normal_form(&hm, None, &tol)?;
                eig_err = eig_err.max(multiset_error(nf.eigenvalues.exponent_multiset(), &chain_multiset(&chains)));
                block_res = block_res.max(nf.residual);
                let mut got: Vec<usize> = nf.chains.iter().map(|c| c.size).collect();
                let mut want: Vec<usize> = chains.iter().map(|c| c.size).collect();
                got.sort_unstable();
                want.sort_unstable();
                chain_mismatch += (got != want) as usize;
                let scaled = birkhoff_normal_form(&hm, Some(eps.min(1.0)), &tol)?;
                let rep = escape_rate_form(&scaled);
                if !rep.is_positive() {
                    not_certified.push(format!("sample {i}: ε = {eps:.4}, min eigenvalue {:.3e}", rep.min_eigenvalue));
                }
                Ok(())
            })();
            if let Err(e) = outcome {
                errors.push(format!("sample {i}: {e}"));
            }
        }
        b.check("inputs processed", errors.is_empty(), format!("200 inputs ({chained} with Jordan chains), {} errors {:?}", errors.len(), errors.first()));
        b.check("eigenvalue multiset error", eig_err <= 1e-6, format!("{eig_err:.3e} <= 1e-6"));
        b.check("block residual", block_res <= 1e-6, format!("{block_res:.3e} <= 1e-6"));
        b.check("chain sizes recovered", chain_mismatch == 0, format!("{chain_mismatch} mismatches"));
        b.check("certificate for ε <= min Re λ/2", not_certified.is_empty(), format!("{} uncertified {:?}", not_certified.len(), not_certified.first()));
        let a = crate::symplectic::assemble_a(&[ChainBlock { lambda: Complex64::new(0.1, 0.0), size: 2 }], 1.0);
        let bm = crate::linalg::block_diag(&[a.transpose(), -a]);
        match HamiltonMatrix::new(bm).and_then(|h| birkhoff_normal_form(&h, Some(1.0), &tol)) {
            Ok(nf) => {
                let rep = escape_rate_form(&nf);
                b.check(
                    "k=2, λ=0.1, ε=1 indefinite",
                    !rep.is_positive() && rep.min_eigenvalue < 0.0,
                    format!("min eigenvalue {:.4}", rep.min_eigenvalue),
                );
            }
            Err(e) => b.fail("k=2, λ=0.1, ε=1 indefinite", e),
        }
    })
}

pub fn monodromy_oracle() -> CriterionResult {
    timed(4, "monodromy oracle", 10.0, |b| {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let opts = OrbitOptions::default();
        let r0: f64 = 0.05;
        let data = flow::find_closed_orbit(&sys, &[r0, 0.0, 0.0, r0.cosh()], 2.0 * PI + 0.2, &opts)
            .and_then(|orbit| flow::linearized_poincare_map(&sys, &orbit, &opts).map(|d| (orbit, d)));
        match data {
            Ok((orbit, data)) => {
                b.notes.push(format!("closed orbit period {:.10} (2π = {:.10})", orbit.period, 2.0 * PI));
                let mut mus: Vec<f64> = data.multipliers.iter().map(|m| m[0]).collect();
                mus.sort_by(|a, c| c.total_cmp(a));
                let expect = [(2.0 * PI).exp(), (-2.0 * PI).exp()];
                let rel: f64 = mus.iter().zip(expect).map(|(mu, e)| (mu / e - 1.0).abs()).fold(0.0, f64::max);
                let imag: f64 = data.multipliers.iter().map(|m| m[1].abs()).fold(0.0, f64::max);
                b.check(
                    "multipliers vs e^{±2π}",
                    mus.len() == 2 && rel < 1e-3 && imag == 0.0,
                    format!("{:.6e} and {:.6e}, max relative error {rel:.3e} < 1e-3", mus.first().copied().unwrap_or(f64::NAN), mus.last().copied().unwrap_or(f64::NAN)),
                );
                b.check("det dS0", (data.det - 1.0).abs() <= 1e-6, format!("|det - 1| = {:.3e} <= 1e-6", (data.det - 1.0).abs()));
            }
            Err(e) => b.fail("closed orbit", e),
        }
    })
}

pub fn nonconcentration_scaling() -> CriterionResult {
    timed(5, "non-concentration scaling", 180.0, |b| {
        let ks = [10u32, 20, 40, 80];
        let fine = spectra::nonconcentration_scan(&ks, 0.5, 3.0, 2048);
        let coarse = spectra::nonconcentration_scan(&ks, 0.5, 3.0, 1024);
        match (fine, coarse) {
            (Ok(fine), Ok(coarse)) => {
                let products: Vec<f64> = fine.rows.iter().map(|r| r.product_mass_log_lambda).collect();
                b.check(
                    "band ratio at N=2048",
                    fine.band.ratio <= 2.0,
                    format!("products {products:.4?}, ratio {:.4} <= 2", fine.band.ratio),
                );
                let agree: f64 = fine
                    .rows
                    .iter()
                    .zip(&coarse.rows)
                    .map(|(f, c)| (f.product_mass_log_lambda - c.product_mass_log_lambda).abs() / f.product_mass_log_lambda.abs())
                    .fold(0.0, f64::max);
                b.check("N=1024 vs N=2048", agree <= 0.05, format!("max relative difference {agree:.4} <= 0.05"));
                match spectra::nonconcentration_scan_with(&ks, 0.5, 3.0, 2048, BarrierTopSelection::Nearest) {
                    Ok(lit) => b.notes.push(format!(
                        "parity-blind nearest-eigenvalue selection: products {:.4?}, ratio {:.4}",
                        lit.rows.iter().map(|r| r.product_mass_log_lambda).collect::<Vec<_>>(),
                        lit.band.ratio
                    )),
                    Err(e) => b.notes.push(format!("parity-blind selection failed: {e}")),
                }
            }
            (Err(e), _) | (_, Err(e)) => b.fail("scan", e),
        }
    })
}

/// The transverse model used by the resolvent criterion.
pub fn resolvent_model(absorber: AbsorberKind) -> resolvent::ModelSpec {
    resolvent::ModelSpec {
        lambda: 1.0,
        half_width: 1.0,
        t_modes: 32,
        xi_max: 1.5,
        absorber: AbsorbingProfile { kind: absorber, inner: 0.25, outer: 0.5, strength: 10.0 },
    }
}

pub fn resolvent_bounds() -> CriterionResult {
    timed(6, "resolvent bounds", 300.0, |b| {
        let h_list = [1.0 / 50.0, 1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0];
        let z = resolvent::strip_grid(0.5, 201, 0.0, 1);
        let spec = resolvent_model(AbsorberKind::PhaseSpace { xi_inner: 0.25, xi_outer: 0.5 });
        let phi = |x: f64| 1.0 - resolvent::plateau(x, 0.25, 0.5);
        match resolvent::sigma_min_scan(|h| spec.quantize(h), &h_list, &z, Some(phi)) {
            Ok(scan) => {
                let summary = scan.summary();
                let norm: Vec<f64> = summary.iter().map(|s| s.max_norm_product).collect();
                let cut: Vec<f64> = summary.iter().filter_map(|s| s.max_cutoff_product).collect();
                let nb = spectra::FitBand::from_values(norm.iter().copied());
                let cb = spectra::FitBand::from_values(cut.iter().copied());
                b.check("‖Q⁻¹‖ h / log(1/h) band", nb.ratio <= 2.0, format!("{norm:.4?}, ratio {:.4} <= 2", nb.ratio));
                b.check(
                    "‖Q⁻¹φ‖ h / sqrt(log(1/h)) band",
                    cut.len() == h_list.len() && cb.ratio <= 2.0,
                    format!("{cut:.4?}, ratio {:.4} <= 2", cb.ratio),
                );
            }
            Err(e) => b.fail("scan", e),
        }
        // a ≡ 1: the numerical range gives ‖Q(z)⁻¹‖ ≤ 1/(hC) for real z
        let global = resolvent_model(AbsorberKind::Global);
        let mut worst: f64 = 0.0;
        let mut failed = None;
        for &h in &h_list {
            match resolvent::sigma_min_scan(|h| global.quantize(h), &[h], &z, None::<fn(f64) -> f64>) {
                Ok(scan) => {
                    let bound = 1.0 / (global.absorber.strength * h);
                    worst = worst.max((scan.summary()[0].max_inv_norm / bound - 1.0).abs());
                }
                Err(e) => failed = Some(e),
            }
        }
        match failed {
            None => b.check("global absorption vs 1/(hC)", worst <= 0.1, format!("max relative deviation {worst:.3e} <= 0.1")),
            Some(e) => b.fail("global absorption vs 1/(hC)", e),
        }
    })
}

pub fn harmonic_lower_bound() -> CriterionResult {
    timed(7, "harmonic-oscillator lower bound", 60.0, |b| {
        let hs = [0.1, 0.05, 0.025];
        match resolvent::harm_osc_lower_bound(HarmonicSymbol::Bracketed, &hs, 256, 4.0) {
            Ok(rows) => {
                let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
                let band = spectra::FitBand::from_values(ratios.iter().copied());
                b.check(
                    "λ_min/h̃ in a positive band",
                    band.min > 0.0 && band.ratio <= 2.0,
                    format!("{ratios:.5?}, min {:.4} > 0, ratio {:.4} <= 2", band.min, band.ratio),
                );
            }
            Err(e) => b.fail("bracketed symbol", e),
        }
        match resolvent::harm_osc_lower_bound(HarmonicSymbol::Pure, &hs, 256, 4.0) {
            Ok(rows) => {
                let dev = rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
                b.check("pure oscillator λ_min = h̃", dev < 0.02, format!("max |λ_min/h̃ - 1| = {dev:.3e} < 0.02"));
            }
            Err(e) => b.fail("pure oscillator", e),
        }
    })
}

/// Neck problem of the damped-wave criterion: `R = 3`, `a` supported on
/// `|r| > 0.5`, modes `0..=40`.
pub fn damped_wave_problem(n_grid: usize) -> DampedWaveProblem {
    DampedWaveProblem::neck(3.0, 0.5, 1.0, n_grid, 40, 0.1)
}

pub fn damped_wave_suite() -> CriterionResult {
    timed(8, "damped wave", 180.0, |b| {
        let scaled_min = |prob: &DampedWaveProblem, b: &mut Builder| -> Option<f64> {
            let amax = prob.max_damping();
            let (mut strip, mut sym, mut min): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
            for &k in &prob.modes {
                match damped_wave::assemble_pencil(prob, k).and_then(|p| damped_wave::eigenfrequencies(&p, amax)) {
                    Ok(set) => {
                        strip = strip.max(set.strip_violation);
                        sym = sym.max(set.symmetry_residual);
                        min = min.min(set.log_scaled_min_decay());
                    }
                    Err(e) => {
                        b.fail(&format!("eigenfrequencies N={} k={k}", prob.n_grid), e);
                        return None;
                    }
                }
            }
            if prob.n_grid == 129 {
                b.check("strip 0 <= Im τ <= 2 max a, k <= 40", strip <= 1e-8, format!("max violation {strip:.3e} <= 1e-8"));
                b.check("symmetry τ -> -conj(τ), k <= 40", sym <= 1e-8, format!("max residual {sym:.3e} <= 1e-8"));
            }
            Some(min)
        };
        let coarse = damped_wave_problem(129);
        let fine = damped_wave_problem(193);
        if let (Some(a), Some(c)) = (scaled_min(&coarse, b), scaled_min(&fine, b)) {
            let rel = (a - c).abs() / c.abs();
            b.check(
                "min Im τ log<Re τ> at N=129 vs 193",
                a > 0.0 && c > 0.0 && rel <= 0.1,
                format!("{a:.5} vs {c:.5}, relative difference {rel:.2e} <= 0.1"),
            );
        }

        let initial = InitialData::Gaussian { center: 1.5, width: 0.5 };
        match damped_wave::decay_report(&coarse, &initial, 60.0) {
            Ok(rep) => {
                let t = &rep.trace;
                b.check("E⁰ non-increasing", t.max_increase <= 1e-8, format!("max increase {:.3e} <= 1e-8 (relative)", t.max_increase));
                b.check("dissipation identity", t.dissipation_residual <= 1e-6, format!("residual {:.3e} <= 1e-6", t.dissipation_residual));
                b.check(
                    "exponential envelope fit, ε = 0.1",
                    t.fit.r_squared >= 0.95 && t.fit.rate > 0.0,
                    format!("rate {:.4}, R² {:.6} >= 0.95", t.fit.rate, t.fit.r_squared),
                );
                let slowest = rep.modes.iter().map(|m| m.min_decay).fold(f64::INFINITY, f64::min);
                b.notes.push(format!(
                    "2 min Im τ = {:.4}, envelope constant C = {:?}, max E^ε increase {:.3e}",
                    2.0 * slowest,
                    rep.envelope_constant,
                    t.eeps_max_increase
                ));
            }
            Err(e) => b.fail("decay report", e),
        }

        let undamped = DampedWaveProblem { damping: Damping::Off, modes: vec![0, 5, 20, 40], ..coarse };
        match damped_wave::decay_report(&undamped, &initial, 100.0) {
            Ok(rep) => {
                let e = &rep.trace.e0;
                let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0];
                b.check("a ≡ 0 conserves E⁰ over t <= 100", drift <= 1e-8, format!("max relative drift {drift:.3e} <= 1e-8"));
            }
            Err(e) => b.fail("a ≡ 0 conserves E⁰", e),
        }
    })
}

pub fn geometric_control() -> CriterionResult {
    timed(9, "geometric control", 60.0, |b| {
        let sys = HamiltonianSystem::surface(WarpProfile::Cosh, 3.0);
        let damp = RadialDamping { inner: 0.5, outer: 1.0, strength: 1.0 };
        let band = Neighborhood::ClairautBand { r_max: 0.2, c0: 1.0, c_tol: 0.01 };
        let rep = flow::check_geometric_control(&sys, |z: &[f64]| damp.eval(z[0]), &band, 50.0, 500, 2024, 1e-8);
        b.check(
            "all 500 samples controlled within T = 50",
            rep.failures.is_empty() && rep.controlled_fraction == 1.0 && rep.witnesses.len() == 500,
            format!("fraction {}, {} failures, max witness time {:.3}", rep.controlled_fraction, rep.failures.len(), rep.max_witness_time),
        );
        b.check("min ⟨a⟩_T > 0", rep.min_average > 0.0, format!("{:.4}", rep.min_average));
        let osc = HamiltonianSystem::harmonic(1);
        match flow::trajectory_average(&osc, |z: &[f64]| z[1] * z[1], &[1.0, 0.0], 2.0 * PI, 1e-12) {
            Ok(avg) => b.check("⟨sin²⟩ over 2π", (avg - 0.5).abs() <= 1e-10, format!("|avg - 0.5| = {:.3e} <= 1e-10", (avg - 0.5).abs())),
            Err(e) => b.fail("⟨sin²⟩ over 2π", e),
        }
    })
}
