use crate::config::*;
use crate::error::{validation, CliError, CliResult};
use crate::output::{Cell, OutDir};
use loxodrome::acceptance;
use loxodrome::damped_wave::{self, DecayFit, ModeDecay};
use loxodrome::flow::{self, ClosedOrbit, ControlReport, HamiltonianSystem, MonodromyData, ModelSpec};
use loxodrome::linalg::Mat;
use loxodrome::resolvent::{self, ScanSummary};
use loxodrome::spectra::{self, ConcentrationReport, FitBand};
use loxodrome::symplectic::{
    birkhoff_normal_form, classify, escape_rate_form, hamilton_matrix, symplectic_log, williamson, BirkhoffNormalForm, ClassifyMode,
    EscapeRateReport, HamiltonMatrix, QuadraticHamiltonian, SpectrumClassification, WilliamsonDecomposition,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Serialize)]
struct NormalFormOutput {
    schema_version: u32,
    kind: MatrixKind,
    classification: SpectrumClassification,
    /// `log S` for map inputs
    hamilton_matrix: Option<HamiltonMatrix>,
    normal_form: Option<BirkhoffNormalForm>,
    escape_rate: Option<EscapeRateReport>,
    williamson: Option<WilliamsonDecomposition>,
}

pub fn normal_form(cfg: &NormalFormConfig, out: &OutDir) -> CliResult<()> {
    cfg.validate()?;
    let m = Mat::try_from(cfg.matrix.as_ref().expect("validated")).map_err(|e| validation(e.to_string()))?;
    let tol = &cfg.tolerances;
    let output = match cfg.kind {
        MatrixKind::Map => {
            let classification = classify(&m, ClassifyMode::PoincareMap, tol)?;
            let b = symplectic_log(&m, tol)?;
            let nf = birkhoff_normal_form(&b, cfg.jordan_scale, tol)?;
            let escape = escape_rate_form(&nf);
            NormalFormOutput {
                schema_version: SCHEMA_VERSION,
                kind: cfg.kind,
                classification,
                hamilton_matrix: Some(b),
                normal_form: Some(nf),
                escape_rate: Some(escape),
                williamson: None,
            }
        }
        MatrixKind::Hamilton => {
            let b = HamiltonMatrix::with_tolerance(m, tol.hamiltonian_tol)?;
            let classification = classify(&b.entries, ClassifyMode::HamiltonMatrix, tol)?;
            let nf = birkhoff_normal_form(&b, cfg.jordan_scale, tol)?;
            let escape = escape_rate_form(&nf);
            NormalFormOutput {
                schema_version: SCHEMA_VERSION,
                kind: cfg.kind,
                classification,
                hamilton_matrix: None,
                normal_form: Some(nf),
                escape_rate: Some(escape),
                williamson: None,
            }
        }
        MatrixKind::Quadratic => {
            let q = QuadraticHamiltonian::new(m)?;
            let classification = classify(&hamilton_matrix(&q).entries, ClassifyMode::HamiltonMatrix, tol)?;
            let w = williamson(&q)?;
            NormalFormOutput {
                schema_version: SCHEMA_VERSION,
                kind: cfg.kind,
                classification,
                hamilton_matrix: None,
                normal_form: None,
                escape_rate: None,
                williamson: Some(w),
            }
        }
    };
    let path = out.write_json("normal_form.json", &output)?;
    let c = &output.classification;
    println!("classification: n_hr = {}, n_hc = {}, n_elliptic = {}, loxodromic = {}", c.n_hr, c.n_hc, c.n_elliptic, c.is_loxodromic);
    if let Some(nf) = &output.normal_form {
        println!("normal form residual {:.3e}, symplectic residual {:.3e}", nf.residual, nf.transform.residual());
    }
    if let Some(e) = &output.escape_rate {
        println!("escape-rate form: min eigenvalue {:.6}, certified = {}", e.min_eigenvalue, e.is_positive());
    }
    if let Some(w) = &output.williamson {
        println!("williamson radii {:?}, residual {:.3e}", w.radii, w.residual);
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct OrbitOutput<'a> {
    schema_version: u32,
    system: &'a ModelSpec,
    orbit: ClosedOrbit,
    monodromy: MonodromyData,
    /// relative energy drift of the stored trajectory
    energy_drift: f64,
    control: Option<ControlSummary>,
}

#[derive(Serialize)]
struct ControlSummary {
    samples: usize,
    t_max: f64,
    seed: u64,
    controlled_fraction: f64,
    min_average: f64,
    max_witness_time: f64,
    failures: Vec<String>,
}

impl From<&ControlReport> for ControlSummary {
    fn from(r: &ControlReport) -> Self {
        Self {
            samples: r.samples,
            t_max: r.t_max,
            seed: r.seed,
            controlled_fraction: r.controlled_fraction,
            min_average: r.min_average,
            max_witness_time: r.max_witness_time,
            failures: r.failures.clone(),
        }
    }
}

pub fn orbit(cfg: &OrbitConfig, out: &OutDir) -> CliResult<()> {
    cfg.validate()?;
    let sys = HamiltonianSystem::from_spec(&cfg.system)?;
    let opts = cfg.options();
    let orbit = flow::find_closed_orbit(&sys, &cfg.guess, cfg.period_guess, &opts)?;
    let monodromy = flow::linearized_poincare_map(&sys, &orbit, &opts)?;
    let traj = flow::flow(&sys, &orbit.point, orbit.period, opts.tol)?;
    let header = traj.csv_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("trajectory.csv", &header, traj.csv_rows().map(|r| r.into_iter().map(Cell::F).collect::<Vec<_>>()))?;

    let control = match &cfg.control {
        Some(c) => {
            let damping = c.damping;
            let rep = flow::check_geometric_control(&sys, |z: &[f64]| damping.eval(z[0]), &c.neighborhood, c.t_max, c.samples, c.seed, opts.tol);
            let d = sys.phase_dim();
            let mut header = vec!["index".to_string(), "witness_time".into(), "average".into()];
            header.extend((0..d).map(|i| format!("z{}", i + 1)));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.write_csv(
                "control.csv",
                &header,
                rep.witnesses.iter().map(|w| {
                    let mut row = vec![Cell::U(w.index as u64), Cell::from(w.witness_time), Cell::F(w.average)];
                    row.extend(w.point.iter().map(|v| Cell::F(*v)));
                    row
                }),
            )?;
            println!(
                "control: fraction {} of {} samples, min average {:.4}, max witness time {:.3}",
                rep.controlled_fraction, rep.samples, rep.min_average, rep.max_witness_time
            );
            Some(ControlSummary::from(&rep))
        }
        None => None,
    };

    println!("period {:.12}, residual {:.3e}, {} Newton iterations", orbit.period, orbit.residual, orbit.iterations);
    println!("multipliers {:?}, det {:.12}", monodromy.multipliers, monodromy.det);
    let output = OrbitOutput { schema_version: SCHEMA_VERSION, system: &cfg.system, orbit, monodromy, energy_drift: traj.energy_drift(), control };
    let path = out.write_json("orbit.json", &output)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn spectrum(cfg: &SpectrumConfig, out: &OutDir) -> CliResult<()> {
    cfg.validate()?;
    let report: ConcentrationReport = spectra::nonconcentration_scan_with(&cfg.k, cfg.delta, cfg.half_length, cfg.nodes, cfg.selection)?;
    out.write_csv(
        "spectrum.csv",
        &["k", "lambda", "mass_outside", "product_mass_log_lambda", "grid_N"],
        report.rows.iter().map(|r| {
            vec![Cell::U(r.k as u64), Cell::F(r.lambda), Cell::F(r.mass_outside), Cell::F(r.product_mass_log_lambda), Cell::U(r.grid_n as u64)]
        }),
    )?;
    for r in &report.rows {
        println!("k = {:3}  lambda = {:.6}  mass_outside = {:.6}  product = {:.6}", r.k, r.lambda, r.mass_outside, r.product_mass_log_lambda);
    }
    println!("band [{:.6}, {:.6}], ratio {:.4}", report.band.min, report.band.max, report.band.ratio);
    let path = out.write_json("spectrum.json", &Versioned { schema_version: SCHEMA_VERSION, body: report })?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct ResolventOutput {
    schema_version: u32,
    summary: Vec<ScanSummary>,
    norm_band: FitBand,
    cutoff_band: Option<FitBand>,
}

pub fn resolvent(cfg: &ResolventConfig, out: &OutDir) -> CliResult<()> {
    cfg.validate()?;
    let model = cfg.model;
    let mut rows = Vec::new();
    for &h in &cfg.h {
        let z = resolvent::strip_grid(cfg.re_max, cfg.re_points, cfg.c0 * h, cfg.im_points);
        let cutoff = cfg.cutoff.map(|c| move |x: f64| 1.0 - resolvent::plateau(x, c.inner, c.outer));
        let scan = resolvent::sigma_min_scan(|h| model.quantize(h), &[h], &z, cutoff)?;
        rows.extend(scan.rows);
    }
    let scan = resolvent::ResolventScan { rows };
    out.write_csv(
        "resolvent.csv",
        &["h", "re_z", "im_z", "sigma_min", "inv_norm", "norm_product", "cutoff_product"],
        scan.rows.iter().map(|r| {
            vec![
                Cell::F(r.h),
                Cell::F(r.re_z),
                Cell::F(r.im_z),
                Cell::F(r.sigma_min),
                Cell::F(r.inv_norm),
                Cell::F(r.norm_product),
                Cell::from(r.cutoff_product),
            ]
        }),
    )?;
    let summary = scan.summary();
    let norm_band = FitBand::from_values(summary.iter().map(|s| s.max_norm_product));
    let cutoff_band = cfg.cutoff.map(|_| FitBand::from_values(summary.iter().filter_map(|s| s.max_cutoff_product)));
    for s in &summary {
        println!("h = {:.6}  max ||Q^-1|| = {:.6}  product = {:.6}  cutoff product = {:?}", s.h, s.max_inv_norm, s.max_norm_product, s.max_cutoff_product);
    }
    println!("norm band ratio {:.4}", norm_band.ratio);
    if let Some(b) = &cutoff_band {
        println!("cutoff band ratio {:.4}", b.ratio);
    }
    let path = out.write_json("resolvent.json", &ResolventOutput { schema_version: SCHEMA_VERSION, summary, norm_band, cutoff_band })?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct DampedWaveOutput {
    schema_version: u32,
    epsilon: f64,
    t_max: f64,
    fit: DecayFit,
    dissipation_residual: f64,
    max_increase: f64,
    eeps_max_increase: f64,
    data_norm_sq: f64,
    envelope_constant: Option<f64>,
    /// `min Im τ log⟨Re τ⟩` over `|Re τ| ≥ 1` and all modes
    log_scaled_min_decay: f64,
    strip_violation: f64,
    symmetry_residual: f64,
    modes: Vec<ModeDecay>,
}

pub fn damped_wave(cfg: &DampedWaveConfig, out: &OutDir) -> CliResult<()> {
    cfg.validate()?;
    let prob = &cfg.problem;
    let amax = prob.max_damping();
    let sets = prob
        .modes
        .par_iter()
        .map(|&k| damped_wave::assemble_pencil(prob, k).and_then(|p| damped_wave::eigenfrequencies(&p, amax)))
        .collect::<Result<Vec<_>, _>>()?;
    out.write_csv(
        "eigenfrequencies.csv",
        &["k", "re_tau", "im_tau"],
        sets.iter().flat_map(|s| s.frequencies.iter().map(move |f| vec![Cell::U(s.k as u64), Cell::F(f[0]), Cell::F(f[1])])),
    )?;
    let rep = damped_wave::decay_report(prob, &cfg.initial, cfg.t_max)?;
    let t = &rep.trace;
    out.write_csv(
        "energy.csv",
        &damped_wave::EnergyTrace::csv_header(),
        t.times.iter().zip(&t.e0).zip(&t.eeps).map(|((a, b), c)| vec![Cell::F(*a), Cell::F(*b), Cell::F(*c)]),
    )?;
    let output = DampedWaveOutput {
        schema_version: SCHEMA_VERSION,
        epsilon: rep.epsilon,
        t_max: cfg.t_max,
        fit: t.fit,
        dissipation_residual: t.dissipation_residual,
        max_increase: t.max_increase,
        eeps_max_increase: t.eeps_max_increase,
        data_norm_sq: rep.data_norm_sq,
        envelope_constant: rep.envelope_constant,
        log_scaled_min_decay: sets.iter().map(|s| s.log_scaled_min_decay()).fold(f64::INFINITY, f64::min),
        strip_violation: sets.iter().map(|s| s.strip_violation).fold(0.0, f64::max),
        symmetry_residual: sets.iter().map(|s| s.symmetry_residual).fold(0.0, f64::max),
        modes: rep.modes.clone(),
    };
    println!(
        "fitted rate {:.6}, R^2 {:.6}, envelope constant {:?}, dissipation residual {:.3e}",
        t.fit.rate, t.fit.r_squared, rep.envelope_constant, t.dissipation_residual
    );
    println!("min Im tau log<Re tau> = {:.6}", output.log_scaled_min_decay);
    let path = out.write_json("damped_wave.json", &output)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Runs the selected acceptance criteria; fails with exit code 3 if any fails.
pub fn selftest(only: Option<&[usize]>) -> CliResult<()> {
    let ids: Vec<usize> = only.map_or_else(|| (1..=acceptance::CRITERIA).collect(), <[usize]>::to_vec);
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > acceptance::CRITERIA) {
        return Err(validation(format!("criterion {bad} does not exist (1 to {})", acceptance::CRITERIA)));
    }
    let mut results = Vec::new();
    for id in ids {
        let r = acceptance::run(id).expect("id checked");
        println!("{}", r.report());
        results.push(r);
    }
    println!();
    println!("{:>3}  {:<34} {:>6} {:>10}", "#", "criterion", "result", "seconds");
    for r in &results {
        println!("{:>3}  {:<34} {:>6} {:>10.2}", r.id, r.title, if r.passed() { "pass" } else { "FAIL" }, r.seconds);
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} criteria failed", results.len())));
    }
    println!("all {} criteria passed", results.len());
    Ok(())
}
