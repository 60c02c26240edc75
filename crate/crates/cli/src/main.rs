mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use config::*;
use error::{validation, CliResult};
use loxodrome::damped_wave::{Damping, InitialData};
use loxodrome::flow::RadialDamping;
use loxodrome::io::DenseMatrix;
use loxodrome::profile::WarpProfile;
use loxodrome::spectra::BarrierTopSelection;
use std::path::PathBuf;
use std::process::ExitCode;

/// Experiments around hyperbolic closed orbits: symplectic normal forms,
/// closed orbits, barrier-top spectra, resolvent scans and damped waves.
///
/// Exit codes: 0 success, 2 invalid input, 3 numerical failure. Global flags
/// can also be set through LOXODROME_CONFIG, LOXODROME_OUT,
/// LOXODROME_THREADS, LOXODROME_SEED and LOXODROME_TOL.
#[derive(Debug, Parser)]
#[command(name = "loxodrome", version)]
struct Cli {
    /// JSON config for the subcommand; flags override its values
    #[arg(long, global = true, env = "LOXODROME_CONFIG")]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, env = "LOXODROME_OUT", default_value = ".")]
    out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long, global = true, env = "LOXODROME_THREADS")]
    threads: Option<usize>,
    /// seed of the control sampling (orbit) and of random initial data (damped-wave)
    #[arg(long, global = true, env = "LOXODROME_SEED")]
    seed: Option<u64>,
    /// integration tolerance of the orbit and control computations
    #[arg(long, global = true, env = "LOXODROME_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a symplectic map, Hamilton matrix or quadratic form and
    /// compute its normal form
    NormalForm(NormalFormArgs),
    /// Find a closed orbit, its linearized Poincaré map and optionally check
    /// geometric control
    Orbit(OrbitArgs),
    /// Barrier-top eigenfunctions of the cylinder and their mass off the neck
    Spectrum(SpectrumArgs),
    /// Smallest singular values of the absorbed model operator over real z
    Resolvent(ResolventArgs),
    /// Eigenfrequencies and energy decay of the damped wave equation
    DampedWave(DampedWaveArgs),
    /// Run the acceptance suite and print a pass/fail table
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct NormalFormArgs {
    /// matrix file {"dim": n, "entries": [[...], ...]}
    #[arg(long)]
    input: Option<PathBuf>,
    /// what the matrix is: map, hamilton or quadratic
    #[arg(long)]
    kind: Option<String>,
    /// Jordan chain coupling in (0, 1]
    #[arg(long)]
    jordan_scale: Option<f64>,
}

#[derive(Debug, Args)]
struct OrbitArgs {
    /// initial guess, comma separated phase-space point
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    guess: Option<Vec<f64>>,
    /// period guess
    #[arg(long)]
    period: Option<f64>,
    /// also check geometric control (defaults: damping on |r| > 0.5, T = 50)
    #[arg(long)]
    control: bool,
    /// number of control samples
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// angular modes, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u32>>,
    #[arg(long)]
    delta: Option<f64>,
    /// half length R of the cylinder
    #[arg(long = "half-length")]
    half_length: Option<f64>,
    /// grid nodes N
    #[arg(long)]
    nodes: Option<usize>,
    /// nearest-even (default) or nearest
    #[arg(long)]
    selection: Option<String>,
}

#[derive(Debug, Args)]
struct ResolventArgs {
    /// semiclassical parameters, comma separated
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// number of real z samples in [-re_max, re_max]
    #[arg(long)]
    re_points: Option<usize>,
    /// skip the cutoff variant
    #[arg(long)]
    no_cutoff: bool,
}

#[derive(Debug, Args)]
struct DampedWaveArgs {
    /// periodic-cosh (default) or flat
    #[arg(long)]
    profile: Option<String>,
    /// half period P of the periodic radial variable
    #[arg(long)]
    half_period: Option<f64>,
    /// damping vanishes on |r| <= r0 and is at full strength on |r| >= r0 + 0.5
    #[arg(long)]
    r0: Option<f64>,
    /// damping strength
    #[arg(long)]
    strength: Option<f64>,
    /// regularity weight of the data norm
    #[arg(long)]
    epsilon: Option<f64>,
    /// angular modes, e.g. 0-40 or 0,5,20
    #[arg(long)]
    modes: Option<String>,
    /// odd number of radial grid points
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    /// random band-limited initial data on this many eigenvectors per mode
    #[arg(long)]
    random_band: Option<usize>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// criteria to run, comma separated (default: all)
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<usize>>,
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| validation(format!("cannot configure {n} threads: {e}")))?;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(validation(format!("--tol must lie in (0, 1), got {t}")));
        }
    }
    let config = cli.config.as_deref();
    let out = || output::OutDir::create(&cli.out);
    match cli.command {
        Command::NormalForm(a) => {
            let mut cfg: NormalFormConfig = load(config)?;
            if let Some(path) = &a.input {
                let text = std::fs::read_to_string(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
                let m: DenseMatrix = serde_json::from_str(&text).map_err(|e| validation(format!("{}: {e}", path.display())))?;
                cfg.matrix = Some(m);
            }
            if let Some(k) = &a.kind {
                cfg.kind = match k.as_str() {
                    "map" => MatrixKind::Map,
                    "hamilton" => MatrixKind::Hamilton,
                    "quadratic" => MatrixKind::Quadratic,
                    _ => return Err(validation(format!("--kind must be map, hamilton or quadratic, got {k:?}"))),
                };
            }
            if a.jordan_scale.is_some() {
                cfg.jordan_scale = a.jordan_scale;
            }
            commands::normal_form(&cfg, &out()?)
        }
        Command::Orbit(a) => {
            let mut cfg: OrbitConfig = load(config)?;
            if let Some(g) = a.guess {
                cfg.guess = g;
            }
            if let Some(p) = a.period {
                cfg.period_guess = p;
            }
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            if a.control && cfg.control.is_none() {
                cfg.control = Some(ControlConfig::default());
            }
            if let Some(c) = cfg.control.as_mut() {
                if let Some(s) = cli.seed {
                    c.seed = s;
                }
                if let Some(n) = a.samples {
                    c.samples = n;
                }
            } else if a.samples.is_some() {
                return Err(validation("--samples needs --control"));
            }
            commands::orbit(&cfg, &out()?)
        }
        Command::Spectrum(a) => {
            let mut cfg: SpectrumConfig = load(config)?;
            if let Some(k) = a.k {
                cfg.k = k;
            }
            if let Some(d) = a.delta {
                cfg.delta = d;
            }
            if let Some(r) = a.half_length {
                cfg.half_length = r;
            }
            if let Some(n) = a.nodes {
                cfg.nodes = n;
            }
            if let Some(s) = &a.selection {
                cfg.selection = match s.as_str() {
                    "nearest-even" => BarrierTopSelection::NearestEven,
                    "nearest" => BarrierTopSelection::Nearest,
                    _ => return Err(validation(format!("--selection must be nearest-even or nearest, got {s:?}"))),
                };
            }
            commands::spectrum(&cfg, &out()?)
        }
        Command::Resolvent(a) => {
            let mut cfg: ResolventConfig = load(config)?;
            if let Some(h) = a.h {
                cfg.h = h;
            }
            if let Some(n) = a.re_points {
                cfg.re_points = n;
            }
            if a.no_cutoff {
                cfg.cutoff = None;
            }
            commands::resolvent(&cfg, &out()?)
        }
        Command::DampedWave(a) => {
            let mut cfg: DampedWaveConfig = load(config)?;
            let p = &mut cfg.problem;
            if let Some(hp) = a.half_period {
                p.half_period = hp;
                if let WarpProfile::PeriodicCosh { half_period } = &mut p.profile {
                    *half_period = hp;
                }
            }
            if let Some(s) = &a.profile {
                p.profile = match s.as_str() {
                    "periodic-cosh" => WarpProfile::PeriodicCosh { half_period: p.half_period },
                    "flat" => WarpProfile::Flat,
                    _ => return Err(validation(format!("--profile must be periodic-cosh or flat, got {s:?}"))),
                };
            }
            if a.r0.is_some() || a.strength.is_some() {
                let base = match p.damping {
                    Damping::Radial(d) => d,
                    _ => RadialDamping { inner: 0.5, outer: 1.0, strength: 1.0 },
                };
                let inner = a.r0.unwrap_or(base.inner);
                p.damping = Damping::Radial(RadialDamping { inner, outer: inner + (base.outer - base.inner), strength: a.strength.unwrap_or(base.strength) });
            }
            if let Some(e) = a.epsilon {
                p.epsilon = e;
            }
            if let Some(m) = &a.modes {
                p.modes = parse_ranges(m)?;
            }
            if let Some(n) = a.n_grid {
                p.n_grid = n;
            }
            if let Some(t) = a.t_max {
                cfg.t_max = t;
            }
            if let Some(band) = a.random_band {
                cfg.initial = InitialData::RandomBand { band, seed: cli.seed.unwrap_or(0) };
            } else if let (InitialData::RandomBand { seed, .. }, Some(s)) = (&mut cfg.initial, cli.seed) {
                *seed = s;
            }
            commands::damped_wave(&cfg, &out()?)
        }
        Command::Selftest(a) => commands::selftest(a.only.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
