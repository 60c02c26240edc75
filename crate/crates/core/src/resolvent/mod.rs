//! Grid quantization of the transverse model `p = τ + λ x ξ` near a
//! hyperbolic orbit, with a complex absorbing term, and smallest singular
//! value scans of `Q(z) = P - z - i h C a^w`.
//!
//! The angular variable `t ∈ S^1` is represented by exact Fourier modes, so
//! `h D_t` is diagonal with entries `h m` and `Q(z)` splits into blocks
//! `T - (z - h m)` where `T = λ sym(x h D_x) - i h C a^w` acts on a periodic
//! `x` grid. Every block is handled through one complex Schur factorization
//! of `T`.

mod commutator;
mod harmonic;
mod rescale;

pub use commutator::{positive_commutator_check, CommutatorReport, CommutatorSetup};
pub use harmonic::{harm_osc_lower_bound, HarmonicRow, HarmonicSymbol};
pub use rescale::{dilate, rescale_state, PeriodicGrid};

use crate::linalg::{circulant_from_symbol, CMat, SchurSigma};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const MIN_GRID: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolventError {
    #[error("absorbing profile does not fit the grid: {0}")]
    ProfileOutOfDomain(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("Q(z) is numerically singular at z = {re} + {im}i (sigma_min = {sigma:e})")]
    SingularAtZ { re: f64, im: f64, sigma: f64 },
    #[error("rescaled support overflows the grid: {0}")]
    SupportOverflow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    fn g(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        g(t) / (g(t) + g(1.0 - t))
    }
}

/// Even bump equal to 1 on `|s| ≤ inner` and 0 on `|s| ≥ outer`.
pub fn plateau(s: f64, inner: f64, outer: f64) -> f64 {
    1.0 - smooth_step((s.abs() - inner) / (outer - inner))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbsorberKind {
    /// `a(x) = 1 - ψ(x)`.
    Spatial,
    /// `a^w = 1 - ψ(x) ψ(h D_x) ψ(x)`, which also absorbs large frequencies.
    PhaseSpace { xi_inner: f64, xi_outer: f64 },
    /// `a ≡ 1`.
    Global,
    /// `a ≡ 0`.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorbingProfile {
    pub kind: AbsorberKind,
    /// `a ≡ 0` on `|x| ≤ inner`
    pub inner: f64,
    /// `a ≡ 1` on `|x| ≥ outer`
    pub outer: f64,
    /// absorption strength `C`
    pub strength: f64,
}

impl AbsorbingProfile {
    pub fn spatial_cutoff(&self, x: f64) -> f64 {
        plateau(x, self.inner, self.outer)
    }

    fn validate(&self, half_width: f64) -> Result<(), ResolventError> {
        if matches!(self.kind, AbsorberKind::Global | AbsorberKind::Off) {
            return Ok(());
        }
        if !(0.0 <= self.inner && self.inner < self.outer) {
            return Err(ResolventError::ProfileOutOfDomain(format!(
                "need 0 <= inner < outer, got {} and {}",
                self.inner, self.outer
            )));
        }
        if self.outer >= half_width {
            return Err(ResolventError::ProfileOutOfDomain(format!(
                "outer radius {} must be below the half width {half_width}",
                self.outer
            )));
        }
        if let AbsorberKind::PhaseSpace { xi_inner, xi_outer } = self.kind {
            if !(0.0 <= xi_inner && xi_inner < xi_outer) {
                return Err(ResolventError::ProfileOutOfDomain(format!(
                    "need 0 <= xi_inner < xi_outer, got {xi_inner} and {xi_outer}"
                )));
            }
        }
        Ok(())
    }
}

/// Parameters of the transverse model, independent of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// expansion rate `λ`
    pub lambda: f64,
    /// periodic `x` grid on `[-L, L)`
    pub half_width: f64,
    /// number of angular Fourier modes `M`
    pub t_modes: usize,
    /// grid resolution as the largest represented frequency `h ξ_max`
    pub xi_max: f64,
    pub absorber: AbsorbingProfile,
}

impl ModelSpec {
    /// Even grid size resolving `|ξ| ≤ xi_max` at this `h`.
    pub fn grid_size(&self, h: f64) -> usize {
        let n = (2.0 * self.half_width * self.xi_max / (std::f64::consts::PI * h)).ceil() as usize;
        (n + n % 2).max(MIN_GRID)
    }

    pub fn quantize(&self, h: f64) -> Result<DiscretizedOperator, ResolventError> {
        quantize_model(h, self.lambda, self.t_modes, self.grid_size(h), self.half_width, self.absorber)
    }
}

/// `P(h) - i h C a^w` in the angular Fourier basis.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub h: f64,
    pub lambda: f64,
    pub half_width: f64,
    pub profile: AbsorbingProfile,
    pub x: Vec<f64>,
    /// eigenvalues `h m` of `h D_t`
    pub t_spectrum: Vec<f64>,
    /// `λ (x hD + hD x) / 2`
    pub transverse: CMat,
    /// the quantized absorber `a^w` (without `h C`)
    pub absorber: CMat,
}

/// Derivative multiplier `h D_x` on a periodic grid, Nyquist mode dropped.
pub fn semiclassical_derivative(n: usize, length: f64, h: f64) -> CMat {
    let nyquist = if n % 2 == 0 { std::f64::consts::PI * n as f64 / length } else { f64::INFINITY };
    circulant_from_symbol(n, length, |k| {
        if (k.abs() - nyquist).abs() < 1e-9 * nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(h * k, 0.0)
        }
    })
}

pub fn quantize_model(
    h: f64,
    lambda: f64,
    t_modes: usize,
    n: usize,
    half_width: f64,
    profile: AbsorbingProfile,
) -> Result<DiscretizedOperator, ResolventError> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(ResolventError::InvalidParameter(format!("h = {h} must lie in (0, 1]")));
    }
    if t_modes < MIN_GRID || n < MIN_GRID {
        return Err(ResolventError::GridTooCoarse(format!(
            "M = {t_modes}, N = {n}; both must be at least {MIN_GRID}"
        )));
    }
    profile.validate(half_width)?;
    let length = 2.0 * half_width;
    let dx = length / n as f64;
    let x: Vec<f64> = (0..n).map(|j| -half_width + j as f64 * dx).collect();
    let d = semiclassical_derivative(n, length, h);
    let xd = CMat::from_fn(n, n, |i, j| d[(i, j)] * x[i]);
    let dxm = CMat::from_fn(n, n, |i, j| d[(i, j)] * x[j]);
    let transverse = (xd + dxm) * Complex64::new(0.5 * lambda, 0.0);

    let absorber = match profile.kind {
        AbsorberKind::Off => CMat::zeros(n, n),
        AbsorberKind::Global => CMat::identity(n, n),
        AbsorberKind::Spatial => {
            CMat::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0 - profile.spatial_cutoff(x[i]), 0.0) } else { Complex64::new(0.0, 0.0) })
        }
        AbsorberKind::PhaseSpace { xi_inner, xi_outer } => {
            let psi_xi = circulant_from_symbol(n, length, |k| Complex64::new(plateau(h * k, xi_inner, xi_outer), 0.0));
            let psi: Vec<f64> = x.iter().map(|&xx| profile.spatial_cutoff(xx)).collect();
            let mut a = CMat::from_fn(n, n, |i, j| -psi_xi[(i, j)] * psi[i] * psi[j]);
            for i in 0..n {
                a[(i, i)] += Complex64::new(1.0, 0.0);
            }
            (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
        }
    };
    let half = (t_modes / 2) as i64;
    let t_spectrum = (-half..t_modes as i64 - half).map(|m| h * m as f64).collect();
    Ok(DiscretizedOperator { h, lambda, half_width, profile, x, t_spectrum, transverse, absorber })
}

impl DiscretizedOperator {
    pub fn grid_len(&self) -> usize {
        self.x.len()
    }

    /// `T = P_x - i h C a^w`.
    pub fn transverse_block(&self) -> CMat {
        &self.transverse - &self.absorber * Complex64::new(0.0, self.h * self.profile.strength)
    }

    /// Full `Q(z)` on the tensor grid, mode-major ordering. Intended for
    /// small sizes and cross-checks.
    pub fn dense(&self, z: Complex64) -> CMat {
        let n = self.grid_len();
        let m = self.t_spectrum.len();
        let t = self.transverse_block();
        let mut q = CMat::zeros(n * m, n * m);
        for (b, &hm) in self.t_spectrum.iter().enumerate() {
            let mut blk = t.clone();
            for i in 0..n {
                blk[(i, i)] += Complex64::new(hm, 0.0) - z;
            }
            q.view_mut((b * n, b * n), (n, n)).copy_from(&blk);
        }
        q
    }

    /// `Q(z)^*` assembled directly from its definition.
    pub fn dense_adjoint(&self, z: Complex64) -> CMat {
        let n = self.grid_len();
        let m = self.t_spectrum.len();
        let t_adj = &self.transverse + &self.absorber * Complex64::new(0.0, self.h * self.profile.strength);
        let mut q = CMat::zeros(n * m, n * m);
        for (b, &hm) in self.t_spectrum.iter().enumerate() {
            let mut blk = t_adj.clone();
            for i in 0..n {
                blk[(i, i)] += Complex64::new(hm, 0.0) - z.conj();
            }
            q.view_mut((b * n, b * n), (n, n)).copy_from(&blk);
        }
        q
    }

    pub fn solver(&self) -> ResolventSolver<'_> {
        ResolventSolver { op: self, schur: SchurSigma::new(&self.transverse_block()) }
    }
}

pub struct ResolventSolver<'a> {
    op: &'a DiscretizedOperator,
    schur: SchurSigma,
}

impl ResolventSolver<'_> {
    /// `sigma_min(Q(z))`, the minimum over angular blocks.
    pub fn sigma_min(&self, z: Complex64) -> f64 {
        self.op
            .t_spectrum
            .iter()
            .map(|&hm| self.schur.sigma_min(z - hm))
            .fold(f64::INFINITY, f64::min)
    }

    /// `|| Q(z)^{-1} φ ||` for a multiplication operator `φ(x)`.
    pub fn cutoff_norm(&self, z: Complex64, phi: &[f64]) -> f64 {
        self.op
            .t_spectrum
            .iter()
            .map(|&hm| self.schur.inverse_times_diag_norm(z - hm, phi))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub h: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub sigma_min: f64,
    pub inv_norm: f64,
    /// `inv_norm h / log(1/h)`
    pub norm_product: f64,
    pub cutoff_norm: Option<f64>,
    /// `cutoff_norm h / sqrt(log(1/h))`
    pub cutoff_product: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventScan {
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub h: f64,
    pub max_inv_norm: f64,
    pub max_norm_product: f64,
    pub max_cutoff_product: Option<f64>,
}

impl ResolventScan {
    /// Per-`h` maxima over the scanned `z`, ordered by decreasing `h`.
    pub fn summary(&self) -> Vec<ScanSummary> {
        let mut by_h: BTreeMap<u64, ScanSummary> = BTreeMap::new();
        for r in &self.rows {
            let key = (1.0 / r.h).round() as u64;
            let e = by_h.entry(key).or_insert(ScanSummary {
                h: r.h,
                max_inv_norm: 0.0,
                max_norm_product: 0.0,
                max_cutoff_product: None,
            });
            e.max_inv_norm = e.max_inv_norm.max(r.inv_norm);
            e.max_norm_product = e.max_norm_product.max(r.norm_product);
            if let Some(c) = r.cutoff_product {
                e.max_cutoff_product = Some(e.max_cutoff_product.map_or(c, |m: f64| m.max(c)));
            }
        }
        by_h.into_values().collect()
    }
}

/// Uniform samples of the strip `[-re_max, re_max] + i[-c0 h, c0 h]`.
pub fn strip_grid(re_max: f64, re_points: usize, c0h: f64, im_points: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(re_points * im_points);
    for i in 0..im_points {
        let im = if im_points == 1 { 0.0 } else { -c0h + 2.0 * c0h * i as f64 / (im_points - 1) as f64 };
        for r in 0..re_points {
            let re = if re_points == 1 { 0.0 } else { -re_max + 2.0 * re_max * r as f64 / (re_points - 1) as f64 };
            out.push(Complex64::new(re, im));
        }
    }
    out
}

/// Smallest singular values of `Q(z)` over `z_grid` for each `h`. When a
/// cutoff `φ(x)` is given, `|| Q(z)^{-1} φ ||` is reported alongside.
pub fn sigma_min_scan<B, F>(
    builder: B,
    h_list: &[f64],
    z_grid: &[Complex64],
    cutoff: Option<F>,
) -> Result<ResolventScan, ResolventError>
where
    B: Fn(f64) -> Result<DiscretizedOperator, ResolventError>,
    F: Fn(f64) -> f64,
{
    let mut rows = Vec::with_capacity(h_list.len() * z_grid.len());
    for &h in h_list {
        let op = builder(h)?;
        let solver = op.solver();
        let phi: Option<Vec<f64>> = cutoff.as_ref().map(|c| op.x.iter().map(|&x| c(x)).collect());
        let log_inv = (1.0 / h).ln();
        // Block shifts z - h m coincide across z for grids commensurate with
        // h; evaluate each distinct shift once.
        let key = |w: Complex64| ((w.re * 1e10).round() as i64, (w.im * 1e10).round() as i64);
        let mut shifts: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();
        for &z in z_grid {
            for &hm in &op.t_spectrum {
                let w = z - hm;
                shifts.entry(key(w)).or_insert(w);
            }
        }
        let shift_list: Vec<((i64, i64), Complex64)> = shifts.into_iter().collect();
        let values: Vec<(f64, Option<f64>)> = shift_list
            .par_iter()
            .map(|&(_, w)| {
                let s = solver.schur.sigma_min(w);
                let c = phi.as_ref().map(|p| solver.schur.inverse_times_diag_norm(w, p));
                (s, c)
            })
            .collect();
        let table: BTreeMap<(i64, i64), (f64, Option<f64>)> =
            shift_list.iter().map(|(k, _)| *k).zip(values).collect();
        for &z in z_grid {
            let mut sigma = f64::INFINITY;
            let mut cutoff_norm: Option<f64> = None;
            for &hm in &op.t_spectrum {
                let (s, c) = table[&key(z - hm)];
                sigma = sigma.min(s);
                if let Some(c) = c {
                    cutoff_norm = Some(cutoff_norm.map_or(c, |m| m.max(c)));
                }
            }
            if sigma < 1e-14 {
                return Err(ResolventError::SingularAtZ { re: z.re, im: z.im, sigma });
            }
            let inv_norm = 1.0 / sigma;
            rows.push(ScanRow {
                h,
                re_z: z.re,
                im_z: z.im,
                sigma_min: sigma,
                inv_norm,
                norm_product: inv_norm * h / log_inv,
                cutoff_norm,
                cutoff_product: cutoff_norm.map(|c| c * h / log_inv.sqrt()),
            });
        }
    }
    Ok(ResolventScan { rows })
}
