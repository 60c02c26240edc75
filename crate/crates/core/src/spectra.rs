//! Dirichlet Laplacian on a segment of a hyperbolic cylinder, separated in
//! the angular variable, and the eigenfunction mass left outside a
//! neighbourhood of the neck geodesic.
//!
//! Mode `k` of `-Δ` on `dr^2 + f(r)^2 dθ^2` is the Sturm–Liouville operator
//! `-(1/f)(f u')' + k^2/f^2 u` on `[-R, R]` with Dirichlet ends. It is
//! discretized on `N` interior nodes by the conservative three-point scheme,
//! which is symmetric in the weighted inner product `Σ u v f dr`.

use crate::linalg::{SymTridiagonal, TridiagError};
use crate::profile::WarpProfile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_NODES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("grid too coarse: {nodes} nodes, need at least {MIN_NODES}")]
    GridTooCoarse { nodes: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),
}

impl From<TridiagError> for SpectraError {
    fn from(e: TridiagError) -> Self {
        SpectraError::ConvergenceFailure(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub mode: u32,
    pub half_length: f64,
    pub profile: WarpProfile,
    /// interior nodes
    pub nodes: Vec<f64>,
    pub spacing: f64,
    /// volume weight `f(r_i)`
    pub weight: Vec<f64>,
    /// `W^{-1/2} K W^{-1/2}`, similar to the weighted operator
    symmetric: SymTridiagonal,
}

/// One weight-normalized eigenpair; `values` are nodal values of `u` with
/// `Σ u_i^2 f(r_i) dr = 1`.
#[derive(Debug, Clone)]
pub struct RadialEigenpair {
    pub eigenvalue: f64,
    pub values: Vec<f64>,
}

impl RadialEigenpair {
    /// Frequency `λ` with `-Δ u = λ^2 u`.
    pub fn frequency(&self) -> f64 {
        self.eigenvalue.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Which eigenvalue near the barrier top `k^2` a scan reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierTopSelection {
    /// Closest eigenvalue among modes even in `r`. Odd modes vanish on the
    /// neck geodesic and alternate with the even ones as `k` varies.
    #[default]
    NearestEven,
    /// Closest eigenvalue overall, regardless of parity.
    Nearest,
}

/// Hyperbolic-cylinder operator for mode `k`.
pub fn build_radial_operator(k: u32, half_length: f64, nodes: usize) -> Result<RadialOperator, SpectraError> {
    RadialOperator::new(k, half_length, nodes, WarpProfile::Cosh)
}

impl RadialOperator {
    pub fn new(k: u32, half_length: f64, n: usize, profile: WarpProfile) -> Result<Self, SpectraError> {
        if n < MIN_NODES {
            return Err(SpectraError::GridTooCoarse { nodes: n });
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(SpectraError::InvalidParameter(format!("half length {half_length} must be positive")));
        }
        let dr = 2.0 * half_length / (n as f64 + 1.0);
        let nodes: Vec<f64> = (1..=n).map(|i| -half_length + i as f64 * dr).collect();
        let weight: Vec<f64> = nodes.iter().map(|&r| profile.f(r)).collect();
        let kk = (k as f64).powi(2);
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for (i, &r) in nodes.iter().enumerate() {
            let wl = profile.f(r - 0.5 * dr);
            let wr = profile.f(r + 0.5 * dr);
            let wi = weight[i];
            diag.push((wl + wr) / (dr * dr * wi) + kk / (wi * wi));
            if i + 1 < n {
                off.push(-wr / (dr * dr * (wi * weight[i + 1]).sqrt()));
            }
        }
        Ok(Self {
            mode: k,
            half_length,
            profile,
            nodes,
            spacing: dr,
            weight,
            symmetric: SymTridiagonal::new(diag, off),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Effective potential `k^2 / f(r)^2`.
    pub fn effective_potential(&self) -> Vec<f64> {
        let kk = (self.mode as f64).powi(2);
        self.weight.iter().map(|w| kk / (w * w)).collect()
    }

    /// Apply the (non-symmetric) weighted operator to nodal values.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let sq: Vec<f64> = self.weight.iter().map(|w| w.sqrt()).collect();
        let y: Vec<f64> = u.iter().zip(&sq).map(|(a, s)| a * s).collect();
        self.symmetric.apply(&y).iter().zip(&sq).map(|(a, s)| a / s).collect()
    }

    /// Weighted inner product `Σ u v f dr`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .zip(&self.weight)
            .map(|((a, b), w)| a * b * w)
            .sum::<f64>()
            * self.spacing
    }

    fn pair_from_symmetric(&self, eigenvalue: f64, y: &[f64]) -> RadialEigenpair {
        let scale = self.spacing.sqrt();
        let values = y
            .iter()
            .zip(&self.weight)
            .map(|(a, w)| a / (w.sqrt() * scale))
            .collect();
        RadialEigenpair { eigenvalue, values }
    }

    fn check_residual(&self, pair: &RadialEigenpair) -> Result<(), SpectraError> {
        let au = self.apply(&pair.values);
        let diff: Vec<f64> = au.iter().zip(&pair.values).map(|(a, u)| a - pair.eigenvalue * u).collect();
        let res = self.inner(&diff, &diff).sqrt();
        // residual relative to the operator scale: nodal round-off alone is
        // eps * ||A|| where ||A|| ~ 4 / dr^2
        let tol = 1e-8 * pair.eigenvalue.abs().max(1.0) + 1e-12 * 4.0 / (self.spacing * self.spacing);
        if res <= tol {
            Ok(())
        } else {
            Err(SpectraError::ConvergenceFailure(format!(
                "residual {res:e} above {tol:e} at eigenvalue {}",
                pair.eigenvalue
            )))
        }
    }

    /// Eigenpair whose eigenvalue is closest to `target`.
    pub fn eigenpair_nearest(&self, target: f64) -> Result<RadialEigenpair, SpectraError> {
        let idx = self.symmetric.nearest_index(target)?;
        let lam = self.symmetric.eigenvalue(idx)?;
        let y = self.symmetric.eigenvector(lam, &[])?;
        let pair = self.pair_from_symmetric(lam, &y);
        self.check_residual(&pair)?;
        Ok(pair)
    }

    /// Closest eigenpair within one reflection sector `r -> -r`. Requires an
    /// even warp profile; the grid is symmetric about `r = 0` by construction.
    pub fn eigenpair_nearest_in_sector(&self, target: f64, parity: Parity) -> Result<RadialEigenpair, SpectraError> {
        let n = self.len();
        let half = n / 2;
        let d = &self.symmetric.diag;
        let e = &self.symmetric.off;
        // sector operator on the left half (plus the centre node for odd n)
        let sign = if parity == Parity::Even { 1.0 } else { -1.0 };
        let (diag, off, centre) = if n % 2 == 0 {
            let mut diag = d[..half].to_vec();
            diag[half - 1] += sign * e[half - 1];
            (diag, e[..half - 1].to_vec(), false)
        } else if parity == Parity::Even {
            let mut off = e[..half].to_vec();
            off[half - 1] *= std::f64::consts::SQRT_2;
            (d[..=half].to_vec(), off, true)
        } else {
            (d[..half].to_vec(), e[..half - 1].to_vec(), false)
        };
        let t = SymTridiagonal::new(diag, off);
        let lam = t.eigenvalue(t.nearest_index(target)?)?;
        let z = t.eigenvector(lam, &[])?;
        let mut y = vec![0.0; n];
        for i in 0..half {
            y[i] = z[i];
            y[n - 1 - i] = sign * z[i];
        }
        if centre {
            y[half] = z[half] * std::f64::consts::SQRT_2;
        }
        let nrm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        y.iter_mut().for_each(|a| *a /= nrm);
        let pair = self.pair_from_symmetric(lam, &y);
        self.check_residual(&pair)?;
        Ok(pair)
    }

    pub fn select_barrier_top(&self, selection: BarrierTopSelection) -> Result<RadialEigenpair, SpectraError> {
        let target = (self.mode as f64).powi(2);
        match selection {
            BarrierTopSelection::Nearest => self.eigenpair_nearest(target),
            BarrierTopSelection::NearestEven => self.eigenpair_nearest_in_sector(target, Parity::Even),
        }
    }

    /// Mass of `u` in `{|r| > δ}`.
    pub fn mass_outside(&self, pair: &RadialEigenpair, delta: f64) -> f64 {
        let masked: Vec<f64> = self
            .nodes
            .iter()
            .zip(&pair.values)
            .map(|(&r, &u)| if r.abs() > delta { u } else { 0.0 })
            .collect();
        self.inner(&masked, &masked)
    }
}

/// The `count` lowest eigenpairs, ascending, weight-normalized.
pub fn solve_eigenpairs(op: &RadialOperator, count: usize) -> Result<Vec<RadialEigenpair>, SpectraError> {
    if count > op.len() / 4 {
        return Err(SpectraError::InvalidParameter(format!(
            "count {count} exceeds N/4 = {}",
            op.len() / 4
        )));
    }
    let pairs = op.symmetric.lowest_eigenpairs(count)?;
    pairs
        .into_iter()
        .map(|(l, y)| {
            let p = op.pair_from_symmetric(l, &y);
            op.check_residual(&p)?;
            Ok(p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub k: u32,
    pub eigenvalue: f64,
    pub lambda: f64,
    pub mass_outside: f64,
    pub product_mass_log_lambda: f64,
    pub grid_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBand {
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

impl FitBand {
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
        Self { min, max, ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub delta: f64,
    pub half_length: f64,
    pub selection: BarrierTopSelection,
    pub rows: Vec<ConcentrationRow>,
    pub band: FitBand,
}

/// For each mode, picks the even eigenfunction closest to the barrier top
/// `k^2` and measures the mass it leaves outside `|r| ≤ δ`.
pub fn nonconcentration_scan(
    k_list: &[u32],
    delta: f64,
    half_length: f64,
    nodes: usize,
) -> Result<ConcentrationReport, SpectraError> {
    nonconcentration_scan_with(k_list, delta, half_length, nodes, BarrierTopSelection::default())
}

pub fn nonconcentration_scan_with(
    k_list: &[u32],
    delta: f64,
    half_length: f64,
    nodes: usize,
    selection: BarrierTopSelection,
) -> Result<ConcentrationReport, SpectraError> {
    if !(delta >= 0.0 && delta < half_length) {
        return Err(SpectraError::InvalidParameter(format!(
            "delta {delta} must lie in [0, R = {half_length})"
        )));
    }
    let rows: Result<Vec<ConcentrationRow>, SpectraError> = k_list
        .par_iter()
        .map(|&k| {
            let op = build_radial_operator(k, half_length, nodes)?;
            let pair = op.select_barrier_top(selection)?;
            let lambda = pair.frequency();
            let mass = op.mass_outside(&pair, delta);
            Ok(ConcentrationRow {
                k,
                eigenvalue: pair.eigenvalue,
                lambda,
                mass_outside: mass,
                product_mass_log_lambda: mass * lambda.ln(),
                grid_n: nodes,
            })
        })
        .collect();
    let rows = rows?;
    let band = FitBand::from_values(rows.iter().filter(|r| r.k > 0).map(|r| r.product_mass_log_lambda));
    Ok(ConcentrationReport { delta, half_length, selection, rows, band })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(build_radial_operator(0, 3.0, 32), Err(SpectraError::GridTooCoarse { .. })));
    }

    #[test]
    fn flat_mode_zero_matches_sine_modes() {
        let r = 3.0;
        let op = RadialOperator::new(0, r, 512, WarpProfile::Flat).unwrap();
        let pairs = solve_eigenpairs(&op, 10).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let exact = (((j + 1) as f64) * PI / (2.0 * r)).powi(2);
            assert!((p.eigenvalue - exact).abs() / exact < 0.01);
        }
    }

    #[test]
    fn weighted_symmetry() {
        let op = build_radial_operator(7, 3.0, 200).unwrap();
        let u: Vec<f64> = op.nodes.iter().map(|r| (3.0 * r).sin() + r * r).collect();
        let v: Vec<f64> = op.nodes.iter().map(|r| (-r * r).exp() * (1.0 + r)).collect();
        let lhs = op.inner(&op.apply(&u), &v);
        let rhs = op.inner(&u, &op.apply(&v));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn barrier_height_is_k_squared() {
        let op = build_radial_operator(10, 3.0, 1024).unwrap();
        let w = op.effective_potential();
        let max = w.iter().cloned().fold(0.0, f64::max);
        // nodes straddle r = 0 symmetrically
        assert!((max - 100.0).abs() < 1e-3);
        assert!(max <= 100.0);
    }

    #[test]
    fn eigenvectors_normalized_and_orthogonal() {
        let op = build_radial_operator(5, 3.0, 256).unwrap();
        let pairs = solve_eigenpairs(&op, 12).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            assert!((op.inner(&p.values, &p.values) - 1.0).abs() < 1e-10);
            for q in &pairs[..i] {
                assert!(op.inner(&p.values, &q.values).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn too_many_eigenpairs_rejected() {
        let op = build_radial_operator(1, 3.0, 64).unwrap();
        assert!(solve_eigenpairs(&op, 17).is_err());
    }

    #[test]
    fn mass_outside_monotone_in_delta() {
        let op = build_radial_operator(20, 3.0, 512).unwrap();
        let p = op.eigenpair_nearest(400.0).unwrap();
        let mut last = f64::INFINITY;
        for d in [0.0, 0.1, 0.3, 0.5, 1.0, 2.0] {
            let m = op.mass_outside(&p, d);
            assert!((0.0..=1.0 + 1e-12).contains(&m));
            assert!(m <= last + 1e-15);
            last = m;
        }
    }

    #[test]
    fn refinement_changes_low_modes_little() {
        let a = solve_eigenpairs(&build_radial_operator(3, 3.0, 512).unwrap(), 10).unwrap();
        let b = solve_eigenpairs(&build_radial_operator(3, 3.0, 1024).unwrap(), 10).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p.frequency() - q.frequency()).abs() / q.frequency() < 1e-3);
        }
    }

    #[test]
    fn sector_solves_match_full_spectrum() {
        for n in [200, 201] {
            let op = build_radial_operator(6, 3.0, n).unwrap();
            for target in [20.0, 36.0, 90.0] {
                let full = op.eigenpair_nearest(target).unwrap();
                let even = op.eigenpair_nearest_in_sector(target, Parity::Even).unwrap();
                let odd = op.eigenpair_nearest_in_sector(target, Parity::Odd).unwrap();
                let best = if (even.eigenvalue - target).abs() <= (odd.eigenvalue - target).abs() { &even } else { &odd };
                assert!((best.eigenvalue - full.eigenvalue).abs() < 1e-9 * full.eigenvalue);
                assert!((op.inner(&even.values, &even.values) - 1.0).abs() < 1e-10);
                assert!(op.inner(&even.values, &odd.values).abs() < 1e-10);
                for i in 0..n {
                    assert!((even.values[i] - even.values[n - 1 - i]).abs() < 1e-9);
                    assert!((odd.values[i] + odd.values[n - 1 - i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn mode_zero_spreads_mass() {
        let rep = nonconcentration_scan(&[0], 0.5, 3.0, 512).unwrap();
        assert!(rep.rows[0].mass_outside >= 0.3);
    }
}
