use super::ResolventError;
use crate::linalg::{min_sym_eigenvalue, symbol_circulant_real, Mat};
use serde::{Deserialize, Serialize};

/// Symbols `f(y) + f(η)` quantized as `f(y) + f(h̃ D_y)`. For a sum of a
/// function of `y` and a function of `η` this is exactly the Weyl
/// quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicSymbol {
    /// `y^2/<y>^2 + η^2/<η>^2`
    Bracketed,
    /// `y^2 + η^2`
    Pure,
}

impl HarmonicSymbol {
    fn part(&self, s: f64) -> f64 {
        match self {
            HarmonicSymbol::Bracketed => s * s / (1.0 + s * s),
            HarmonicSymbol::Pure => s * s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicRow {
    pub h_tilde: f64,
    pub lambda_min: f64,
    pub ratio: f64,
    pub grid_n: usize,
}

/// Grid quantization of the symbol on `[-L, L)` with `n` points.
pub fn quantize_symbol(symbol: HarmonicSymbol, h_tilde: f64, n: usize, half_width: f64) -> Mat {
    let length = 2.0 * half_width;
    let dx = length / n as f64;
    let mut a = symbol_circulant_real(n, length, |k| symbol.part(h_tilde * k));
    for j in 0..n {
        let y = -half_width + j as f64 * dx;
        a[(j, j)] += symbol.part(y);
    }
    a
}

/// Smallest eigenvalue of the quantized symbol for each `h̃`.
pub fn harm_osc_lower_bound(
    symbol: HarmonicSymbol,
    h_tilde_list: &[f64],
    n: usize,
    half_width: f64,
) -> Result<Vec<HarmonicRow>, ResolventError> {
    let dx = 2.0 * half_width / n as f64;
    h_tilde_list
        .iter()
        .map(|&ht| {
            if !(ht > 0.0) {
                return Err(ResolventError::InvalidParameter(format!("h_tilde = {ht} must be positive")));
            }
            // ground states have width sqrt(h̃) in both y and η
            let width = ht.sqrt();
            if dx > width / 4.0 || half_width < 8.0 * width || ht * std::f64::consts::PI / dx < 8.0 * width {
                return Err(ResolventError::GridTooCoarse(format!(
                    "n = {n}, L = {half_width} does not resolve the scale sqrt(h_tilde) = {width}"
                )));
            }
            let lambda_min = min_sym_eigenvalue(&quantize_symbol(symbol, ht, n, half_width));
            Ok(HarmonicRow { h_tilde: ht, lambda_min, ratio: lambda_min / ht, grid_n: n })
        })
        .collect()
}
