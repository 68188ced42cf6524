use nalgebra::{DMatrix, DVector};

use crate::error::{QrcError, Result};

/// Least-squares affine model `y ≈ a₀ + Σ_l a_l u_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    /// `[a₀, a₁, …, a_N]`.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
}

impl AffineFit {
    pub fn predict(&self, u: &[f64]) -> f64 {
        self.coefficients[0] + self.coefficients[1..].iter().zip(u).map(|(a, x)| a * x).sum::<f64>()
    }
}

/// Fits an affine model through Householder QR of the design matrix.
///
/// Fails with [`QrcError::RankDeficient`] when there are not more samples
/// than coefficients or the inputs do not span an affine basis.
pub fn affine_fit(u_samples: &[Vec<f64>], y: &[f64]) -> Result<AffineFit> {
    let m = u_samples.len();
    if m != y.len() {
        return Err(QrcError::DimensionMismatch(format!("{m} inputs but {} outputs", y.len())));
    }
    let n = u_samples.first().map_or(0, Vec::len);
    if u_samples.iter().any(|u| u.len() != n) {
        return Err(QrcError::DimensionMismatch("input vectors differ in length".into()));
    }
    if m <= n + 1 {
        return Err(QrcError::RankDeficient);
    }
    let design = DMatrix::from_fn(m, n + 1, |i, j| if j == 0 { 1.0 } else { u_samples[i][j - 1] });
    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = (0..=n).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if (0..=n).any(|k| r[(k, k)].abs() <= 1e-12 * diag_max.max(1.0)) {
        return Err(QrcError::RankDeficient);
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coeffs = r
        .solve_upper_triangular(&qty)
        .ok_or(QrcError::RankDeficient)?;
    let resid = yv - design * &coeffs;
    let max_abs_residual = resid.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(AffineFit {
        coefficients: coeffs.iter().copied().collect(),
        residuals: resid.iter().copied().collect(),
        max_abs_residual,
    })
}
