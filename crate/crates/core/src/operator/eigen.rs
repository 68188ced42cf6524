//! Eigen-decompositions: Hermitian spectra for positivity checks and a
//! general complex eigendecomposition (Schur form plus triangular
//! back-substitution) for superoperators.

use nalgebra::linalg::Schur;

use super::{CMat, C64};
use crate::error::{QrcError, Result};

/// Real eigenvalues of a (numerically) Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut vals: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// `M = V diag(values) V⁻¹` with unit-norm columns in `V`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: CMat,
    /// Spectral condition number of `vectors`; infinite when singular.
    pub condition: f64,
}

impl EigenDecomposition {
    pub fn inverse_vectors(&self) -> Result<CMat> {
        self.vectors
            .clone()
            .try_inverse()
            .ok_or(QrcError::IllConditionedEigenbasis { condition: f64::INFINITY })
    }
}

pub fn eigen_decompose(m: &CMat) -> Result<EigenDecomposition> {
    let n = super::check_square(m, "eigen_decompose input")?;
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        QrcError::InvalidArgument("Schur iteration did not converge".into())
    })?;
    let (q, t) = schur.unpack();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;

    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in j + 1..=k {
                s += t[(j, l)] * y[(l, k)];
            }
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                // Coincident eigenvalues: a nonzero numerator then signals a
                // defective block and drives the condition number up.
                denom = C64::new(small, 0.0);
            }
            y[(j, k)] = -s / denom;
        }
    }
    let mut vectors = q * y;
    for k in 0..n {
        let norm = vectors.column(k).norm();
        if norm.is_finite() && norm > 0.0 {
            vectors.column_mut(k).scale_mut(1.0 / norm);
        }
    }
    let condition = if super::is_finite(&vectors) {
        let sv = vectors.clone().svd(false, false).singular_values;
        let max = sv.iter().copied().fold(0.0f64, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    Ok(EigenDecomposition { values, vectors, condition })
}
