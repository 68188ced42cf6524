//! Closed-form evolution for frozen inputs by diagonalizing the
//! Liouvillian: `vec ρ(t) = V e^{Dt} V⁻¹ vec ρ(0)`.

use nalgebra::DVector;

use super::DriveGenerator;
use crate::error::{QrcError, Result};
use crate::operator::{devectorize, eigen_decompose, hermitian_defect, vectorize, CMat, DensityMatrix, C64};

/// Eigenvector condition numbers above this are refused.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub state: DensityMatrix,
    /// Largest entry of `|ρ − ρ†|` removed by symmetrization.
    pub symmetrization_defect: f64,
}

/// Diagonalized Liouvillian, reusable across initial states and times.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    values: Vec<C64>,
    vectors: CMat,
    inverse: CMat,
    condition: f64,
}

impl SpectralPropagator {
    pub fn new(gen: &DriveGenerator, u: &[f64]) -> Result<Self> {
        let eig = eigen_decompose(&gen.liouvillian(u)?)?;
        if !(eig.condition <= MAX_CONDITION) {
            return Err(QrcError::IllConditionedEigenbasis { condition: eig.condition });
        }
        let inverse = eig.inverse_vectors()?;
        Ok(SpectralPropagator { values: eig.values, vectors: eig.vectors, inverse, condition: eig.condition })
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.values
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn propagate_matrix(&self, m: &CMat, t: f64) -> Result<CMat> {
        let coeffs = &self.inverse * vectorize(m);
        let phases = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(&self.values).map(|(a, l)| a * (l * t).exp()),
        );
        devectorize(&(&self.vectors * phases))
    }

    pub fn evolve(&self, state0: &DensityMatrix, t: f64) -> Result<SpectralSolution> {
        let m = self.propagate_matrix(state0.matrix(), t)?;
        let defect = hermitian_defect(&m);
        log::debug!("spectral evolution: symmetrization removed a Hermiticity defect of {defect:e}");
        let sym = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let state = DensityMatrix::new(sym, state0.dims().to_vec())?;
        Ok(SpectralSolution { state, symmetrization_defect: defect })
    }
}

/// Eigenvalues `ε_n` of the Liouvillian at frozen input `u`.
pub fn liouvillian_spectrum(gen: &DriveGenerator, u: &[f64]) -> Result<Vec<C64>> {
    Ok(eigen_decompose(&gen.liouvillian(u)?)?.values)
}

/// State at time `t` under the frozen generator `L_u`.
pub fn spectral_evolve(state0: &DensityMatrix, gen: &DriveGenerator, u: &[f64], t: f64) -> Result<SpectralSolution> {
    SpectralPropagator::new(gen, u)?.evolve(state0, t)
}
