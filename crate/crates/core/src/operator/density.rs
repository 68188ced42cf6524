use rand::Rng;

use super::{hermitian_defect, hermitian_eigenvalues, is_finite, ket, random, tensor, trace, CMat, CVec, C64};
use crate::error::{QrcError, Result};

/// Hermitian, unit-trace, positive semidefinite matrix on a register of
/// subsystems.
///
/// Construction validates the state. Violations are reported, never
/// repaired.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMat,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = 1e-10;

    pub fn new(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        Self::validate(&matrix, &dims)?;
        Ok(DensityMatrix { matrix, dims })
    }

    /// Checks the density-matrix invariants without taking ownership.
    pub fn validate(m: &CMat, dims: &[usize]) -> Result<()> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || !m.is_square() || m.nrows() != total {
            return Err(QrcError::DimensionMismatch(format!(
                "subsystem dims {dims:?} do not match a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_finite(m) {
            return Err(QrcError::InvalidState("non-finite entries".into()));
        }
        let herm = hermitian_defect(m);
        if herm > Self::HERMITIAN_TOL {
            return Err(QrcError::InvalidState(format!("Hermiticity defect {herm:e}")));
        }
        let tr = trace(m);
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(QrcError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = min_eigenvalue(m);
        if min_eig < -Self::PSD_TOL {
            return Err(QrcError::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// Wraps a matrix that is known to be valid by construction.
    pub(crate) fn new_unchecked(matrix: CMat, dims: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        DensityMatrix { matrix, dims }
    }

    pub fn from_pure(psi: &CVec, dims: Vec<usize>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QrcError::InvalidState("zero or non-finite state vector".into()));
        }
        let psi = psi / C64::new(n, 0.0);
        let mut m = &psi * psi.adjoint();
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self::new(m, dims)
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis_state(dims: &[usize], index: usize) -> Self {
        let d: usize = dims.iter().product();
        let v = ket(d, index);
        DensityMatrix::new_unchecked(&v * v.adjoint(), dims.to_vec())
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        DensityMatrix::new_unchecked(CMat::identity(d, d) / C64::new(d as f64, 0.0), dims.to_vec())
    }

    /// Full-rank random state from the Ginibre ensemble.
    pub fn ginibre<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let d: usize = dims.iter().product();
        DensityMatrix::new_unchecked(random::ginibre_state(d, rng), dims.to_vec())
    }

    pub fn haar_pure<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let d: usize = dims.iter().product();
        let psi = random::haar_pure(d, rng);
        let mut m = &psi * psi.adjoint();
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        DensityMatrix::new_unchecked(m, dims.to_vec())
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix::new_unchecked(tensor(&self.matrix, &other.matrix), dims)
    }

    pub fn purity(&self) -> f64 {
        super::expectation(&self.matrix, &self.matrix)
            .map(|z| z.re)
            .unwrap_or(f64::NAN)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }
}

fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c, Pauli, ONE, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_invalid_matrices() {
        let non_herm = CMat::from_row_slice(2, 2, &[c(0.5), ONE, ZERO, c(0.5)]);
        assert!(matches!(
            DensityMatrix::new(non_herm, vec![2]),
            Err(QrcError::InvalidState(_))
        ));
        let bad_trace = CMat::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace, vec![2]).is_err());
        let negative = CMat::from_diagonal(&CVec::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(DensityMatrix::new(negative, vec![2]).is_err());
        assert!(DensityMatrix::new(CMat::identity(2, 2) * c(0.5), vec![3]).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dims in [vec![2], vec![2, 2], vec![3, 2, 2]] {
            let g = DensityMatrix::ginibre(&dims, &mut rng);
            DensityMatrix::validate(g.matrix(), &dims).unwrap();
            assert!(g.min_eigenvalue() > 0.0);
            let p = DensityMatrix::haar_pure(&dims, &mut rng);
            DensityMatrix::validate(p.matrix(), &dims).unwrap();
            assert!((p.purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_expectation_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rho = DensityMatrix::ginibre(&[2, 2], &mut rng);
        let e = crate::operator::expectation(rho.matrix(), &CMat::identity(4, 4)).unwrap();
        assert!((e - ONE).norm() < 1e-14);
        let z = crate::operator::expectation(rho.matrix(), &crate::operator::tensor(&Pauli::Z.matrix(), &Pauli::I.matrix())).unwrap();
        assert!(z.im.abs() < 1e-14);
    }
}
