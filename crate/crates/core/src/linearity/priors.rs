use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encodings::GaussianState;
use crate::error::{QrcError, Result};
use crate::operator::{c, ket, tensor_all, CMat, CVec, DensityMatrix, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    HaarPure,
    GinibreMixed,
    /// Products of single-qubit Pauli eigenstates.
    ProductBasis,
}

/// Seeded ensemble of prior states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEnsemble {
    pub kind: PriorKind,
    pub count: usize,
    pub seed: u64,
}

impl PriorEnsemble {
    pub fn new(kind: PriorKind, count: usize, seed: u64) -> Self {
        PriorEnsemble { kind, count, seed }
    }

    /// Twenty Ginibre-mixed priors.
    pub fn default_with_seed(seed: u64) -> Self {
        Self::new(PriorKind::GinibreMixed, 20, seed)
    }

    pub fn sample(&self, dims: &[usize]) -> Result<Vec<DensityMatrix>> {
        if self.count == 0 {
            return Err(QrcError::InvalidArgument("empty prior ensemble".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            PriorKind::HaarPure => Ok((0..self.count).map(|_| DensityMatrix::haar_pure(dims, &mut rng)).collect()),
            PriorKind::GinibreMixed => Ok((0..self.count).map(|_| DensityMatrix::ginibre(dims, &mut rng)).collect()),
            PriorKind::ProductBasis => {
                if dims.iter().any(|&d| d != 2) {
                    return Err(QrcError::InvalidArgument(format!(
                        "product-basis priors need a qubit register, got {dims:?}"
                    )));
                }
                (0..self.count)
                    .map(|_| {
                        let factors: Vec<CMat> = dims.iter().map(|_| pauli_eigenstate(rng.random_range(0..6))).collect();
                        DensityMatrix::new(tensor_all(factors.iter()), dims.to_vec())
                    })
                    .collect()
            }
        }
    }

    /// Random displaced squeezed thermal states, used as priors for
    /// Gaussian encodings regardless of `kind`.
    pub fn sample_gaussian(&self) -> Result<Vec<GaussianState>> {
        if self.count == 0 {
            return Err(QrcError::InvalidArgument("empty prior ensemble".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok((0..self.count).map(|_| GaussianState::random(&mut rng)).collect())
    }
}

/// `|0⟩, |1⟩, |±⟩, |±i⟩` for `k = 0..6`.
fn pauli_eigenstate(k: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v: CVec = match k {
        0 => ket(2, 0),
        1 => ket(2, 1),
        2 => CVec::from_vec(vec![c(s), c(s)]),
        3 => CVec::from_vec(vec![c(s), c(-s)]),
        4 => CVec::from_vec(vec![c(s), I * s]),
        _ => CVec::from_vec(vec![c(s), -I * s]),
    };
    let m = &v * v.adjoint();
    (&m + m.adjoint()) * c(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_samples_valid_states() {
        for kind in [PriorKind::HaarPure, PriorKind::GinibreMixed, PriorKind::ProductBasis] {
            let states = PriorEnsemble::new(kind, 7, 3).sample(&[2, 2]).unwrap();
            assert_eq!(states.len(), 7);
            for s in &states {
                DensityMatrix::validate(s.matrix(), &[2, 2]).unwrap();
            }
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let e = PriorEnsemble::default_with_seed(5);
        assert_eq!(e.sample(&[3]).unwrap(), e.sample(&[3]).unwrap());
        assert_ne!(e.sample(&[3]).unwrap(), PriorEnsemble::default_with_seed(6).sample(&[3]).unwrap());
        assert_eq!(e.sample_gaussian().unwrap(), e.sample_gaussian().unwrap());
    }

    #[test]
    fn product_basis_needs_qubits() {
        assert!(PriorEnsemble::new(PriorKind::ProductBasis, 2, 0).sample(&[3]).is_err());
    }
}
