//! Input encodings: channel families parameterized by the input vector `u`.
//!
//! Discrete encodings on finite registers are [`ParamChannel`]s, applied
//! operationally to density matrices. Gaussian encodings act on the first and
//! second quadrature moments of a single bosonic mode
//! ([`gaussian::GaussianChannel`]).
//!
//! Re-initialization encodings always replace the *leading* subsystems of the
//! register: the output is `σ(u) ⊗ Tr_targets[ρ]`.

use serde::{Deserialize, Serialize};

mod channel;
pub mod gaussian;
mod kraus;

pub use channel::{ChannelKind, ParamChannel, StateMap};
pub use gaussian::{GaussianChannel, GaussianKind, GaussianState};
pub use kraus::KrausChannel;

/// Affine scalar map `u ↦ bias + Σ_l weights[l]·u_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub bias: f64,
    pub weights: Vec<f64>,
}

impl Affine {
    pub fn new(bias: f64, weights: Vec<f64>) -> Self {
        Affine { bias, weights }
    }

    /// `u ↦ u_0`.
    pub fn identity() -> Self {
        Affine::new(0.0, vec![1.0])
    }

    pub fn constant(value: f64, input_dim: usize) -> Self {
        Affine::new(value, vec![0.0; input_dim])
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(u).map(|(w, x)| w * x).sum::<f64>()
    }
}

/// Default input domain: `[0, 1]` per component.
pub fn unit_domain(input_dim: usize) -> Vec<(f64, f64)> {
    vec![(0.0, 1.0); input_dim]
}

pub(crate) fn check_input(u: &[f64], domain: &[(f64, f64)]) -> crate::Result<()> {
    if u.len() != domain.len() {
        return Err(crate::QrcError::InputArity { expected: domain.len(), got: u.len() });
    }
    for (index, (&value, &(lo, hi))) in u.iter().zip(domain).enumerate() {
        if !(value >= lo && value <= hi) {
            return Err(crate::QrcError::InputOutOfDomain { index, value, lo, hi });
        }
    }
    Ok(())
}
