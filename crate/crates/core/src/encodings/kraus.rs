use crate::error::{QrcError, Result};
use crate::operator::{check_square, identity, CMat, C64};

/// Fixed CPTP map in Kraus form, `ρ ↦ Σ_k K_k ρ K_k†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMat>,
}

impl KrausChannel {
    const COMPLETENESS_TOL: f64 = 1e-12;

    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| QrcError::InvalidArgument("empty Kraus list".into()))?;
        let d = check_square(first, "Kraus operator")?;
        if ops.iter().any(|k| k.shape() != (d, d)) {
            return Err(QrcError::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let sum = ops
            .iter()
            .fold(CMat::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        let defect = (sum - identity(d)).camax();
        if defect > Self::COMPLETENESS_TOL {
            return Err(QrcError::InvalidArgument(format!(
                "Kraus operators are not trace preserving (defect {defect:e})"
            )));
        }
        Ok(KrausChannel { ops })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel { ops: vec![identity(dim)] }
    }

    /// Conjugation by a unitary.
    pub fn unitary(u: CMat) -> Result<Self> {
        KrausChannel::new(vec![u])
    }

    /// Single-qubit amplitude damping with decay probability `p`.
    pub fn amplitude_damping(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QrcError::InvalidArgument(format!("damping probability {p}")));
        }
        let k0 = CMat::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new((1.0 - p).sqrt(), 0.0)],
        );
        let k1 = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(p.sqrt(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        );
        KrausChannel::new(vec![k0, k1])
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        self.ops
            .iter()
            .fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, k| acc + k * rho * k.adjoint())
    }

    /// Sequential composition: `self` after `first`.
    pub fn compose(&self, first: &KrausChannel) -> Result<KrausChannel> {
        if self.dim() != first.dim() {
            return Err(QrcError::DimensionMismatch("composing channels of different size".into()));
        }
        let ops = self
            .ops
            .iter()
            .flat_map(|a| first.ops.iter().map(move |b| a * b))
            .collect();
        Ok(KrausChannel { ops })
    }
}
