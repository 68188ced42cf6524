use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::dynamics::gaussian::damped_derivative_integral;
use crate::dynamics::{DriveGenerator, InputSignal};
use crate::encodings::{Affine, GaussianState};
use crate::error::{QrcError, Result};
use crate::operator::{c, trace, OperatorBasis};

const FORCING_TOL: f64 = 1e-10;

/// Outcome of the forcing test on one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingCheck {
    pub node: String,
    /// The node is driven by the input and the input enters its equation of
    /// motion only through a term proportional to the identity.
    pub satisfied: bool,
    /// Size of the input-dependent part outside the identity direction.
    pub defect: f64,
    /// Whether the input enters the node's equation of motion at all.
    pub driven: bool,
}

impl ForcingCheck {
    fn new(node: &str, driven_part: f64, defect: f64) -> Self {
        let driven = driven_part > FORCING_TOL;
        ForcingCheck { node: node.to_string(), satisfied: driven && defect <= FORCING_TOL, defect, driven }
    }
}

/// For each basis element, compares the Heisenberg derivative `L†_u(B)` at
/// two inputs. The difference must be a multiple of the identity for the
/// node to be linearly forced.
///
/// On a finite-dimensional space the difference is a commutator, hence
/// traceless, so a driven node can never satisfy the test.
pub fn check_forcing_condition(
    gen: &DriveGenerator,
    basis: &OperatorBasis,
    u0: &[f64],
    u1: &[f64],
) -> Result<Vec<ForcingCheck>> {
    if basis.dim() != gen.dim() {
        return Err(QrcError::DimensionMismatch(format!(
            "basis of dimension {} for a generator on dimension {}",
            basis.dim(),
            gen.dim()
        )));
    }
    let d = gen.dim() as f64;
    basis
        .elements()
        .iter()
        .zip(basis.labels())
        .map(|(b, label)| {
            let delta = gen.adjoint_rhs(b, u1)? - gen.adjoint_rhs(b, u0)?;
            let mean = trace(&delta) / c(d);
            let mut off = delta.clone();
            for k in 0..gen.dim() {
                off[(k, k)] -= mean;
            }
            Ok(ForcingCheck::new(label, delta.norm(), off.norm()))
        })
        .collect()
}

/// Quadratic single-mode Hamiltonian with input-dependent coefficients,
/// `H(u) = a_x X + a_p P + k_xx X² + k_pp P² + k_xp (XP+PX)/2`, plus
/// damping through the jump `√(2γ) a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticDrive {
    pub a_x: Affine,
    pub a_p: Affine,
    pub k_xx: Affine,
    pub k_pp: Affine,
    pub k_xp: Affine,
    pub gamma: f64,
}

impl QuadraticDrive {
    /// Pure displacement drive `H = F_x P − F_p X`.
    pub fn displacement(force_x: Affine, force_p: Affine, gamma: f64) -> Self {
        let n = force_x.input_dim();
        QuadraticDrive {
            a_x: Affine::new(-force_p.bias, force_p.weights.iter().map(|w| -w).collect()),
            a_p: force_x,
            k_xx: Affine::constant(0.0, n),
            k_pp: Affine::constant(0.0, n),
            k_xp: Affine::constant(0.0, n),
            gamma,
        }
    }

    /// Matrix `M(u)` with `d/dt m = M(u) m` for the raw moments `m`
    /// ordered as [`GaussianState::RAW_LABELS`].
    pub fn moment_matrix(&self, u: &[f64]) -> Matrix6<f64> {
        let (ax, ap) = (self.a_x.eval(u), self.a_p.eval(u));
        let (kxx, kpp, kxp) = (self.k_xx.eval(u), self.k_pp.eval(u), self.k_xp.eval(u));
        let g = self.gamma;
        #[rustfmt::skip]
        let m = Matrix6::new(
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            ap, kxp - g, 2.0 * kpp, 0.0, 0.0, 0.0,
            -ax, -2.0 * kxx, -kxp - g, 0.0, 0.0, 0.0,
            g, 2.0 * ap, 0.0, 2.0 * kxp - 2.0 * g, 4.0 * kpp, 0.0,
            0.0, -ax, ap, -2.0 * kxx, -2.0 * g, 2.0 * kpp,
            g, 0.0, -2.0 * ax, 0.0, -4.0 * kxx, -2.0 * kxp - 2.0 * g,
        );
        m
    }
}

/// Forcing test on the raw quadrature moments: row `n` of `M(u1) − M(u0)`
/// must vanish outside the identity column.
pub fn check_gaussian_forcing(drive: &QuadraticDrive, u0: &[f64], u1: &[f64]) -> Vec<ForcingCheck> {
    let delta = drive.moment_matrix(u1) - drive.moment_matrix(u0);
    GaussianState::RAW_LABELS
        .iter()
        .enumerate()
        .map(|(n, label)| {
            let row = delta.row(n);
            let driven = row.amax();
            let defect = (1..6).map(|j| row[j].abs()).fold(0.0, f64::max);
            ForcingCheck::new(label, driven, defect)
        })
        .collect()
}

/// `(1/γ) Σ_l c_l ∫_{t0}^{t} e^{−γ(t−s)} du_l/ds ds`: the amount by which
/// the damped node at `t` falls short of the instantaneous affine response
/// `f(u(t))/γ` (transient from `t0` excluded).
pub fn nl_contribution(
    f: &Affine,
    gamma: f64,
    signal: &InputSignal,
    t0: f64,
    t: f64,
    intervals: usize,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(QrcError::Degenerate(format!("damping rate {gamma}")));
    }
    if signal.dim() != f.input_dim() {
        return Err(QrcError::InputArity { expected: f.input_dim(), got: signal.dim() });
    }
    Ok(damped_derivative_integral(f, gamma, signal, t0, t, intervals) / gamma)
}
