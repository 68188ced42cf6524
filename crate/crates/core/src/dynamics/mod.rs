//! Continuous-time reservoir dynamics.
//!
//! A [`DriveGenerator`] describes the Lindbladian family
//!
//! ```text
//! L_u[ρ] = −i[H(u), ρ] + Σ_j γ_j (L_j ρ L_j† − ½{L_j†L_j, ρ}),
//! H(u)   = H_0 + Σ_l f_l(u) G_l,
//! ```
//!
//! with affine couplings `f_l`. The couplings depend on time only through
//! `u(t)`, so input masks are time independent by construction.
//!
//! Superoperators act on column-stacked vectors, `vec(AρB) = (Bᵀ⊗A) vec(ρ)`.
//! With the Hilbert–Schmidt inner product the adjoint generator is
//! represented by the conjugate transpose of the Liouvillian matrix.

pub(crate) mod gaussian;
mod integrate;
mod magnus;
mod signal;
mod spectral;

pub use gaussian::{gaussian_evolve, general_solution_node, GaussianDrive, GaussianTrajectory, NodeMode};
pub use integrate::{adjoint_nodes, evolve, evolve_adjoint, EvolveOptions, Trajectory};
pub use magnus::{magnus_first_order, ordered_exponential_pwc};
pub use signal::InputSignal;
pub use spectral::{liouvillian_spectrum, spectral_evolve, SpectralPropagator, SpectralSolution, MAX_CONDITION};

use crate::encodings::Affine;
use crate::error::{QrcError, Result};
use crate::operator::{c, check_square, hermitian_defect, identity, tensor, CMat, I};

/// Lindbladian family with input-dependent Hamiltonian drive terms.
#[derive(Debug, Clone)]
pub struct DriveGenerator {
    h0: CMat,
    drives: Vec<(CMat, Affine)>,
    jumps: Vec<(CMat, f64)>,
    input_dim: usize,
    // Σ_j γ_j L_j†L_j
    decay: CMat,
    /// `(√γ L, √γ L†)` for every jump with a positive rate.
    scaled_jumps: Vec<(CMat, CMat)>,
}

impl DriveGenerator {
    pub fn new(h0: CMat, drives: Vec<(CMat, Affine)>, jumps: Vec<(CMat, f64)>) -> Result<Self> {
        let d = check_square(&h0, "static Hamiltonian")?;
        if hermitian_defect(&h0) > 1e-12 {
            return Err(QrcError::InvalidArgument("static Hamiltonian is not Hermitian".into()));
        }
        let input_dim = drives.first().map(|(_, f)| f.input_dim()).unwrap_or(0);
        for (g, f) in &drives {
            if g.shape() != (d, d) {
                return Err(QrcError::DimensionMismatch("drive operator size".into()));
            }
            if hermitian_defect(g) > 1e-12 {
                return Err(QrcError::InvalidArgument("drive operator is not Hermitian".into()));
            }
            if f.input_dim() != input_dim {
                return Err(QrcError::InvalidArgument("drive couplings disagree on input dimension".into()));
            }
        }
        let mut decay = CMat::zeros(d, d);
        for (l, rate) in &jumps {
            if l.shape() != (d, d) {
                return Err(QrcError::DimensionMismatch("jump operator size".into()));
            }
            if !(*rate >= 0.0) || !rate.is_finite() {
                return Err(QrcError::InvalidArgument(format!("jump rate {rate} must be finite and ≥ 0")));
            }
            decay += l.adjoint() * l * c(*rate);
        }
        let scaled_jumps = jumps
            .iter()
            .filter(|(_, rate)| *rate > 0.0)
            .map(|(l, rate)| (l * c(rate.sqrt()), l.adjoint() * c(rate.sqrt())))
            .collect();
        Ok(DriveGenerator { h0, drives, jumps, input_dim, decay, scaled_jumps })
    }

    /// Input-independent generator.
    pub fn fixed(h0: CMat, jumps: Vec<(CMat, f64)>) -> Result<Self> {
        Self::new(h0, Vec::new(), jumps)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// Number of input components the couplings read; 0 when undriven.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn h0(&self) -> &CMat {
        &self.h0
    }

    pub fn drives(&self) -> &[(CMat, Affine)] {
        &self.drives
    }

    pub fn jumps(&self) -> &[(CMat, f64)] {
        &self.jumps
    }

    pub fn gamma_max(&self) -> f64 {
        self.jumps.iter().map(|(_, g)| *g).fold(0.0, f64::max)
    }

    /// Smallest jump rate; zero without jumps.
    pub fn gamma_min(&self) -> f64 {
        if self.jumps.is_empty() {
            return 0.0;
        }
        self.jumps.iter().map(|(_, g)| *g).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_input(&self, u: &[f64]) -> Result<()> {
        if !self.drives.is_empty() && u.len() != self.input_dim {
            return Err(QrcError::InputArity { expected: self.input_dim, got: u.len() });
        }
        Ok(())
    }

    pub fn hamiltonian(&self, u: &[f64]) -> CMat {
        let mut h = self.h0.clone();
        for (g, f) in &self.drives {
            h += g * c(f.eval(u));
        }
        h
    }

    /// Rough rate scale used to pick default step sizes: `max(γ_max, ‖H‖)`
    /// with `‖H‖` bounded for inputs in `[-1, 1]`.
    pub(crate) fn rate_scale(&self) -> f64 {
        let op_norm = |m: &CMat| m.norm();
        let h = op_norm(&self.h0)
            + self
                .drives
                .iter()
                .map(|(g, f)| op_norm(g) * (f.bias.abs() + f.weights.iter().map(|w| w.abs()).sum::<f64>()))
                .sum::<f64>();
        let jumps: f64 = self.jumps.iter().map(|(l, g)| g * l.norm().powi(2)).sum();
        self.gamma_max().max(h).max(jumps)
    }

    fn check_operand(&self, m: &CMat, what: &str) -> Result<()> {
        let d = self.dim();
        if m.shape() != (d, d) {
            return Err(QrcError::DimensionMismatch(format!(
                "{what} is {:?}, generator acts on dimension {d}",
                m.shape()
            )));
        }
        Ok(())
    }

    /// `−i(H_eff ρ − ρ H_eff†) + Σ γ L ρ L†` with `H_eff = H − (i/2) Σ γ L†L`.
    pub(crate) fn rhs_with(&self, h: &CMat, rho: &CMat) -> CMat {
        let heff = h - &self.decay * (I * 0.5);
        let a = &heff * rho;
        let mut out = (&a - a.adjoint()) * (-I);
        for (l, l_adj) in &self.scaled_jumps {
            out += l * rho * l_adj;
        }
        out
    }

    pub(crate) fn adjoint_rhs_with(&self, h: &CMat, b: &CMat) -> CMat {
        let heff = h - &self.decay * (I * 0.5);
        let mut out = (heff.adjoint() * b - b * &heff) * I;
        for (l, l_adj) in &self.scaled_jumps {
            out += l_adj * b * l;
        }
        out
    }

    /// Schrödinger-picture generator `L_u[ρ]`.
    pub fn lindblad_rhs(&self, rho: &CMat, u: &[f64]) -> Result<CMat> {
        self.check_operand(rho, "state")?;
        self.check_input(u)?;
        Ok(self.rhs_with(&self.hamiltonian(u), rho))
    }

    /// Heisenberg-picture generator
    /// `L_u†[B] = i[H, B] + Σ_j γ_j (L_j† B L_j − ½{L_j†L_j, B})`.
    pub fn adjoint_rhs(&self, b: &CMat, u: &[f64]) -> Result<CMat> {
        self.check_operand(b, "operator")?;
        self.check_input(u)?;
        Ok(self.adjoint_rhs_with(&self.hamiltonian(u), b))
    }

    /// Matrix of `L_u` acting on column-stacked density matrices.
    pub fn liouvillian(&self, u: &[f64]) -> Result<CMat> {
        self.check_input(u)?;
        let d = self.dim();
        let id = identity(d);
        let h = self.hamiltonian(u);
        let mut sup = (tensor(&id, &h) - tensor(&h.transpose(), &id)) * (-I);
        for (l, rate) in &self.jumps {
            if *rate > 0.0 {
                sup += tensor(&l.conjugate(), l) * c(*rate);
            }
        }
        sup -= (tensor(&id, &self.decay) + tensor(&self.decay.transpose(), &id)) * c(0.5);
        Ok(sup)
    }

    /// Matrix of the adjoint generator: the conjugate transpose of
    /// [`Self::liouvillian`].
    pub fn adjoint_liouvillian(&self, u: &[f64]) -> Result<CMat> {
        Ok(self.liouvillian(u)?.adjoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random::{ginibre_matrix, random_hermitian};
    use crate::operator::{expectation, sigma_minus, trace, vectorize, DensityMatrix, Pauli};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_generator(d: usize, drives: usize, rng: &mut ChaCha8Rng) -> DriveGenerator {
        use rand::Rng;
        let h0 = random_hermitian(d, rng);
        let drives = (0..drives)
            .map(|_| (random_hermitian(d, rng), Affine::new(rng.random_range(-1.0..1.0), vec![rng.random_range(-1.0..1.0)])))
            .collect();
        let jumps = (0..2).map(|_| (ginibre_matrix(d, d, rng) * c(0.5), rng.random_range(0.0..1.0))).collect();
        DriveGenerator::new(h0, drives, jumps).unwrap()
    }

    #[test]
    fn zero_generator_gives_zero() {
        let g = DriveGenerator::fixed(CMat::zeros(2, 2), vec![]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&[2]);
        assert_eq!(g.lindblad_rhs(rho.matrix(), &[]).unwrap(), CMat::zeros(2, 2));
        assert_eq!(g.liouvillian(&[]).unwrap(), CMat::zeros(4, 4));
    }

    #[test]
    fn decay_rate_of_excited_qubit() {
        // σ₋ = |0⟩⟨1| lowers |1⟩ to |0⟩, so ⟨Z⟩ rises from −1 at rate 2γ.
        let gamma = 0.7;
        let g = DriveGenerator::fixed(CMat::zeros(2, 2), vec![(sigma_minus(), gamma)]).unwrap();
        let excited = DensityMatrix::basis_state(&[2], 1);
        let drho = g.lindblad_rhs(excited.matrix(), &[]).unwrap();
        let dz = expectation(&drho, &Pauli::Z.matrix()).unwrap();
        assert!((dz.re - 2.0 * gamma).abs() < 1e-14);
    }

    #[test]
    fn rhs_is_traceless_and_dual_to_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2, 3, 4] {
            for _ in 0..5 {
                let g = random_generator(d, 2, &mut rng);
                let rho = DensityMatrix::ginibre(&[d], &mut rng);
                let b = random_hermitian(d, &mut rng);
                let u = [0.37];
                let r = g.lindblad_rhs(rho.matrix(), &u).unwrap();
                assert!(trace(&r).norm() < 1e-12);
                let lhs = trace(&(&b * r));
                let rhs = trace(&(g.adjoint_rhs(&b, &u).unwrap() * rho.matrix()));
                assert!((lhs - rhs).norm() < 1e-12);
                assert!(g.adjoint_rhs(&identity(d), &u).unwrap().camax() < 1e-12);
            }
        }
    }

    #[test]
    fn liouvillian_matches_rhs_on_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for d in [2, 4] {
            let g = random_generator(d, 1, &mut rng);
            let u = [0.6];
            let sup = g.liouvillian(&u).unwrap();
            let adj = g.adjoint_liouvillian(&u).unwrap();
            for _ in 0..10 {
                let rho = DensityMatrix::ginibre(&[d], &mut rng);
                let direct = vectorize(&g.lindblad_rhs(rho.matrix(), &u).unwrap());
                assert!((&sup * vectorize(rho.matrix()) - direct).camax() < 1e-12);
                let b = ginibre_matrix(d, d, &mut rng);
                let direct = vectorize(&g.adjoint_rhs(&b, &u).unwrap());
                assert!((&adj * vectorize(&b) - direct).camax() < 1e-12);
            }
            // vec(I)† is a left null vector.
            let left = vectorize(&identity(d)).adjoint() * &sup;
            assert!(left.camax() < 1e-10);
        }
    }

    #[test]
    fn hamiltonian_only_adjoint_is_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h0 = random_hermitian(3, &mut rng);
        let g = DriveGenerator::new(h0, vec![(random_hermitian(3, &mut rng), Affine::identity())], vec![]).unwrap();
        let b = random_hermitian(3, &mut rng);
        assert!(trace(&g.adjoint_rhs(&b, &[0.2]).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_generators() {
        let x = Pauli::X.matrix();
        assert!(DriveGenerator::fixed(Pauli::X.matrix() * I, vec![]).is_err());
        assert!(DriveGenerator::fixed(x.clone(), vec![(sigma_minus(), -0.1)]).is_err());
        assert!(DriveGenerator::fixed(x.clone(), vec![(CMat::zeros(3, 3), 0.1)]).is_err());
        let g = DriveGenerator::new(x.clone(), vec![(x, Affine::identity())], vec![]).unwrap();
        assert!(matches!(g.lindblad_rhs(&CMat::zeros(2, 2), &[0.1, 0.2]), Err(QrcError::InputArity { .. })));
    }
}
