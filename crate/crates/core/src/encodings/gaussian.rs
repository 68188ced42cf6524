//! Single-mode Gaussian states and the Gaussian input encodings.
//!
//! Convention: `ħ = 1`, `X = (a + a†)/√2`, `P = −i(a − a†)/√2`, so the vacuum
//! has `Var(X) = Var(P) = 1/2` and a displacement by `β` shifts the means by
//! `√2·(Re β, Im β)`.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_input, unit_domain, Affine};
use crate::error::{QrcError, Result};

/// First and second quadrature moments of a single bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    means: Vector2<f64>,
    cov: Matrix2<f64>,
}

impl GaussianState {
    pub const UNCERTAINTY_TOL: f64 = 1e-10;
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub const NODE_LABELS: [&'static str; 6] = ["I", "X", "P", "VarX", "CovXP", "VarP"];
    pub const RAW_LABELS: [&'static str; 6] = ["I", "X", "P", "X^2", "{XP}", "P^2"];

    pub fn new(means: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        Self::validate(&means, &cov)?;
        Ok(GaussianState { means, cov })
    }

    pub(crate) fn new_unchecked(means: Vector2<f64>, cov: Matrix2<f64>) -> Self {
        GaussianState { means, cov }
    }

    pub fn validate(means: &Vector2<f64>, cov: &Matrix2<f64>) -> Result<()> {
        if means.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(QrcError::InvalidGaussianState("non-finite moments".into()));
        }
        let asym = (cov[(0, 1)] - cov[(1, 0)]).abs();
        if asym > Self::SYMMETRY_TOL {
            return Err(QrcError::InvalidGaussianState(format!("covariance asymmetry {asym:e}")));
        }
        let m = uncertainty_margin(cov);
        if m < -Self::UNCERTAINTY_TOL {
            return Err(QrcError::InvalidGaussianState(format!(
                "uncertainty relation violated by {:e}",
                -m
            )));
        }
        Ok(())
    }

    pub fn vacuum() -> Self {
        GaussianState::new_unchecked(Vector2::zeros(), Matrix2::identity() * 0.5)
    }

    /// Coherent state `|β⟩`.
    pub fn coherent(beta_re: f64, beta_im: f64) -> Self {
        GaussianState::new_unchecked(
            Vector2::new(beta_re, beta_im) * std::f64::consts::SQRT_2,
            Matrix2::identity() * 0.5,
        )
    }

    /// Squeezed vacuum `S(ξ)|0⟩` with `ξ = r·e^{iφ}`.
    pub fn squeezed_vacuum(r: f64, phi: f64) -> Self {
        let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let cov = Matrix2::new(
            ch - sh * phi.cos(),
            -sh * phi.sin(),
            -sh * phi.sin(),
            ch + sh * phi.cos(),
        ) * 0.5;
        GaussianState::new_unchecked(Vector2::zeros(), cov)
    }

    /// Displaced squeezed thermal state with random parameters.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let means = Vector2::new(normal(), normal());
        let r = 0.5 * normal().abs();
        let phi = std::f64::consts::PI * normal();
        let nbar = 0.5 * normal().abs();
        let sq = GaussianState::squeezed_vacuum(r, phi);
        GaussianState::new_unchecked(means, sq.cov * (2.0 * nbar + 1.0))
    }

    pub fn means(&self) -> &Vector2<f64> {
        &self.means
    }

    pub fn covariance(&self) -> &Matrix2<f64> {
        &self.cov
    }

    pub fn mean_x(&self) -> f64 {
        self.means[0]
    }

    pub fn mean_p(&self) -> f64 {
        self.means[1]
    }

    /// Node vector `(1, ⟨X⟩, ⟨P⟩, Var X, Cov(X,P), Var P)`.
    ///
    /// Second-order nodes are central moments. They are invariant under
    /// displacement, whereas the raw moments pick up terms quadratic in the
    /// means.
    pub fn nodes(&self) -> [f64; 6] {
        [1.0, self.means[0], self.means[1], self.cov[(0, 0)], self.cov[(0, 1)], self.cov[(1, 1)]]
    }

    /// Raw symmetrized moments `(1, ⟨X⟩, ⟨P⟩, ⟨X²⟩, ⟨(XP+PX)/2⟩, ⟨P²⟩)`.
    pub fn raw_moments(&self) -> [f64; 6] {
        let (x, p) = (self.means[0], self.means[1]);
        [
            1.0,
            x,
            p,
            self.cov[(0, 0)] + x * x,
            self.cov[(0, 1)] + x * p,
            self.cov[(1, 1)] + p * p,
        ]
    }

    pub fn displaced(&self, beta_re: f64, beta_im: f64) -> Self {
        let shift = Vector2::new(beta_re, beta_im) * std::f64::consts::SQRT_2;
        GaussianState::new_unchecked(self.means + shift, self.cov)
    }
}

/// Smallest eigenvalue of `V + (i/2)Ω`, `Ω = [[0, 1], [−1, 0]]`.
pub fn uncertainty_margin(cov: &Matrix2<f64>) -> f64 {
    let (a, d) = (cov[(0, 0)], cov[(1, 1)]);
    let b = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
    let off2 = b * b + 0.25;
    0.5 * (a + d - ((a - d).powi(2) + 4.0 * off2).sqrt())
}

/// Gaussian encoding families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GaussianKind {
    /// `D(β(u))` applied to the current state.
    Displacement { beta_re: Affine, beta_im: Affine },
    /// Reset to the coherent state `|β(u)⟩`.
    CoherentReinit { beta_re: Affine, beta_im: Affine },
    /// Reset to the squeezed vacuum with `r(u)` and fixed angle `phi`.
    SqueezedReinit { r: Affine, phi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannel {
    kind: GaussianKind,
    domain: Vec<(f64, f64)>,
}

impl GaussianChannel {
    pub fn new(kind: GaussianKind) -> Result<Self> {
        let n = match &kind {
            GaussianKind::Displacement { beta_re, beta_im }
            | GaussianKind::CoherentReinit { beta_re, beta_im } => {
                if beta_re.input_dim() != beta_im.input_dim() {
                    return Err(QrcError::InvalidArgument("β maps disagree on input dimension".into()));
                }
                beta_re.input_dim()
            }
            GaussianKind::SqueezedReinit { r, phi } => {
                if !phi.is_finite() {
                    return Err(QrcError::InvalidArgument(format!("squeezing angle {phi}")));
                }
                r.input_dim()
            }
        };
        Ok(GaussianChannel { kind, domain: unit_domain(n) })
    }

    pub fn displacement(beta_re: Affine, beta_im: Affine) -> Result<Self> {
        Self::new(GaussianKind::Displacement { beta_re, beta_im })
    }

    pub fn coherent_reinit(beta_re: Affine, beta_im: Affine) -> Result<Self> {
        Self::new(GaussianKind::CoherentReinit { beta_re, beta_im })
    }

    pub fn squeezed_reinit(r: Affine, phi: f64) -> Result<Self> {
        Self::new(GaussianKind::SqueezedReinit { r, phi })
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.domain.len() || domain.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(QrcError::InvalidArgument(format!("bad input domain {domain:?}")));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn kind(&self) -> &GaussianKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GaussianKind::Displacement { .. } => "displacement",
            GaussianKind::CoherentReinit { .. } => "coherent-reinit",
            GaussianKind::SqueezedReinit { .. } => "squeezed-reinit",
        }
    }

    pub fn input_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn prior_independent(&self) -> bool {
        !matches!(self.kind, GaussianKind::Displacement { .. })
    }

    pub fn apply(&self, u: &[f64], state: &GaussianState) -> Result<GaussianState> {
        check_input(u, &self.domain)?;
        let out = match &self.kind {
            GaussianKind::Displacement { beta_re, beta_im } => state.displaced(beta_re.eval(u), beta_im.eval(u)),
            GaussianKind::CoherentReinit { beta_re, beta_im } => {
                GaussianState::coherent(beta_re.eval(u), beta_im.eval(u))
            }
            GaussianKind::SqueezedReinit { r, phi } => GaussianState::squeezed_vacuum(r.eval(u), *phi),
        };
        GaussianState::validate(&out.means, &out.cov)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Covariance of `S(ξ)|0⟩` from the symplectic factorization
    /// `S = R(φ/2)·diag(e^{−r}, e^{r})·R(φ/2)ᵀ`, `V = S·S^T/2`.
    fn squeezed_cov_symplectic(r: f64, phi: f64) -> Matrix2<f64> {
        let (s, c) = (phi / 2.0).sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        let sym = rot * Matrix2::new((-r).exp(), 0.0, 0.0, r.exp()) * rot.transpose();
        sym * sym.transpose() * 0.5
    }

    #[test]
    fn vacuum_and_squeezing_examples() {
        assert_eq!(GaussianState::squeezed_vacuum(0.0, 0.3), GaussianState::vacuum());
        let s = GaussianState::squeezed_vacuum(0.5, 0.0);
        assert!((s.covariance()[(0, 0)] - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let r: f64 = rng.random_range(0.0..1.5);
            let phi: f64 = rng.random_range(-3.2..3.2);
            let a = GaussianState::squeezed_vacuum(r, phi);
            let b = squeezed_cov_symplectic(r, phi);
            assert!((a.covariance() - b).amax() < 1e-12 * b.amax());
            assert!(uncertainty_margin(a.covariance()).abs() < 1e-10);
        }
    }

    #[test]
    fn uncertainty_relation_is_enforced() {
        let bad = Matrix2::identity() * 0.4;
        assert!(GaussianState::new(Vector2::zeros(), bad).is_err());
        let asym = Matrix2::new(1.0, 0.1, 0.0, 1.0);
        assert!(GaussianState::new(Vector2::zeros(), asym).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = GaussianState::random(&mut rng);
            GaussianState::validate(g.means(), g.covariance()).unwrap();
        }
    }

    #[test]
    fn displacement_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GaussianState::random(&mut rng);
        let none = GaussianChannel::displacement(Affine::constant(0.0, 1), Affine::constant(0.0, 1)).unwrap();
        assert_eq!(none.apply(&[0.4], &g).unwrap(), g);
        let unit = GaussianChannel::displacement(
            Affine::new(0.0, vec![std::f64::consts::FRAC_1_SQRT_2]),
            Affine::constant(0.0, 1),
        )
        .unwrap();
        let out = unit.apply(&[1.0], &g).unwrap();
        assert!((out.mean_x() - g.mean_x() - 1.0).abs() < 1e-15);
        assert_eq!(out.mean_p(), g.mean_p());
        assert_eq!(out.covariance(), g.covariance());
    }

    #[test]
    fn displacements_compose_additively() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GaussianState::random(&mut rng);
        for _ in 0..20 {
            let b1: (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let b2: (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let seq = g.displaced(b1.0, b1.1).displaced(b2.0, b2.1);
            let joint = g.displaced(b1.0 + b2.0, b1.1 + b2.1);
            assert!((seq.means() - joint.means()).amax() < 1e-14);
        }
    }

    #[test]
    fn coherent_reinit_examples() {
        let ch = GaussianChannel::coherent_reinit(Affine::new(0.0, vec![1.0]), Affine::new(0.0, vec![1.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let prior = GaussianState::random(&mut rng);
        assert_eq!(ch.apply(&[0.0], &prior).unwrap(), GaussianState::vacuum());
        let out = ch.apply(&[1.0], &prior).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        assert!((out.mean_x() - s2).abs() < 1e-15 && (out.mean_p() - s2).abs() < 1e-15);
        assert_eq!(out.covariance(), GaussianState::vacuum().covariance());
    }

    #[test]
    fn raw_moments_add_mean_products() {
        let g = GaussianState::coherent(0.5, -1.0).displaced(0.1, 0.2);
        let raw = g.raw_moments();
        let n = g.nodes();
        assert!((raw[3] - n[3] - g.mean_x().powi(2)).abs() < 1e-15);
        assert!((raw[4] - n[4] - g.mean_x() * g.mean_p()).abs() < 1e-15);
    }
}
