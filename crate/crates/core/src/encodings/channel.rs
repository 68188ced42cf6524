use std::fmt;
use std::sync::Arc;

use super::{check_input, unit_domain, Affine, KrausChannel};
use crate::error::{QrcError, Result};
use crate::operator::{
    c, check_square, hermitian_eigenvalues, matrix_exp, partial_trace_matrix, tensor, trace,
    CMat, CVec, DensityMatrix, C64, I,
};

/// Input-dependent list of target states `σ_n(u)`, one per re-initialized
/// subsystem.
#[derive(Clone)]
pub struct StateMap(Arc<dyn Fn(&[f64]) -> Vec<CMat> + Send + Sync>);

impl StateMap {
    pub fn new(f: impl Fn(&[f64]) -> Vec<CMat> + Send + Sync + 'static) -> Self {
        StateMap(Arc::new(f))
    }

    pub fn eval(&self, u: &[f64]) -> Vec<CMat> {
        (self.0)(u)
    }
}

impl fmt::Debug for StateMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("StateMap(..)")
    }
}

/// Built-in channel families.
#[derive(Debug, Clone)]
pub enum ChannelKind {
    /// Qubit 0 re-initialized to `√(1−u)|0⟩ + √u|1⟩`.
    ReinitPureSqrt,
    /// Qubit 0 re-initialized to `(1−u)|0⟩⟨0| + u|1⟩⟨1|`.
    ReinitMixed,
    /// The leading `targets` subsystems re-initialized to `⊗_n σ_n(u)`. The
    /// factors may each cover one or several of those subsystems.
    ReinitGeneral { targets: usize, states: StateMap },
    /// `Σ_m f_m(u) C_m[ρ]` with simplex weights.
    Mixture { channels: Vec<KrausChannel>, weights: Vec<Affine> },
    /// `ρ ↦ U ρ U†`, `U = exp(−i θ(u) G)`.
    Unitary { generator: CMat, angle: Affine },
    /// `U = Σ_m exp(i φ_m(u)) P_m` given orthogonal projectors.
    Eigenphase { projectors: Vec<CMat>, phases: Vec<Affine> },
    /// Input-independent channel.
    Fixed(KrausChannel),
}

/// A family of quantum channels indexed by the input vector `u`.
#[derive(Debug, Clone)]
pub struct ParamChannel {
    kind: ChannelKind,
    dims: Vec<usize>,
    domain: Vec<(f64, f64)>,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl ParamChannel {
    fn require_leading_qubit(dims: &[usize]) -> Result<()> {
        if dims.first() != Some(&2) {
            return Err(QrcError::DimensionMismatch(format!(
                "re-initialization target must be a qubit, register is {dims:?}"
            )));
        }
        Ok(())
    }

    pub fn reinit_pure_sqrt(dims: &[usize]) -> Result<Self> {
        Self::require_leading_qubit(dims)?;
        Ok(ParamChannel { kind: ChannelKind::ReinitPureSqrt, dims: dims.to_vec(), domain: unit_domain(1) })
    }

    pub fn reinit_mixed(dims: &[usize]) -> Result<Self> {
        Self::require_leading_qubit(dims)?;
        Ok(ParamChannel { kind: ChannelKind::ReinitMixed, dims: dims.to_vec(), domain: unit_domain(1) })
    }

    /// Re-initializes the leading `targets` subsystems to the tensor product
    /// of the states returned by `states`.
    pub fn reinit_general(dims: &[usize], targets: usize, input_dim: usize, states: StateMap) -> Result<Self> {
        if targets == 0 || targets > dims.len() {
            return Err(QrcError::DimensionMismatch(format!(
                "cannot re-initialize {targets} leading subsystems of {dims:?}"
            )));
        }
        Ok(ParamChannel {
            kind: ChannelKind::ReinitGeneral { targets, states },
            dims: dims.to_vec(),
            domain: unit_domain(input_dim),
        })
    }

    /// Re-initialization into a convex combination `Σ_m f_m(u) τ_m` of fixed
    /// states on the leading `targets` subsystems.
    pub fn reinit_convex(
        dims: &[usize],
        targets: usize,
        states: Vec<DensityMatrix>,
        weights: Vec<Affine>,
    ) -> Result<Self> {
        if states.len() != weights.len() || states.is_empty() {
            return Err(QrcError::InvalidArgument("one weight per state required".into()));
        }
        let input_dim = weights[0].input_dim();
        let mats: Vec<CMat> = states.into_iter().map(DensityMatrix::into_matrix).collect();
        let d = mats[0].nrows();
        if mats.iter().any(|m| m.nrows() != d) {
            return Err(QrcError::DimensionMismatch("convex components differ in size".into()));
        }
        let map = StateMap::new(move |u| {
            vec![mats
                .iter()
                .zip(&weights)
                .fold(CMat::zeros(d, d), |acc, (s, w)| acc + s * c(w.eval(u)))]
        });
        Self::reinit_general(dims, targets, input_dim, map)
    }

    pub fn channel_mixture(channels: Vec<KrausChannel>, weights: Vec<Affine>, dims: &[usize]) -> Result<Self> {
        if channels.is_empty() || channels.len() != weights.len() {
            return Err(QrcError::InvalidArgument("one weight map per channel required".into()));
        }
        let d: usize = dims.iter().product();
        if channels.iter().any(|k| k.dim() != d) {
            return Err(QrcError::DimensionMismatch("mixture channels must act on the register".into()));
        }
        let n = weights[0].input_dim();
        if weights.iter().any(|w| w.input_dim() != n) {
            return Err(QrcError::InvalidArgument("weight maps disagree on input dimension".into()));
        }
        Ok(ParamChannel { kind: ChannelKind::Mixture { channels, weights }, dims: dims.to_vec(), domain: unit_domain(n) })
    }

    pub fn parameterized_unitary(generator: CMat, angle: Affine, dims: &[usize]) -> Result<Self> {
        let d = check_square(&generator, "generator")?;
        if d != dims.iter().product::<usize>() {
            return Err(QrcError::DimensionMismatch("generator does not act on the register".into()));
        }
        if crate::operator::hermitian_defect(&generator) > 1e-12 {
            return Err(QrcError::InvalidArgument("generator must be Hermitian".into()));
        }
        let n = angle.input_dim();
        Ok(ParamChannel { kind: ChannelKind::Unitary { generator, angle }, dims: dims.to_vec(), domain: unit_domain(n) })
    }

    /// Unitary given directly by its eigenphases. No linearity promise is made
    /// for this family.
    pub fn eigenphase_unitary(projectors: Vec<CMat>, phases: Vec<Affine>, dims: &[usize]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if projectors.is_empty() || projectors.len() != phases.len() {
            return Err(QrcError::InvalidArgument("one phase map per projector required".into()));
        }
        let sum = projectors.iter().fold(CMat::zeros(d, d), |acc, p| acc + p);
        if projectors.iter().any(|p| p.shape() != (d, d)) || (sum - CMat::identity(d, d)).camax() > 1e-12 {
            return Err(QrcError::InvalidArgument("projectors must resolve the identity".into()));
        }
        let n = phases[0].input_dim();
        Ok(ParamChannel { kind: ChannelKind::Eigenphase { projectors, phases }, dims: dims.to_vec(), domain: unit_domain(n) })
    }

    pub fn fixed(channel: KrausChannel, dims: &[usize], input_dim: usize) -> Result<Self> {
        if channel.dim() != dims.iter().product::<usize>() {
            return Err(QrcError::DimensionMismatch("channel does not act on the register".into()));
        }
        Ok(ParamChannel { kind: ChannelKind::Fixed(channel), dims: dims.to_vec(), domain: unit_domain(input_dim) })
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.domain.len() || domain.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(QrcError::InvalidArgument(format!("bad input domain {domain:?}")));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ChannelKind::ReinitPureSqrt => "reinit-pure-sqrt",
            ChannelKind::ReinitMixed => "reinit-mixed",
            ChannelKind::ReinitGeneral { .. } => "reinit-general",
            ChannelKind::Mixture { .. } => "channel-mixture",
            ChannelKind::Unitary { .. } => "parameterized-unitary",
            ChannelKind::Eigenphase { .. } => "eigenphase-unitary",
            ChannelKind::Fixed(_) => "fixed",
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn input_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// True when the output does not depend on the prior state at all, so a
    /// single affine model in `u` must serve every prior.
    pub fn prior_independent(&self) -> bool {
        match &self.kind {
            ChannelKind::ReinitPureSqrt | ChannelKind::ReinitMixed => self.dims.len() == 1,
            ChannelKind::ReinitGeneral { targets, .. } => *targets == self.dims.len(),
            _ => false,
        }
    }

    fn target_count(&self) -> usize {
        match &self.kind {
            ChannelKind::ReinitGeneral { targets, .. } => *targets,
            _ => 1,
        }
    }

    /// Target state for the re-initialization families, validated.
    pub fn reinit_state(&self, u: &[f64]) -> Result<Option<CMat>> {
        check_input(u, &self.domain)?;
        let state = match &self.kind {
            ChannelKind::ReinitPureSqrt => {
                let psi = CVec::from_vec(vec![c((1.0 - u[0]).sqrt()), c(u[0].sqrt())]);
                let m = &psi * psi.adjoint();
                Some((&m + m.adjoint()) * c(0.5))
            }
            ChannelKind::ReinitMixed => Some(CMat::from_diagonal(&CVec::from_vec(vec![c(1.0 - u[0]), c(u[0])]))),
            ChannelKind::ReinitGeneral { targets, states } => {
                let list = states.eval(u);
                let want: usize = self.dims[..*targets].iter().product();
                let got: usize = list.iter().map(|m| m.nrows()).product();
                if list.is_empty() || got != want {
                    return Err(QrcError::InvalidState(format!(
                        "state map returned states of total dimension {got}, targets need {want}"
                    )));
                }
                for s in &list {
                    DensityMatrix::validate(s, &[s.nrows()]).map_err(|e| {
                        QrcError::InvalidState(format!("target state at u = {u:?}: {e}"))
                    })?;
                }
                Some(crate::operator::tensor_all(list.iter()))
            }
            _ => None,
        };
        Ok(state)
    }

    fn mixture_weights(&self, u: &[f64], weights: &[Affine]) -> Result<Vec<f64>> {
        let w: Vec<f64> = weights.iter().map(|f| f.eval(u)).collect();
        let sum: f64 = w.iter().sum();
        if w.iter().any(|&x| x < -SIMPLEX_TOL) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(QrcError::WeightsOffSimplex { u: u.to_vec(), weights: w });
        }
        Ok(w)
    }

    /// Unitary of the frozen channel for the unitary families.
    pub fn unitary_at(&self, u: &[f64]) -> Result<Option<CMat>> {
        check_input(u, &self.domain)?;
        Ok(match &self.kind {
            ChannelKind::Unitary { generator, angle } => {
                Some(matrix_exp(&(generator * (-I * c(angle.eval(u))))))
            }
            ChannelKind::Eigenphase { projectors, phases } => {
                let d = self.dim();
                Some(projectors.iter().zip(phases).fold(CMat::zeros(d, d), |acc, (p, f)| {
                    acc + p * (I * c(f.eval(u))).exp()
                }))
            }
            _ => None,
        })
    }

    /// Linear extension of the frozen channel to arbitrary operators.
    pub fn apply_matrix(&self, u: &[f64], x: &CMat) -> Result<CMat> {
        check_input(u, &self.domain)?;
        let d = self.dim();
        if x.shape() != (d, d) {
            return Err(QrcError::DimensionMismatch(format!(
                "{:?} operator on a register of dimension {d}",
                x.shape()
            )));
        }
        match &self.kind {
            ChannelKind::ReinitPureSqrt | ChannelKind::ReinitMixed | ChannelKind::ReinitGeneral { .. } => {
                let sigma = self.reinit_state(u)?.expect("re-initialization state");
                let targets = self.target_count();
                let keep: Vec<usize> = (targets..self.dims.len()).collect();
                if keep.is_empty() {
                    return Ok(sigma * trace(x));
                }
                let rest = partial_trace_matrix(x, &self.dims, &keep)?;
                Ok(tensor(&sigma, &rest))
            }
            ChannelKind::Mixture { channels, weights } => {
                let w = self.mixture_weights(u, weights)?;
                Ok(channels
                    .iter()
                    .zip(w)
                    .fold(CMat::zeros(d, d), |acc, (ch, wm)| acc + ch.apply(x) * c(wm)))
            }
            ChannelKind::Unitary { .. } | ChannelKind::Eigenphase { .. } => {
                let uni = self.unitary_at(u)?.expect("unitary family");
                Ok(&uni * x * uni.adjoint())
            }
            ChannelKind::Fixed(ch) => Ok(ch.apply(x)),
        }
    }

    pub fn apply(&self, u: &[f64], rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dims() != self.dims.as_slice() {
            return Err(QrcError::DimensionMismatch(format!(
                "channel on {:?} applied to state on {:?}",
                self.dims,
                rho.dims()
            )));
        }
        let out = self.apply_matrix(u, rho.matrix())?;
        DensityMatrix::new(out, self.dims.clone())
    }

    /// Normalized Choi state `Σ_ij |i⟩⟨j| ⊗ C(|i⟩⟨j|) / d`.
    pub fn choi(&self, u: &[f64]) -> Result<CMat> {
        let d = self.dim();
        let mut j = CMat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let mut e = CMat::zeros(d, d);
                e[(a, b)] = C64::new(1.0, 0.0);
                let out = self.apply_matrix(u, &e)?;
                j.view_mut((a * d, b * d), (d, d)).copy_from(&out);
            }
        }
        Ok(j / c(d as f64))
    }

    /// `(trace-preservation defect, smallest Choi eigenvalue)` of the frozen
    /// channel.
    pub fn cptp_defects(&self, u: &[f64]) -> Result<(f64, f64)> {
        let d = self.dim();
        let mut tp = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let mut e = CMat::zeros(d, d);
                e[(a, b)] = C64::new(1.0, 0.0);
                let t = trace(&self.apply_matrix(u, &e)?);
                let expected = if a == b { 1.0 } else { 0.0 };
                tp = tp.max((t - c(expected)).norm());
            }
        }
        let min_eig = hermitian_eigenvalues(&self.choi(u)?)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Ok((tp, min_eig))
    }

    pub fn check_cptp(&self, u: &[f64]) -> Result<()> {
        let (tp, min_eig) = self.cptp_defects(u)?;
        if tp > DensityMatrix::TRACE_TOL {
            return Err(QrcError::InvalidArgument(format!("not trace preserving at u = {u:?}: {tp:e}")));
        }
        if min_eig < -DensityMatrix::PSD_TOL {
            return Err(QrcError::InvalidArgument(format!(
                "not completely positive at u = {u:?}: Choi eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }
}
