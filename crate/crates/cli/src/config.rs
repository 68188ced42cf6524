//! Experiment configuration documents and their translation into library
//! objects.

use std::path::PathBuf;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use qrc_core::dynamics::{DriveGenerator, GaussianDrive};
use qrc_core::encodings::{unit_domain, Affine, GaussianChannel, KrausChannel, ParamChannel};
use qrc_core::linearity::{PriorEnsemble, PriorKind, Protocol, Tolerances};
use qrc_core::operator::random::random_hermitian;
use qrc_core::operator::{embed, make_basis, pauli_string, BasisKind, OperatorBasis};
use qrc_core::reservoir::{SineEncoding, DEFAULT_LAMBDA};
use qrc_core::{CMat, C64};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub encoding: EncodingSpec,
    pub system: SystemSpec,
    pub probe: ProbeSpec,
    #[serde(default)]
    pub reservoir: Option<ReservoirSpec>,
    #[serde(default)]
    pub task: Option<TaskSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Qubit register; Pauli-string nodes unless `basis` says otherwise.
    Qubits {
        count: usize,
        #[serde(default)]
        basis: Option<BasisKind>,
    },
    /// Register of arbitrary local dimensions with an explicit basis.
    Register { dims: Vec<usize>, basis: BasisKind },
    /// Single bosonic mode in the Gaussian representation.
    Mode,
}

/// Operator on the full register.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Pauli string such as `"XZ"`, qubit 0 first.
    Pauli { label: String },
    /// `Σ_n √n |n−1⟩⟨n|` on subsystem `site`.
    Lowering { site: usize },
    /// `|to⟩⟨from|` in the computational basis of the register.
    Transition { from: usize, to: usize },
    /// Dense matrix given by rows.
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub op: OperatorSpec,
    #[serde(default = "unit")]
    pub coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveTerm {
    pub op: OperatorSpec,
    pub coefficient: Affine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpTerm {
    pub op: OperatorSpec,
    pub rate: f64,
}

fn unit() -> f64 {
    1.0
}

/// Fixed channel on the full register.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    #[default]
    Identity,
    /// Unitary Pauli string.
    Pauli { label: String },
    /// Amplitude damping with probability `p` on qubit `site`.
    AmplitudeDamping {
        p: f64,
        #[serde(default)]
        site: usize,
    },
    /// Haar-random unitary drawn from the probe seed.
    RandomUnitary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EncodingSpec {
    ReinitPureSqrt,
    ReinitMixed,
    ChannelMixture { channels: Vec<ChannelSpec>, weights: Vec<Affine> },
    /// `exp(−iθ(u)G)` with `G = Σ coeff·op`.
    ParameterizedUnitary { generator: Vec<Term>, angle: Affine },
    /// `Σ_k e^{iφ_k(u)} |k⟩⟨k|` in the computational basis.
    EigenphaseUnitary { phases: Vec<Affine> },
    Displacement { beta_re: Affine, beta_im: Affine },
    CoherentReinit { beta_re: Affine, beta_im: Affine },
    SqueezedReinit { r: Affine, phi: f64 },
    /// `L(u)` with `H(u) = Σ h0 + Σ f_k(u) G_k` and fixed jumps.
    HamiltonianDrive {
        #[serde(default)]
        h0: Vec<Term>,
        drives: Vec<DriveTerm>,
        #[serde(default)]
        jumps: Vec<JumpTerm>,
    },
    /// Random static Hamiltonian and drive operator, lowering jumps on every
    /// subsystem with rates in `[0.1, 1)`; all drawn from the probe seed.
    RandomDrive,
    /// Damped single mode under `H = F_x(u) P − F_p(u) X`.
    DisplacementDrive { force_x: Affine, force_p: Affine, gamma: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    #[serde(default = "default_prior_kind")]
    pub kind: PriorKind,
    #[serde(default = "default_prior_count")]
    pub count: usize,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec { kind: default_prior_kind(), count: default_prior_count() }
    }
}

fn default_prior_kind() -> PriorKind {
    PriorKind::GinibreMixed
}

fn default_prior_count() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub seed: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub domain: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub priors: PriorSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Continuous encodings only; defaults to a constant input level.
    #[serde(default)]
    pub protocol: Option<Protocol>,
    /// Continuous encodings only.
    #[serde(default)]
    pub read_times: Option<Vec<f64>>,
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_grid_points() -> usize {
    21
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    #[serde(default)]
    pub internal: ChannelSpec,
    #[serde(default)]
    pub allow_undamped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    Stm {
        length: usize,
        delays: Vec<usize>,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    SineEstimation {
        omega: f64,
        amplitude: f64,
        phase: f64,
        read_times: Vec<f64>,
        #[serde(default = "both_encodings")]
        encodings: Vec<SineEncoding>,
        #[serde(default = "default_param_count")]
        params: usize,
        #[serde(default = "unit_range")]
        param_range: (f64, f64),
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// Spectral solution vs time stepping at frozen input `u`.
    Crosscheck {
        #[serde(default)]
        u: Vec<f64>,
        t: f64,
    },
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn both_encodings() -> Vec<SineEncoding> {
    vec![SineEncoding::Amplitude, SineEncoding::Phase]
}

fn default_param_count() -> usize {
    40
}

fn unit_range() -> (f64, f64) {
    (0.0, 1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub formats: Format,
    /// Exit with code 2 when a verdict is indeterminate.
    #[serde(default = "yes")]
    pub fail_on_indeterminate: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: None, formats: Format::Both, fail_on_indeterminate: true }
    }
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}, expected {CONFIG_SCHEMA_VERSION}",
                cfg.schema_version
            )));
        }
        if cfg.probe.grid_points < 11 {
            return Err(CliError::Config(format!("probe.grid_points = {}, at least 11 required", cfg.probe.grid_points)));
        }
        cfg.probe.tolerances.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn priors(&self) -> PriorEnsemble {
        PriorEnsemble::new(self.probe.priors.kind, self.probe.priors.count, self.probe.seed)
    }
}

/// Library object built from the `encoding` and `system` sections.
pub enum Encoding {
    Discrete(ParamChannel),
    Gaussian(GaussianChannel),
    Drive(DriveGenerator),
    GaussianDrive(GaussianDrive),
}

pub struct System {
    pub dims: Vec<usize>,
    pub basis: Option<OperatorBasis>,
}

fn config<E: std::fmt::Display>(what: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Config(format!("{what}: {e}"))
}

impl SystemSpec {
    pub fn build(&self) -> Result<System, CliError> {
        match self {
            SystemSpec::Qubits { count, basis } => {
                if *count == 0 {
                    return Err(CliError::Config("system.count must be positive".into()));
                }
                let kind = basis.unwrap_or(BasisKind::Pauli { qubits: *count });
                let basis = make_basis(kind).map_err(config("system.basis"))?;
                Ok(System { dims: vec![2; *count], basis: Some(basis) })
            }
            SystemSpec::Register { dims, basis } => {
                if dims.is_empty() || dims.contains(&0) {
                    return Err(CliError::Config("system.dims must be non-empty and positive".into()));
                }
                let basis = make_basis(*basis).map_err(config("system.basis"))?;
                Ok(System { dims: dims.clone(), basis: Some(basis) })
            }
            SystemSpec::Mode => Ok(System { dims: Vec::new(), basis: None }),
        }
    }
}

impl OperatorSpec {
    pub fn build(&self, dims: &[usize]) -> Result<CMat, CliError> {
        let d: usize = dims.iter().product();
        let m = match self {
            OperatorSpec::Pauli { label } => {
                if dims.iter().any(|&k| k != 2) || label.len() != dims.len() {
                    return Err(CliError::Config(format!("Pauli string {label:?} does not fit register {dims:?}")));
                }
                pauli_string(label).map_err(config("Pauli string"))?
            }
            OperatorSpec::Lowering { site } => {
                let n = *dims.get(*site).ok_or_else(|| CliError::Config(format!("no subsystem {site}")))?;
                let mut a = CMat::zeros(n, n);
                for k in 1..n {
                    a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
                }
                embed(&a, *site, dims).map_err(config("lowering operator"))?
            }
            OperatorSpec::Transition { from, to } => {
                if *from >= d || *to >= d {
                    return Err(CliError::Config(format!("transition {from} -> {to} outside dimension {d}")));
                }
                let mut m = CMat::zeros(d, d);
                m[(*to, *from)] = C64::new(1.0, 0.0);
                m
            }
            OperatorSpec::Matrix { re, im } => {
                let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
                if !rows_ok(re) || im.as_ref().is_some_and(|im| !rows_ok(im)) {
                    return Err(CliError::Config(format!("matrix operator must be {d}x{d}")));
                }
                CMat::from_fn(d, d, |i, j| C64::new(re[i][j], im.as_ref().map_or(0.0, |im| im[i][j])))
            }
        };
        Ok(m)
    }
}

fn sum_terms(terms: &[Term], dims: &[usize]) -> Result<CMat, CliError> {
    let d: usize = dims.iter().product();
    terms.iter().try_fold(CMat::zeros(d, d), |acc, t| Ok(acc + t.op.build(dims)? * C64::new(t.coeff, 0.0)))
}

impl ChannelSpec {
    pub fn build(&self, dims: &[usize], rng: &mut ChaCha8Rng) -> Result<KrausChannel, CliError> {
        let d: usize = dims.iter().product();
        let ch = match self {
            ChannelSpec::Identity => KrausChannel::identity(d),
            ChannelSpec::Pauli { label } => {
                KrausChannel::unitary(OperatorSpec::Pauli { label: label.clone() }.build(dims)?).map_err(config("channel"))?
            }
            ChannelSpec::AmplitudeDamping { p, site } => {
                if dims.get(*site) != Some(&2) {
                    return Err(CliError::Config(format!("amplitude damping needs a qubit at site {site}")));
                }
                let local = KrausChannel::amplitude_damping(*p).map_err(config("amplitude damping"))?;
                let ops = local
                    .ops()
                    .iter()
                    .map(|k| embed(k, *site, dims))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(config("amplitude damping"))?;
                KrausChannel::new(ops).map_err(config("amplitude damping"))?
            }
            ChannelSpec::RandomUnitary => {
                KrausChannel::unitary(qrc_core::operator::random::random_unitary(d, rng)).map_err(config("channel"))?
            }
        };
        Ok(ch)
    }
}

impl EncodingSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EncodingSpec::ReinitPureSqrt => "reinit-pure-sqrt",
            EncodingSpec::ReinitMixed => "reinit-mixed",
            EncodingSpec::ChannelMixture { .. } => "channel-mixture",
            EncodingSpec::ParameterizedUnitary { .. } => "parameterized-unitary",
            EncodingSpec::EigenphaseUnitary { .. } => "eigenphase-unitary",
            EncodingSpec::Displacement { .. } => "displacement",
            EncodingSpec::CoherentReinit { .. } => "coherent-reinit",
            EncodingSpec::SqueezedReinit { .. } => "squeezed-reinit",
            EncodingSpec::HamiltonianDrive { .. } => "hamiltonian-drive",
            EncodingSpec::RandomDrive => "random-drive",
            EncodingSpec::DisplacementDrive { .. } => "displacement-drive",
        }
    }

    fn is_gaussian(&self) -> bool {
        matches!(
            self,
            EncodingSpec::Displacement { .. }
                | EncodingSpec::CoherentReinit { .. }
                | EncodingSpec::SqueezedReinit { .. }
                | EncodingSpec::DisplacementDrive { .. }
        )
    }

    /// Builds the encoding; random ingredients are drawn from `seed`.
    pub fn build(&self, system: &System, seed: u64) -> Result<Encoding, CliError> {
        let gaussian_system = system.basis.is_none();
        if self.is_gaussian() != gaussian_system {
            return Err(CliError::Config(format!(
                "encoding {} does not run on this system kind",
                self.name()
            )));
        }
        let dims = &system.dims;
        let d: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = config(self.name());
        Ok(match self {
            EncodingSpec::ReinitPureSqrt => Encoding::Discrete(ParamChannel::reinit_pure_sqrt(dims).map_err(enc)?),
            EncodingSpec::ReinitMixed => Encoding::Discrete(ParamChannel::reinit_mixed(dims).map_err(enc)?),
            EncodingSpec::ChannelMixture { channels, weights } => {
                let chans = channels.iter().map(|c| c.build(dims, &mut rng)).collect::<Result<Vec<_>, _>>()?;
                Encoding::Discrete(ParamChannel::channel_mixture(chans, weights.clone(), dims).map_err(enc)?)
            }
            EncodingSpec::ParameterizedUnitary { generator, angle } => {
                let g = sum_terms(generator, dims)?;
                Encoding::Discrete(ParamChannel::parameterized_unitary(g, angle.clone(), dims).map_err(enc)?)
            }
            EncodingSpec::EigenphaseUnitary { phases } => {
                if phases.len() != d {
                    return Err(CliError::Config(format!("eigenphase-unitary needs {d} phases")));
                }
                let projectors = (0..d)
                    .map(|k| OperatorSpec::Transition { from: k, to: k }.build(dims))
                    .collect::<Result<Vec<_>, _>>()?;
                Encoding::Discrete(ParamChannel::eigenphase_unitary(projectors, phases.clone(), dims).map_err(enc)?)
            }
            EncodingSpec::Displacement { beta_re, beta_im } => {
                Encoding::Gaussian(GaussianChannel::displacement(beta_re.clone(), beta_im.clone()).map_err(enc)?)
            }
            EncodingSpec::CoherentReinit { beta_re, beta_im } => {
                Encoding::Gaussian(GaussianChannel::coherent_reinit(beta_re.clone(), beta_im.clone()).map_err(enc)?)
            }
            EncodingSpec::SqueezedReinit { r, phi } => {
                Encoding::Gaussian(GaussianChannel::squeezed_reinit(r.clone(), *phi).map_err(enc)?)
            }
            EncodingSpec::HamiltonianDrive { h0, drives, jumps } => {
                let h0 = sum_terms(h0, dims)?;
                let drives = drives
                    .iter()
                    .map(|t| Ok((t.op.build(dims)?, t.coefficient.clone())))
                    .collect::<Result<Vec<_>, CliError>>()?;
                let jumps =
                    jumps.iter().map(|t| Ok((t.op.build(dims)?, t.rate))).collect::<Result<Vec<_>, CliError>>()?;
                Encoding::Drive(DriveGenerator::new(h0, drives, jumps).map_err(enc)?)
            }
            EncodingSpec::RandomDrive => {
                let h0 = random_hermitian(d, &mut rng);
                let g = random_hermitian(d, &mut rng);
                let jumps = (0..dims.len())
                    .map(|site| {
                        let rate = rng.random_range(0.1..1.0);
                        Ok((OperatorSpec::Lowering { site }.build(dims)?, rate))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Encoding::Drive(DriveGenerator::new(h0, vec![(g, Affine::identity())], jumps).map_err(enc)?)
            }
            EncodingSpec::DisplacementDrive { force_x, force_p, gamma } => {
                Encoding::GaussianDrive(GaussianDrive::new(force_x.clone(), force_p.clone(), *gamma).map_err(enc)?)
            }
        })
    }
}

impl Encoding {
    /// Input domain used for probing when the config gives none.
    pub fn default_domain(&self) -> Vec<(f64, f64)> {
        match self {
            Encoding::Discrete(ch) => ch.domain().to_vec(),
            Encoding::Gaussian(ch) => ch.domain().to_vec(),
            Encoding::Drive(g) => unit_domain(g.input_dim()),
            Encoding::GaussianDrive(g) => unit_domain(g.input_dim()),
        }
    }
}
