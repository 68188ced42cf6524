//! Reservoir pipelines and benchmarks.
//!
//! Discrete mode applies `C_out ∘ C_res ∘ C_in(u_j)` once per input and
//! reads every basis node after the full step. Continuous mode integrates
//! the driven master equation (or the exact Gaussian dynamics) and samples
//! the nodes at requested times.

mod readout;
mod tasks;

pub use readout::{nmse, train_readout, ReadoutModel, DEFAULT_LAMBDA};
pub use tasks::{
    echo_state_distances, sine_estimation, stm_capacity, stm_inputs, SineEncoding, SineReport, SineTask, StmReport,
};

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, gaussian_evolve, DriveGenerator, EvolveOptions, GaussianDrive, InputSignal};
use crate::encodings::{GaussianState, KrausChannel, ParamChannel};
use crate::error::{QrcError, Result};
use crate::operator::{hermitian_defect, trace, DensityMatrix, OperatorBasis, C64};

/// Largest trace or Hermiticity defect a discrete step may accumulate
/// through round-off.
pub const DRIFT_TOL: f64 = 1e-9;

/// Node values over time: `values[(row, node)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMatrix {
    pub labels: Vec<String>,
    /// Sample times in continuous mode; `None` for stepped runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    pub values: DMatrix<f64>,
}

impl NodeMatrix {
    fn from_rows(labels: Vec<String>, times: Option<Vec<f64>>, rows: Vec<Vec<f64>>) -> Self {
        let cols = labels.len();
        let values = DMatrix::from_fn(rows.len(), cols, |i, k| rows[i][k]);
        NodeMatrix { labels, times, values }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let k = self.labels.iter().position(|l| l == label)?;
        Some(self.values.column(k).iter().copied().collect())
    }

    /// CSV with a `step` (or `t`) column followed by one column per node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| QrcError::InvalidArgument(format!("csv output: {e}"));
        let mut out = csv::Writer::from_writer(w);
        let first = if self.times.is_some() { "t" } else { "step" };
        out.write_record(std::iter::once(first).chain(self.labels.iter().map(String::as_str))).map_err(io)?;
        for i in 0..self.rows() {
            let lead = match &self.times {
                Some(t) => format!("{:e}", t[i]),
                None => i.to_string(),
            };
            let mut row = vec![lead];
            row.extend(self.values.row(i).iter().map(|v| format!("{v:e}")));
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| QrcError::InvalidArgument(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// Stepped reservoir `ρ_j = C_out[C_res[C_in(u_j)[ρ_{j−1}]]]`.
#[derive(Debug, Clone)]
pub struct DiscreteReservoir {
    input: ParamChannel,
    internal: KrausChannel,
    output: KrausChannel,
    basis: OperatorBasis,
    initial: DensityMatrix,
}

impl DiscreteReservoir {
    /// Identity `C_res` and `C_out`, starting from `|0…0⟩`.
    pub fn new(input: ParamChannel, basis: OperatorBasis) -> Result<Self> {
        let d = input.dim();
        let initial = DensityMatrix::basis_state(input.dims(), 0);
        Self::with_stages(input, KrausChannel::identity(d), KrausChannel::identity(d), basis, initial)
    }

    pub fn with_stages(
        input: ParamChannel,
        internal: KrausChannel,
        output: KrausChannel,
        basis: OperatorBasis,
        initial: DensityMatrix,
    ) -> Result<Self> {
        let d = input.dim();
        for (what, got) in [
            ("internal channel", internal.dim()),
            ("output channel", output.dim()),
            ("node basis", basis.dim()),
            ("initial state", initial.dim()),
        ] {
            if got != d {
                return Err(QrcError::DimensionMismatch(format!("{what} of dimension {got}, expected {d}")));
            }
        }
        Ok(DiscreteReservoir { input, internal, output, basis, initial })
    }

    pub fn with_internal(mut self, internal: KrausChannel) -> Result<Self> {
        if internal.dim() != self.input.dim() {
            return Err(QrcError::DimensionMismatch("internal channel dimension".into()));
        }
        self.internal = internal;
        Ok(self)
    }

    pub fn with_initial(mut self, initial: DensityMatrix) -> Result<Self> {
        if initial.dim() != self.input.dim() {
            return Err(QrcError::DimensionMismatch("initial state dimension".into()));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn input(&self) -> &ParamChannel {
        &self.input
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    /// One full step.
    ///
    /// Round-off drift of the trace and Hermiticity up to [`DRIFT_TOL`] is
    /// removed after the step so long runs stay within the density-matrix
    /// tolerances; larger defects are reported.
    pub fn step(&self, u: &[f64], rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.step_numbered(1, u, rho)
    }

    /// `step` is the 1-based step index reported with invariant violations
    /// (also used as the time coordinate).
    fn step_numbered(&self, step: usize, u: &[f64], rho: &DensityMatrix) -> Result<DensityMatrix> {
        let after_in = self.input.apply(u, rho)?;
        let m = self.output.apply(&self.internal.apply(after_in.matrix()));
        let herm = hermitian_defect(&m);
        if herm > DRIFT_TOL {
            return Err(QrcError::InvariantViolation { what: "Hermiticity", step, time: step as f64, defect: herm });
        }
        let tr = trace(&m);
        if (tr - C64::new(1.0, 0.0)).norm() > DRIFT_TOL {
            return Err(QrcError::InvariantViolation {
                what: "unit trace",
                step,
                time: step as f64,
                defect: (tr - C64::new(1.0, 0.0)).norm(),
            });
        }
        let m = (&m + m.adjoint()) * C64::new(0.5 / tr.re, 0.0);
        DensityMatrix::new(m, rho.dims().to_vec())
    }

    /// Runs from `initial`, returning one node row per input and the final
    /// state.
    pub fn run_from(&self, initial: &DensityMatrix, inputs: &[Vec<f64>]) -> Result<(NodeMatrix, DensityMatrix)> {
        let mut rho = initial.clone();
        let mut rows = Vec::with_capacity(inputs.len());
        for (j, u) in inputs.iter().enumerate() {
            rho = self.step_numbered(j + 1, u, &rho)?;
            rows.push(self.basis.expectations(&rho)?.real());
        }
        Ok((NodeMatrix::from_rows(self.basis.labels().to_vec(), None, rows), rho))
    }
}

/// Node matrix (steps × nodes) of a discrete run from the reservoir's
/// initial state.
pub fn run_discrete(res: &DiscreteReservoir, inputs: &[Vec<f64>]) -> Result<NodeMatrix> {
    Ok(res.run_from(&res.initial, inputs)?.0)
}

/// Finite-dimensional reservoir driven continuously through `L(u(t))`.
#[derive(Debug, Clone)]
pub struct ContinuousReservoir {
    generator: DriveGenerator,
    basis: OperatorBasis,
    initial: DensityMatrix,
    pub opts: EvolveOptions,
}

impl ContinuousReservoir {
    /// Requires every dissipation rate to be positive unless
    /// `allow_undamped` is set, since otherwise the reservoir has no fading
    /// memory.
    pub fn new(generator: DriveGenerator, basis: OperatorBasis, dims: &[usize], allow_undamped: bool) -> Result<Self> {
        if basis.dim() != generator.dim() || dims.iter().product::<usize>() != generator.dim() {
            return Err(QrcError::DimensionMismatch("basis, dims and generator disagree".into()));
        }
        if !allow_undamped && !(generator.gamma_min() > 0.0) {
            return Err(QrcError::InvalidArgument(
                "continuous reservoir needs positive dissipation rates (pass allow_undamped to override)".into(),
            ));
        }
        let initial = DensityMatrix::basis_state(dims, 0);
        Ok(ContinuousReservoir { generator, basis, initial, opts: EvolveOptions::default() })
    }

    pub fn with_initial(mut self, initial: DensityMatrix) -> Result<Self> {
        if initial.dim() != self.generator.dim() {
            return Err(QrcError::DimensionMismatch("initial state dimension".into()));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn generator(&self) -> &DriveGenerator {
        &self.generator
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }
}

fn check_sample_times(sample_times: &[f64]) -> Result<f64> {
    if sample_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QrcError::InvalidArgument("sample times must be non-negative and increasing".into()));
    }
    Ok(sample_times.last().copied().unwrap_or(0.0))
}

/// Node matrix sampled at `sample_times`, evolving from `t = 0`.
pub fn run_continuous(res: &ContinuousReservoir, signal: &InputSignal, sample_times: &[f64]) -> Result<NodeMatrix> {
    let t_end = check_sample_times(sample_times)?;
    let labels = res.basis.labels().to_vec();
    if sample_times.is_empty() {
        return Ok(NodeMatrix::from_rows(labels, Some(Vec::new()), Vec::new()));
    }
    let opts = res.opts.clone().sampled(sample_times.to_vec());
    let traj = evolve(&res.initial, &res.generator, signal, (0.0, t_end), &opts, Some(&res.basis))?;
    let rows = traj.nodes.iter().map(|e| e.real()).collect();
    Ok(NodeMatrix::from_rows(labels, Some(traj.times), rows))
}

/// Single bosonic mode under a damped displacement drive.
#[derive(Debug, Clone)]
pub struct GaussianReservoir {
    drive: GaussianDrive,
    initial: GaussianState,
    pub opts: EvolveOptions,
}

impl GaussianReservoir {
    /// Starts from the vacuum. Requires `γ > 0` unless `allow_undamped`.
    pub fn new(drive: GaussianDrive, allow_undamped: bool) -> Result<Self> {
        if !allow_undamped && !(drive.gamma > 0.0) {
            return Err(QrcError::InvalidArgument(
                "Gaussian reservoir needs a positive damping rate (pass allow_undamped to override)".into(),
            ));
        }
        Ok(GaussianReservoir { drive, initial: GaussianState::vacuum(), opts: EvolveOptions::default() })
    }

    pub fn with_initial(mut self, initial: GaussianState) -> Self {
        self.initial = initial;
        self
    }

    pub fn drive(&self) -> &GaussianDrive {
        &self.drive
    }

    pub fn initial(&self) -> &GaussianState {
        &self.initial
    }
}

pub fn run_continuous_gaussian(res: &GaussianReservoir, signal: &InputSignal, sample_times: &[f64]) -> Result<NodeMatrix> {
    let t_end = check_sample_times(sample_times)?;
    let labels: Vec<String> = GaussianState::NODE_LABELS.iter().map(|s| s.to_string()).collect();
    if sample_times.is_empty() {
        return Ok(NodeMatrix::from_rows(labels, Some(Vec::new()), Vec::new()));
    }
    let opts = res.opts.clone().sampled(sample_times.to_vec());
    let traj = gaussian_evolve(&res.initial, &res.drive, signal, (0.0, t_end), &opts)?;
    let rows = traj.nodes().iter().map(|n| n.to_vec()).collect();
    Ok(NodeMatrix::from_rows(labels, Some(traj.times), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{general_solution_node, NodeMode};
    use crate::encodings::Affine;
    use crate::operator::{make_basis, BasisKind};

    fn qubit_reinit() -> DiscreteReservoir {
        let ch = ParamChannel::reinit_mixed(&[2]).unwrap();
        DiscreteReservoir::new(ch, make_basis(BasisKind::Pauli { qubits: 1 }).unwrap()).unwrap()
    }

    #[test]
    fn reinit_qubit_is_memoryless() {
        let inputs: Vec<Vec<f64>> = [0.1, 0.7, 0.3, 0.9].iter().map(|&u| vec![u]).collect();
        let nodes = run_discrete(&qubit_reinit(), &inputs).unwrap();
        let z = nodes.column("Z").unwrap();
        for (zj, u) in z.iter().zip(&inputs) {
            assert!((zj - (1.0 - 2.0 * u[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_inputs_give_empty_matrix() {
        let nodes = run_discrete(&qubit_reinit(), &[]).unwrap();
        assert_eq!(nodes.rows(), 0);
        assert_eq!(nodes.labels.len(), 4);
    }

    #[test]
    fn constant_input_reaches_fixed_point() {
        let ch = ParamChannel::reinit_mixed(&[2, 2]).unwrap();
        let basis = make_basis(BasisKind::Pauli { qubits: 2 }).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
        let u = crate::operator::random::random_unitary(4, &mut rng);
        let res = DiscreteReservoir::new(ch, basis).unwrap().with_internal(KrausChannel::unitary(u).unwrap()).unwrap();
        let nodes = run_discrete(&res, &vec![vec![0.4]; 200]).unwrap();
        let (a, b) = (nodes.values.row(198), nodes.values.row(199));
        assert!((a - b).amax() < 1e-8);
    }

    #[test]
    fn mismatched_stages_are_rejected() {
        let ch = ParamChannel::reinit_mixed(&[2]).unwrap();
        let basis = make_basis(BasisKind::Pauli { qubits: 2 }).unwrap();
        assert!(DiscreteReservoir::new(ch, basis).is_err());
    }

    #[test]
    fn undamped_generators_need_override() {
        let gen = DriveGenerator::fixed(crate::CMat::zeros(2, 2), vec![]).unwrap();
        let basis = make_basis(BasisKind::Pauli { qubits: 1 }).unwrap();
        assert!(ContinuousReservoir::new(gen.clone(), basis.clone(), &[2], false).is_err());
        let res = ContinuousReservoir::new(gen, basis, &[2], true).unwrap();
        let nodes = run_continuous(&res, &InputSignal::Constant(vec![]), &[0.5, 1.0]).unwrap();
        assert_eq!(nodes.column("Z").unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn gaussian_zero_drive_stays_at_origin() {
        let drive = GaussianDrive::new(Affine::constant(0.0, 1), Affine::constant(0.0, 1), 0.5).unwrap();
        let res = GaussianReservoir::new(drive, false).unwrap();
        let nodes = run_continuous_gaussian(&res, &InputSignal::constant(vec![0.3]).unwrap(), &[1.0, 2.0]).unwrap();
        assert!(nodes.column("X").unwrap().iter().chain(&nodes.column("P").unwrap()).all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_run_matches_closed_form_node() {
        let (g, cx) = (0.8, 1.5);
        let drive = GaussianDrive::new(Affine::new(0.0, vec![cx]), Affine::constant(0.0, 1), g).unwrap();
        let res = GaussianReservoir::new(drive, false).unwrap();
        let signal = InputSignal::held_steps(0.0, 2.0, vec![vec![0.2], vec![0.9], vec![0.5]]).unwrap();
        let times = [1.0, 2.5, 4.0, 5.5];
        let x = run_continuous_gaussian(&res, &signal, &times).unwrap().column("X").unwrap();
        let f = Affine::new(0.0, vec![cx]);
        let oracle = general_solution_node(&f, NodeMode::Damped { gamma: g }, &signal, 0.0, 0.0, &times, 64).unwrap();
        for (a, b) in x.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn late_first_moment_tracks_input() {
        let (g, cx) = (0.8, 1.5);
        let drive = GaussianDrive::new(Affine::new(0.0, vec![cx]), Affine::constant(0.0, 1), g).unwrap();
        let res = GaussianReservoir::new(drive, false).unwrap();
        let us = [0.2, 0.9, 0.5];
        let signal = InputSignal::held_steps(0.0, 40.0, us.iter().map(|&u| vec![u]).collect()).unwrap();
        let x = run_continuous_gaussian(&res, &signal, &[39.0, 79.0, 119.0]).unwrap().column("X").unwrap();
        for (xj, u) in x.iter().zip(&us) {
            assert!((g * xj - cx * u).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_layout() {
        let nodes = run_discrete(&qubit_reinit(), &[vec![0.25]]).unwrap();
        let mut buf = Vec::new();
        nodes.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,I,X,Y,Z\n0,"));
        assert!(text.trim_end().ends_with("5e-1"));
    }
}
