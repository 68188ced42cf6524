use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_continuous_gaussian, run_discrete, train_readout, DiscreteReservoir, GaussianReservoir, ReadoutModel};
use crate::error::{QrcError, Result};
use crate::linearity::{classify, FitMode, Group, LinearityReport, ProbeMetadata, Protocol, Tolerances, Verdict, SCHEMA_VERSION};
use crate::encodings::GaussianState;
use crate::operator::{DensityMatrix, C64};

const WASHOUT_FRACTION: f64 = 0.1;
const MIN_STEPS_PER_DELAY: usize = 50;

/// I.i.d. uniform inputs on `[0, 1)`.
pub fn stm_inputs(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0.0..1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StmReport {
    pub delays: Vec<usize>,
    /// Squared correlation on the test split, clipped to `[0, 1]`.
    pub r2: Vec<f64>,
    pub capacity: f64,
    /// Leading steps discarded before training.
    pub washout: usize,
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab * sab / (saa * sbb)).clamp(0.0, 1.0)
}

/// Short-term memory capacity `Σ_d r²(d)` of a scalar-input discrete
/// reservoir. The first 10% of steps (at least the largest delay) are
/// discarded; each delay gets its own readout.
pub fn stm_capacity(res: &DiscreteReservoir, inputs: &[f64], delays: &[usize], lambda: f64) -> Result<StmReport> {
    if res.input().input_dim() != 1 {
        return Err(QrcError::InputArity { expected: 1, got: res.input().input_dim() });
    }
    if delays.is_empty() {
        return Err(QrcError::InvalidArgument("no delays requested".into()));
    }
    let max_d = delays.iter().copied().max().unwrap_or(0);
    let needed = MIN_STEPS_PER_DELAY * max_d.max(1);
    if inputs.len() < needed {
        return Err(QrcError::InvalidArgument(format!(
            "{} inputs, at least {needed} required for delay {max_d}",
            inputs.len()
        )));
    }
    let n = inputs.len();
    let mean = inputs.iter().sum::<f64>() / n as f64;
    if inputs.iter().all(|u| (u - mean).abs() == 0.0) {
        return Err(QrcError::Degenerate("input sequence has zero variance".into()));
    }
    let rows: Vec<Vec<f64>> = inputs.iter().map(|&u| vec![u]).collect();
    let nodes = run_discrete(res, &rows)?;
    let washout = ((WASHOUT_FRACTION * n as f64).ceil() as usize).max(max_d);
    let features = nodes.values.rows(washout, n - washout).into_owned();
    let r2 = delays
        .par_iter()
        .map(|&d| {
            let target: Vec<f64> = (washout..n).map(|j| inputs[j - d]).collect();
            let model = train_readout(&features, &target, lambda)?;
            let pred = model.predict_rows(&features);
            let split = model.train_rows;
            Ok(squared_correlation(&pred[split..], &target[split..]))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StmReport { delays: delays.to_vec(), capacity: r2.iter().sum(), r2, washout })
}

/// Per-step maximum node difference between two runs that share the input
/// sequence but start from different states.
pub fn echo_state_distances(
    res: &DiscreteReservoir,
    inputs: &[Vec<f64>],
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
) -> Result<Vec<f64>> {
    let (a, _) = res.run_from(rho_a, inputs)?;
    let (b, _) = res.run_from(rho_b, inputs)?;
    Ok((0..a.rows()).map(|i| (a.values.row(i) - b.values.row(i)).amax()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SineEncoding {
    /// The parameter is the amplitude `A` of `A·sin(ωt + φ)`.
    Amplitude,
    /// The parameter is the phase `φ`.
    Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTask {
    pub omega: f64,
    /// Amplitude used when the phase carries the parameter.
    pub amplitude: f64,
    /// Phase used when the amplitude carries the parameter.
    pub phase: f64,
    /// Node read times; pick them after the transient has decayed.
    pub read_times: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_lambda() -> f64 {
    super::DEFAULT_LAMBDA
}

impl SineTask {
    pub fn protocol(&self, encoding: SineEncoding) -> Protocol {
        match encoding {
            SineEncoding::Amplitude => Protocol::SineAmplitude { omega: self.omega, phase: self.phase },
            SineEncoding::Phase => Protocol::SinePhase { omega: self.omega, amplitude: self.amplitude },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SineReport {
    pub encoding: SineEncoding,
    pub params: Vec<f64>,
    /// Readout trained on all nodes at all read times.
    pub readout: ReadoutModel,
    /// Node-vs-parameter classification, one fit per read time.
    pub linearity: LinearityReport,
}

impl SineReport {
    /// Worst verdict over the first-moment nodes `X` and `P`.
    pub fn first_moment_verdict(&self) -> Verdict {
        let v: Vec<Verdict> =
            ["X", "P"].iter().filter_map(|l| self.linearity.node(l)).map(|n| n.verdict).collect();
        if v.contains(&Verdict::Nonlinear) {
            Verdict::Nonlinear
        } else if v.contains(&Verdict::Indeterminate) {
            Verdict::Indeterminate
        } else {
            Verdict::Linear
        }
    }
}

/// Drives the damped mode with `A·sin(ωt + φ)` for every parameter value,
/// regresses the parameter from the nodes at the read times and classifies
/// each node as a function of the parameter.
///
/// The readout uses a sequential 80/20 split, so `params` should not be
/// sorted if test error is meant to measure interpolation.
pub fn sine_estimation(
    res: &GaussianReservoir,
    task: &SineTask,
    encoding: SineEncoding,
    params: &[f64],
) -> Result<SineReport> {
    if res.drive().input_dim() != 1 {
        return Err(QrcError::InputArity { expected: 1, got: res.drive().input_dim() });
    }
    if task.read_times.is_empty() {
        return Err(QrcError::InvalidArgument("no read times".into()));
    }
    task.tolerances.validate()?;
    let protocol = task.protocol(encoding);
    // per_param[p][read time] = node row
    let per_param: Vec<Vec<Vec<f64>>> = params
        .par_iter()
        .map(|&p| {
            let signal = protocol.signal(&[p])?;
            let nodes = run_continuous_gaussian(res, &signal, &task.read_times)?;
            Ok((0..nodes.rows()).map(|i| nodes.values.row(i).iter().copied().collect()).collect())
        })
        .collect::<Result<_>>()?;
    let width = GaussianState::NODE_LABELS.len();
    let times = task.read_times.len();
    let features = DMatrix::from_fn(params.len(), width * times, |i, j| per_param[i][j / width][j % width]);
    let readout = train_readout(&features, params, task.lambda)?;

    let u: Vec<Vec<f64>> = params.iter().map(|&p| vec![p]).collect();
    let groups: Vec<Group> = (0..times)
        .map(|r| Group {
            u: u.clone(),
            values: per_param.iter().map(|rows| rows[r].iter().map(|&v| C64::new(v, 0.0)).collect()).collect(),
            tags: vec![r; params.len()],
        })
        .collect();
    let labels: Vec<String> = GaussianState::NODE_LABELS.iter().map(|s| s.to_string()).collect();
    let (nodes, _) = classify(&groups, &labels, &task.tolerances)?;
    let linearity = LinearityReport {
        schema_version: SCHEMA_VERSION,
        metadata: ProbeMetadata {
            encoding: "displacement-drive".to_string(),
            basis: "gaussian-moments".to_string(),
            fit_mode: FitMode::PerReadTime,
            priors: None,
            protocol: Some(protocol.name().to_string()),
            read_times: Some(task.read_times.clone()),
            u_grid: u,
            tolerances: task.tolerances,
        },
        nodes,
    };
    Ok(SineReport { encoding, params: params.to_vec(), readout, linearity })
}
