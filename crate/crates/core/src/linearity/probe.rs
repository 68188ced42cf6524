use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, FitMode, Group, LinearityReport, PriorEnsemble, ProbeMetadata, ProbeRun, Tolerances, SCHEMA_VERSION};
use crate::dynamics::{evolve, gaussian_evolve, DriveGenerator, EvolveOptions, GaussianDrive, InputSignal};
use crate::encodings::{GaussianChannel, GaussianState, ParamChannel};
use crate::error::{QrcError, Result};
use crate::operator::{DensityMatrix, OperatorBasis, C64};

/// Maps a grid input `u` to a full input signal for continuous probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Protocol {
    /// `u(t) = u` throughout.
    ConstantLevel,
    /// Fixed history: `history[k]` held for `hold` each, then `u` from
    /// `history.len()·hold` on.
    Held { history: Vec<Vec<f64>>, hold: f64 },
    /// `u(t) = u · sin(ωt + phase)` componentwise.
    SineAmplitude { omega: f64, phase: f64 },
    /// `u(t) = amplitude · sin(ωt + u)` componentwise.
    SinePhase { omega: f64, amplitude: f64 },
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::ConstantLevel => "constant-level",
            Protocol::Held { .. } => "held",
            Protocol::SineAmplitude { .. } => "sine-amplitude",
            Protocol::SinePhase { .. } => "sine-phase",
        }
    }

    /// Time at which the probed input takes effect.
    pub fn switch_time(&self) -> f64 {
        match self {
            Protocol::Held { history, hold } => history.len() as f64 * hold,
            _ => 0.0,
        }
    }

    pub fn signal(&self, u: &[f64]) -> Result<InputSignal> {
        let n = u.len();
        match self {
            Protocol::ConstantLevel => InputSignal::constant(u.to_vec()),
            Protocol::Held { history, hold } => {
                let mut values = history.clone();
                values.push(u.to_vec());
                InputSignal::held_steps(0.0, *hold, values)
            }
            &Protocol::SineAmplitude { omega, phase } => {
                let a = u.to_vec();
                let b = a.clone();
                Ok(InputSignal::analytic(
                    n,
                    move |t| a.iter().map(|x| x * (omega * t + phase).sin()).collect(),
                    Some(Arc::new(move |t| b.iter().map(|x| x * omega * (omega * t + phase).cos()).collect())),
                ))
            }
            &Protocol::SinePhase { omega, amplitude } => {
                let p = u.to_vec();
                let q = p.clone();
                Ok(InputSignal::analytic(
                    n,
                    move |t| p.iter().map(|x| amplitude * (omega * t + x).sin()).collect(),
                    Some(Arc::new(move |t| q.iter().map(|x| amplitude * omega * (omega * t + x).cos()).collect())),
                ))
            }
        }
    }
}

fn check_grid(grid: &[Vec<f64>], input_dim: usize) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|u| u.len() != input_dim) {
        return Err(QrcError::InvalidArgument(format!("grid points must have {input_dim} components")));
    }
    for l in 0..input_dim {
        let mut axis: Vec<f64> = grid.iter().map(|u| u[l]).collect();
        axis.sort_by(f64::total_cmp);
        axis.dedup();
        if axis.len() < 11 {
            return Err(QrcError::InvalidArgument(format!(
                "input component {l} has {} distinct grid values, at least 11 required",
                axis.len()
            )));
        }
    }
    Ok(())
}

fn finish(
    metadata: ProbeMetadata,
    groups: Vec<Group>,
    labels: &[String],
    tol: &Tolerances,
) -> Result<ProbeRun> {
    let (nodes, cells) = classify(&groups, labels, tol)?;
    Ok(ProbeRun { report: LinearityReport { schema_version: SCHEMA_VERSION, metadata, nodes }, cells })
}

/// Builds fit groups from `values[prior][grid point]`.
fn group_by_prior(grid: &[Vec<f64>], values: Vec<Vec<Vec<C64>>>, joint: bool) -> Vec<Group> {
    if joint {
        let mut g = Group { u: Vec::new(), values: Vec::new(), tags: Vec::new() };
        for (p, rows) in values.into_iter().enumerate() {
            g.u.extend(grid.iter().cloned());
            g.tags.extend(std::iter::repeat(p).take(rows.len()));
            g.values.extend(rows);
        }
        vec![g]
    } else {
        values
            .into_iter()
            .enumerate()
            .map(|(p, rows)| Group { u: grid.to_vec(), tags: vec![p; rows.len()], values: rows })
            .collect()
    }
}

/// Evaluates `Tr[B_k C_u[ρ]]` for every prior, grid point and basis
/// element, and fits an affine model per node.
pub fn probe_discrete(
    channel: &ParamChannel,
    basis: &OperatorBasis,
    priors: &PriorEnsemble,
    grid: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<ProbeRun> {
    tol.validate()?;
    if basis.dim() != channel.dim() {
        return Err(QrcError::DimensionMismatch(format!(
            "basis of dimension {} for a channel on dimension {}",
            basis.dim(),
            channel.dim()
        )));
    }
    check_grid(grid, channel.input_dim())?;
    let states = priors.sample(channel.dims())?;
    let cells: Vec<(usize, usize)> = (0..states.len()).flat_map(|p| (0..grid.len()).map(move |j| (p, j))).collect();
    let flat: Vec<Vec<C64>> = cells
        .par_iter()
        .map(|&(p, j)| {
            let out = channel.apply(&grid[j], &states[p])?;
            Ok(basis.expectations(&out)?.values)
        })
        .collect::<Result<_>>()?;
    let values: Vec<Vec<Vec<C64>>> = flat.chunks(grid.len()).map(|c| c.to_vec()).collect();
    let joint = channel.prior_independent();
    let fit_mode = if joint { FitMode::Joint } else { FitMode::PerPrior };
    log::info!("probing {} with {:?} fits over {} priors", channel.kind_name(), fit_mode, states.len());
    let metadata = ProbeMetadata {
        encoding: channel.kind_name().to_string(),
        basis: basis.name().to_string(),
        fit_mode,
        priors: Some(priors.clone()),
        protocol: None,
        read_times: None,
        u_grid: grid.to_vec(),
        tolerances: *tol,
    };
    finish(metadata, group_by_prior(grid, values, joint), basis.labels(), tol)
}

fn gaussian_labels() -> Vec<String> {
    GaussianState::NODE_LABELS.iter().map(|s| s.to_string()).collect()
}

fn real_row(nodes: [f64; 6]) -> Vec<C64> {
    nodes.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// Discrete probe of a Gaussian encoding on the quadrature-moment nodes.
pub fn probe_gaussian_channel(
    channel: &GaussianChannel,
    priors: &PriorEnsemble,
    grid: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<ProbeRun> {
    tol.validate()?;
    check_grid(grid, channel.input_dim())?;
    let states = priors.sample_gaussian()?;
    let values: Vec<Vec<Vec<C64>>> = states
        .iter()
        .map(|g| grid.iter().map(|u| Ok(real_row(channel.apply(u, g)?.nodes()))).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let joint = channel.prior_independent();
    let metadata = ProbeMetadata {
        encoding: channel.kind_name().to_string(),
        basis: "gaussian-moments".to_string(),
        fit_mode: if joint { FitMode::Joint } else { FitMode::PerPrior },
        priors: Some(priors.clone()),
        protocol: None,
        read_times: None,
        u_grid: grid.to_vec(),
        tolerances: *tol,
    };
    finish(metadata, group_by_prior(grid, values, joint), &gaussian_labels(), tol)
}

fn check_read_times(read_times: &[f64]) -> Result<f64> {
    if read_times.is_empty() || read_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(QrcError::InvalidArgument("read times must be finite and non-negative".into()));
    }
    Ok(read_times.iter().copied().fold(0.0, f64::max))
}

/// Group per read time from `values[grid point][read time]`.
fn group_by_time(grid: &[Vec<f64>], values: Vec<Vec<Vec<C64>>>, times: usize) -> Vec<Group> {
    (0..times)
        .map(|r| Group {
            u: grid.to_vec(),
            values: values.iter().map(|per_time| per_time[r].clone()).collect(),
            tags: vec![r; grid.len()],
        })
        .collect()
}

/// Evolves `rho0` under `gen` with the protocol signal for every grid
/// input, reads the nodes at `read_times` and fits node vs `u` separately
/// at each read time.
#[allow(clippy::too_many_arguments)]
pub fn probe_continuous(
    gen: &DriveGenerator,
    rho0: &DensityMatrix,
    protocol: &Protocol,
    grid: &[Vec<f64>],
    read_times: &[f64],
    basis: &OperatorBasis,
    opts: &EvolveOptions,
    tol: &Tolerances,
) -> Result<ProbeRun> {
    tol.validate()?;
    check_grid(grid, gen.input_dim())?;
    let t_end = check_read_times(read_times)?;
    let mut opts = opts.clone();
    opts.sample_times = Some(read_times.to_vec());
    let values: Vec<Vec<Vec<C64>>> = grid
        .par_iter()
        .map(|u| {
            let signal = protocol.signal(u)?;
            let traj = evolve(rho0, gen, &signal, (0.0, t_end), &opts, Some(basis))?;
            Ok(read_times
                .iter()
                .map(|t| {
                    let i = traj.times.iter().position(|s| s == t).expect("read time is sampled");
                    traj.nodes[i].values.clone()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let metadata = ProbeMetadata {
        encoding: "hamiltonian-drive".to_string(),
        basis: basis.name().to_string(),
        fit_mode: FitMode::PerReadTime,
        priors: None,
        protocol: Some(protocol.name().to_string()),
        read_times: Some(read_times.to_vec()),
        u_grid: grid.to_vec(),
        tolerances: *tol,
    };
    finish(metadata, group_by_time(grid, values, read_times.len()), basis.labels(), tol)
}

/// Continuous probe of the damped displacement-driven mode.
#[allow(clippy::too_many_arguments)]
pub fn probe_continuous_gaussian(
    drive: &GaussianDrive,
    g0: &GaussianState,
    protocol: &Protocol,
    grid: &[Vec<f64>],
    read_times: &[f64],
    opts: &EvolveOptions,
    tol: &Tolerances,
) -> Result<ProbeRun> {
    tol.validate()?;
    check_grid(grid, drive.input_dim())?;
    let t_end = check_read_times(read_times)?;
    let mut opts = opts.clone();
    opts.sample_times = Some(read_times.to_vec());
    let values: Vec<Vec<Vec<C64>>> = grid
        .par_iter()
        .map(|u| {
            let signal = protocol.signal(u)?;
            let traj = gaussian_evolve(g0, drive, &signal, (0.0, t_end), &opts)?;
            Ok(read_times
                .iter()
                .map(|t| {
                    let i = traj.times.iter().position(|s| s == t).expect("read time is sampled");
                    real_row(traj.states[i].nodes())
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let metadata = ProbeMetadata {
        encoding: "displacement-drive".to_string(),
        basis: "gaussian-moments".to_string(),
        fit_mode: FitMode::PerReadTime,
        priors: None,
        protocol: Some(protocol.name().to_string()),
        read_times: Some(read_times.to_vec()),
        u_grid: grid.to_vec(),
        tolerances: *tol,
    };
    finish(metadata, group_by_time(grid, values, read_times.len()), &gaussian_labels(), tol)
}
