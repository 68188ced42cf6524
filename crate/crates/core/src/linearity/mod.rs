//! Numerical classification of input encodings.
//!
//! An encoding is linear on node `k` when `⟨B_k⟩` is an affine function of
//! the current input `u` (at fixed history). The probes sample node values
//! over an input grid, fit an affine model and grade the worst residual:
//!
//! * `linear` if `residual / scale ≤ τ_lin`,
//! * `nonlinear` if `residual / scale ≥ τ_nonlin`,
//! * `indeterminate` in between,
//!
//! where `scale = max(range of the node over the grid, range_floor)`.
//!
//! Encodings whose output does not depend on the prior state (full
//! re-initialization) are fitted jointly over all priors, so a single affine
//! map must serve every prior. Otherwise each prior gets its own fit and the
//! worst residual is reported; the report records which mode was used.

mod fit;
mod forcing;
mod priors;
mod probe;

pub use fit::{affine_fit, AffineFit};
pub use forcing::{
    check_forcing_condition, check_gaussian_forcing, nl_contribution, ForcingCheck, QuadraticDrive,
};
pub use priors::{PriorEnsemble, PriorKind};
pub use probe::{
    probe_continuous, probe_continuous_gaussian, probe_discrete, probe_gaussian_channel, Protocol,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operator::C64;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Linear,
    Nonlinear,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub lin: f64,
    pub nonlin: f64,
    pub range_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { lin: 1e-8, nonlin: 1e-4, range_floor: 1e-6 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.lin > 0.0 && self.lin < self.nonlin && self.range_floor > 0.0) {
            return Err(crate::QrcError::InvalidArgument(format!(
                "tolerances need 0 < lin < nonlin and a positive range floor, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn verdict(&self, relative_residual: f64) -> Verdict {
        if relative_residual <= self.lin {
            Verdict::Linear
        } else if relative_residual >= self.nonlin {
            Verdict::Nonlinear
        } else {
            Verdict::Indeterminate
        }
    }
}

/// `points` values per input component spanning 5%..95% of each domain
/// interval; the full Cartesian product for multivariate inputs.
pub fn interior_grid(domain: &[(f64, f64)], points: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .map(|&(lo, hi)| {
            let (a, b) = (lo + 0.05 * (hi - lo), lo + 0.95 * (hi - lo));
            (0..points)
                .map(|k| {
                    let s = if points == 1 { 0.0 } else { k as f64 / (points - 1) as f64 };
                    a * (1.0 - s) + b * s
                })
                .collect()
        })
        .collect();
    let mut grid = vec![Vec::new()];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    grid
}

/// 21 interior points per input component.
pub fn default_grid(domain: &[(f64, f64)]) -> Vec<Vec<f64>> {
    interior_grid(domain, 21)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// One affine model across all priors.
    Joint,
    /// A separate model per prior, worst residual reported.
    PerPrior,
    /// A separate model per read time (continuous probes).
    PerReadTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub index: usize,
    pub label: String,
    pub verdict: Verdict,
    pub max_abs_residual: f64,
    pub range: f64,
    pub relative_residual: f64,
    /// One `[a₀, a₁, …]` per fit (see [`FitMode`]).
    pub coefficients: Vec<Vec<f64>>,
    /// Coefficients of the imaginary parts, present only for nodes with
    /// non-negligible imaginary values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag_coefficients: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMetadata {
    pub encoding: String,
    pub basis: String,
    pub fit_mode: FitMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<PriorEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub read_times: Option<Vec<f64>>,
    pub u_grid: Vec<Vec<f64>>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub schema_version: u32,
    pub metadata: ProbeMetadata,
    pub nodes: Vec<NodeReport>,
}

impl LinearityReport {
    /// `nonlinear` if any node is, else `indeterminate` if any node is,
    /// else `linear`.
    pub fn overall(&self) -> Verdict {
        let has = |v| self.nodes.iter().any(|n| n.verdict == v);
        if has(Verdict::Nonlinear) {
            Verdict::Nonlinear
        } else if has(Verdict::Indeterminate) {
            Verdict::Indeterminate
        } else {
            Verdict::Linear
        }
    }

    pub fn node(&self, label: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.label == label)
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.nodes.iter().map(|n| n.verdict).collect()
    }
}

/// One evaluated (fit group, input, node) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    /// Prior index or read-time index, depending on the probe.
    pub group: usize,
    pub u: Vec<f64>,
    pub node: usize,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub report: LinearityReport,
    /// Group-major, then input, then node.
    pub cells: Vec<CellRecord>,
}

/// Node values for one fit group: `values[sample][node]`. `tags[sample]` is
/// the prior or read-time index reported with each cell.
pub(crate) struct Group {
    pub u: Vec<Vec<f64>>,
    pub values: Vec<Vec<C64>>,
    pub tags: Vec<usize>,
}

const IMAG_TOL: f64 = 1e-12;

/// Fits every node in every group and grades the worst residual.
pub(crate) fn classify(
    groups: &[Group],
    labels: &[String],
    tol: &Tolerances,
) -> Result<(Vec<NodeReport>, Vec<CellRecord>)> {
    let nodes = labels.len();
    let mut reports = Vec::with_capacity(nodes);
    // residuals[group][sample][node]
    let mut residuals: Vec<Vec<Vec<f64>>> =
        groups.iter().map(|g| vec![vec![0.0; nodes]; g.u.len()]).collect();
    for k in 0..nodes {
        let column = |g: &Group, part: fn(&C64) -> f64| g.values.iter().map(|v| part(&v[k])).collect::<Vec<f64>>();
        let range_of = |part: fn(&C64) -> f64| {
            let (lo, hi) = groups
                .iter()
                .flat_map(|g| g.values.iter().map(move |v| part(&v[k])))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            hi - lo
        };
        let has_imag = groups.iter().flat_map(|g| g.values.iter()).any(|v| v[k].im.abs() > IMAG_TOL);
        let mut max_res = 0.0f64;
        let mut coeffs = Vec::new();
        let mut imag_coeffs = Vec::new();
        for (gi, g) in groups.iter().enumerate() {
            let fit = affine_fit(&g.u, &column(g, |z| z.re))?;
            for (s, r) in fit.residuals.iter().enumerate() {
                residuals[gi][s][k] = *r;
            }
            max_res = max_res.max(fit.max_abs_residual);
            coeffs.push(fit.coefficients);
            if has_imag {
                let fit = affine_fit(&g.u, &column(g, |z| z.im))?;
                max_res = max_res.max(fit.max_abs_residual);
                imag_coeffs.push(fit.coefficients);
            }
        }
        let range = if has_imag { range_of(|z| z.re).max(range_of(|z| z.im)) } else { range_of(|z| z.re) };
        let relative = max_res / range.max(tol.range_floor);
        reports.push(NodeReport {
            index: k,
            label: labels[k].clone(),
            verdict: tol.verdict(relative),
            max_abs_residual: max_res,
            range,
            relative_residual: relative,
            coefficients: coeffs,
            imag_coefficients: has_imag.then_some(imag_coeffs),
        });
    }
    let mut cells = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        for (s, u) in g.u.iter().enumerate() {
            for k in 0..nodes {
                cells.push(CellRecord {
                    group: g.tags[s],
                    u: u.clone(),
                    node: k,
                    value: g.values[s][k].re,
                    residual: residuals[gi][s][k],
                });
            }
        }
    }
    Ok((reports, cells))
}
