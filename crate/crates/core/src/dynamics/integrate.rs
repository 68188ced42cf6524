//! Fixed-step RK4 integration of the Lindblad and adjoint equations.
//!
//! Each step is taken once with step `h` and once as two steps of `h/2`.
//! The two-half-step result is kept and `‖y_h − y_{h/2}‖/15` is recorded as
//! the local error estimate. The step grid is split at signal breakpoints,
//! at the ends of the time span and at requested sample times, so
//! piecewise-constant inputs are integrated one constant piece at a time.

use rayon::prelude::*;

use super::signal::{knots, InputSignal};
use super::DriveGenerator;
use crate::error::{QrcError, Result};
use crate::operator::{hermitian_defect, is_finite, trace, CMat, DensityMatrix, ExpectationVector, OperatorBasis, C64};

#[derive(Debug, Clone, Default)]
pub struct EvolveOptions {
    /// Step size. Defaults to `10⁻³` divided by the generator's rate scale
    /// (the largest of `γ_max` and the drive norms).
    pub dt: Option<f64>,
    /// Times at which to record the state. `None` records every step.
    pub sample_times: Option<Vec<f64>>,
}

impl EvolveOptions {
    pub fn with_dt(dt: f64) -> Self {
        EvolveOptions { dt: Some(dt), sample_times: None }
    }

    pub fn sampled(mut self, times: Vec<f64>) -> Self {
        self.sample_times = Some(times);
        self
    }

    pub(crate) fn step(&self, rate: f64, span: f64) -> Result<f64> {
        match self.dt {
            Some(dt) if dt > 0.0 && dt.is_finite() => Ok(dt),
            Some(dt) => Err(QrcError::InvalidArgument(format!("step size {dt}"))),
            None if rate > 0.0 => Ok(1e-3 / rate),
            None => Ok(span.max(f64::MIN_POSITIVE)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Node values per recorded time; empty when no basis was given.
    pub nodes: Vec<ExpectationVector>,
    /// Largest local error estimate over all steps.
    pub max_error_estimate: f64,
}

pub(crate) struct Run {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub max_error: f64,
}

fn rk4<F: Fn(f64, &CMat) -> CMat>(f: &F, t: f64, h: f64, y: &CMat) -> CMat {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * C64::new(0.5 * h, 0.0)));
    let k3 = f(t + 0.5 * h, &(y + &k2 * C64::new(0.5 * h, 0.0)));
    let k4 = f(t + h, &(y + &k3 * C64::new(h, 0.0)));
    y + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}

/// Integrates `dy/dt = rhs(t, probe, y)` across consecutive `knots`, which
/// may be decreasing for backward integration. `probe` is the midpoint of
/// the current step, used to select the current signal piece.
pub(crate) fn integrate_pieces<F, C>(
    y0: CMat,
    knots: &[f64],
    dt: f64,
    record: Option<&[f64]>,
    rhs: F,
    mut check: C,
) -> Result<Run>
where
    F: Fn(f64, f64, &CMat) -> CMat,
    C: FnMut(usize, f64, &CMat) -> Result<()>,
{
    let wanted = |t: f64| record.map_or(true, |r| r.contains(&t));
    let mut run = Run { times: Vec::new(), states: Vec::new(), max_error: 0.0 };
    let mut y = y0;
    let mut step = 0usize;
    if wanted(knots[0]) {
        run.times.push(knots[0]);
        run.states.push(y.clone());
    }
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a).abs() / dt).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for k in 0..n {
            let t = a + k as f64 * h;
            let probe = t + 0.5 * h;
            let f = |s: f64, x: &CMat| rhs(s, probe, x);
            let full = rk4(&f, t, h, &y);
            let half = rk4(&f, t, 0.5 * h, &y);
            let halves = rk4(&f, t + 0.5 * h, 0.5 * h, &half);
            run.max_error = run.max_error.max((&halves - full).camax() / 15.0);
            y = halves;
            step += 1;
            let t_next = if k + 1 == n { b } else { a + (k + 1) as f64 * h };
            if !is_finite(&y) {
                return Err(QrcError::NonFinite(t_next));
            }
            check(step, t_next, &y)?;
            if record.is_none() || (k + 1 == n && wanted(b)) {
                run.times.push(t_next);
                run.states.push(y.clone());
            }
        }
    }
    Ok(run)
}

fn check_density(step: usize, time: f64, m: &CMat) -> Result<()> {
    let herm = hermitian_defect(m);
    if herm > DensityMatrix::HERMITIAN_TOL {
        return Err(QrcError::InvariantViolation { what: "Hermiticity", step, time, defect: herm });
    }
    let tr = (trace(m) - C64::new(1.0, 0.0)).norm();
    if tr > DensityMatrix::TRACE_TOL {
        return Err(QrcError::InvariantViolation { what: "unit trace", step, time, defect: tr });
    }
    let min = crate::operator::hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
    if min < -DensityMatrix::PSD_TOL {
        return Err(QrcError::InvariantViolation { what: "positivity", step, time, defect: -min });
    }
    Ok(())
}

fn check_signal(gen: &DriveGenerator, signal: &InputSignal) -> Result<()> {
    if !gen.drives().is_empty() && signal.dim() != gen.input_dim() {
        return Err(QrcError::InputArity { expected: gen.input_dim(), got: signal.dim() });
    }
    Ok(())
}

fn check_span(t0: f64, t1: f64, samples: Option<&[f64]>) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(QrcError::InvalidArgument(format!("time span [{t0}, {t1}]")));
    }
    if let Some(bad) = samples.into_iter().flatten().find(|&&t| !(t >= t0 && t <= t1)) {
        return Err(QrcError::InvalidArgument(format!("sample time {bad} outside [{t0}, {t1}]")));
    }
    Ok(())
}

/// Integrates the master equation from `state0` over `t_span`.
///
/// Density-matrix invariants are checked after every step; a violation is
/// reported with the step index and defect, never repaired.
pub fn evolve(
    state0: &DensityMatrix,
    gen: &DriveGenerator,
    signal: &InputSignal,
    t_span: (f64, f64),
    opts: &EvolveOptions,
    basis: Option<&OperatorBasis>,
) -> Result<Trajectory> {
    let (t0, t1) = t_span;
    if state0.dim() != gen.dim() {
        return Err(QrcError::DimensionMismatch(format!(
            "state of dimension {} under a generator of dimension {}",
            state0.dim(),
            gen.dim()
        )));
    }
    check_signal(gen, signal)?;
    let samples = opts.sample_times.as_deref();
    check_span(t0, t1, samples)?;
    let dt = opts.step(gen.rate_scale(), t1 - t0)?;
    let extra = signal.breakpoints().iter().copied().chain(samples.unwrap_or(&[]).iter().copied());
    let ks = knots(t0, t1, extra);
    let rhs = |t: f64, probe: f64, rho: &CMat| gen.rhs_with(&gen.hamiltonian(&signal.value_on_piece(t, probe)), rho);
    let run = integrate_pieces(state0.matrix().clone(), &ks, dt, samples, rhs, check_density)?;
    let states: Vec<DensityMatrix> = run
        .states
        .into_iter()
        .map(|m| DensityMatrix::new_unchecked(m, state0.dims().to_vec()))
        .collect();
    let nodes = match basis {
        Some(b) => states.iter().map(|s| b.expectations(s)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(Trajectory { times: run.times, states, nodes, max_error_estimate: run.max_error })
}

/// Heisenberg-picture operator `B(t_read)` such that
/// `⟨B⟩(t_read) = Tr[ρ(t0) · B(t_read)]`.
///
/// For time-dependent inputs the adjoint propagator composes in reverse
/// order, so `X(s)` is integrated backward from `X(t_read) = B` to `s = t0`
/// under `dX/ds = −L†_{u(s)}[X]`.
pub fn evolve_adjoint(
    b: &CMat,
    gen: &DriveGenerator,
    signal: &InputSignal,
    t0: f64,
    t_read: f64,
    opts: &EvolveOptions,
) -> Result<CMat> {
    if b.shape() != (gen.dim(), gen.dim()) {
        return Err(QrcError::DimensionMismatch("observable does not match the generator".into()));
    }
    check_signal(gen, signal)?;
    check_span(t0, t_read, None)?;
    let dt = opts.step(gen.rate_scale(), t_read - t0)?;
    let mut ks = knots(t0, t_read, signal.breakpoints().iter().copied());
    ks.reverse();
    let rhs = |s: f64, probe: f64, x: &CMat| -gen.adjoint_rhs_with(&gen.hamiltonian(&signal.value_on_piece(s, probe)), x);
    let end = [t0];
    let run = integrate_pieces(b.clone(), &ks, dt, Some(&end), rhs, |_, _, _| Ok(()))?;
    Ok(run.states.into_iter().last().expect("final state is recorded"))
}

/// Node values `Tr[ρ0 · B_k(t)]` for every basis element and read time,
/// computed in the Heisenberg picture.
pub fn adjoint_nodes(
    rho0: &DensityMatrix,
    gen: &DriveGenerator,
    signal: &InputSignal,
    t0: f64,
    read_times: &[f64],
    basis: &OperatorBasis,
    opts: &EvolveOptions,
) -> Result<Vec<Vec<C64>>> {
    read_times
        .par_iter()
        .map(|&t| {
            basis
                .elements()
                .par_iter()
                .map(|b| {
                    let x = evolve_adjoint(b, gen, signal, t0, t, opts)?;
                    crate::operator::expectation(rho0.matrix(), &x)
                })
                .collect()
        })
        .collect()
}
