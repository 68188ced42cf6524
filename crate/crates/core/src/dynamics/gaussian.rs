//! Damped, displacement-driven single bosonic mode.
//!
//! The drive `H(t) = F_x(u) P − F_p(u) X` together with the jump operator
//! `√(2γ)·a` gives
//!
//! ```text
//! d⟨X⟩/dt = F_x(u) − γ⟨X⟩,    d⟨P⟩/dt = F_p(u) − γ⟨P⟩,
//! dV/dt   = −2γ (V − I/2).
//! ```
//!
//! Every mean therefore obeys `dy/dt = f(u(t)) − γy` with `f` affine in
//! `u`, which [`general_solution_node`] solves in closed form up to one
//! quadrature.

use nalgebra::{Matrix2, Vector2};

use super::integrate::EvolveOptions;
use super::signal::{knots, InputSignal};
use crate::encodings::{Affine, GaussianState};
use crate::error::{QrcError, Result};

/// Complex displacement force `F(u) = F_x(u) + i F_p(u)` with damping rate
/// `gamma` on the means.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDrive {
    pub force_x: Affine,
    pub force_p: Affine,
    pub gamma: f64,
}

impl GaussianDrive {
    pub fn new(force_x: Affine, force_p: Affine, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(QrcError::InvalidArgument(format!("damping rate {gamma}")));
        }
        if force_x.input_dim() != force_p.input_dim() {
            return Err(QrcError::InvalidArgument("force maps disagree on input dimension".into()));
        }
        Ok(GaussianDrive { force_x, force_p, gamma })
    }

    pub fn input_dim(&self) -> usize {
        self.force_x.input_dim()
    }

    pub fn force(&self, u: &[f64]) -> Vector2<f64> {
        Vector2::new(self.force_x.eval(u), self.force_p.eval(u))
    }
}

#[derive(Debug, Clone)]
pub struct GaussianTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
}

impl GaussianTrajectory {
    /// Node vectors (see [`GaussianState::nodes`]) per recorded time.
    pub fn nodes(&self) -> Vec<[f64; 6]> {
        self.states.iter().map(GaussianState::nodes).collect()
    }
}

fn relax(cov0: &Matrix2<f64>, gamma: f64, elapsed: f64) -> Matrix2<f64> {
    let vac = Matrix2::identity() * 0.5;
    vac + (cov0 - vac) * (-2.0 * gamma * elapsed).exp()
}

/// Means after `h` under a constant force.
fn exact_means(m: &Vector2<f64>, force: &Vector2<f64>, gamma: f64, h: f64) -> Vector2<f64> {
    if gamma == 0.0 {
        m + force * h
    } else {
        let e = (-gamma * h).exp();
        m * e + force * ((1.0 - e) / gamma)
    }
}

/// Evolves `g0` under the displacement drive.
///
/// Piecewise-constant signals are propagated exactly piece by piece. Other
/// signals use RK4 on the means with step `opts.dt` (default
/// `10⁻³ / max(γ, 1)`). The covariance is input independent and always
/// exact. Without explicit sample times the state is recorded at every
/// piece boundary (piecewise-constant) or every step (otherwise).
pub fn gaussian_evolve(
    g0: &GaussianState,
    drive: &GaussianDrive,
    signal: &InputSignal,
    t_span: (f64, f64),
    opts: &EvolveOptions,
) -> Result<GaussianTrajectory> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(QrcError::InvalidArgument(format!("time span [{t0}, {t1}]")));
    }
    if signal.dim() != drive.input_dim() {
        return Err(QrcError::InputArity { expected: drive.input_dim(), got: signal.dim() });
    }
    let samples = opts.sample_times.as_deref();
    if let Some(bad) = samples.into_iter().flatten().find(|&&t| !(t >= t0 && t <= t1)) {
        return Err(QrcError::InvalidArgument(format!("sample time {bad} outside [{t0}, {t1}]")));
    }
    let wanted = |t: f64| samples.map_or(true, |s| s.contains(&t));
    let extra = signal.breakpoints().iter().copied().chain(samples.unwrap_or(&[]).iter().copied());
    let ks = knots(t0, t1, extra);
    let gamma = drive.gamma;
    let exact = signal.is_piecewise_constant();
    let dt = opts.step(gamma.max(1.0), t1 - t0)?;

    let mut out = GaussianTrajectory { times: Vec::new(), states: Vec::new() };
    let mut push = |t: f64, m: Vector2<f64>| -> Result<()> {
        let g = GaussianState::new(m, relax(g0.covariance(), gamma, t - t0))?;
        out.times.push(t);
        out.states.push(g);
        Ok(())
    };
    let mut m = *g0.means();
    if wanted(t0) {
        push(t0, m)?;
    }
    for w in ks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let probe = 0.5 * (a + b);
        if exact {
            m = exact_means(&m, &drive.force(&signal.value_on_piece(a, probe)), gamma, b - a);
            if wanted(b) {
                push(b, m)?;
            }
            continue;
        }
        let n = ((b - a) / dt).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let f = |t: f64, y: &Vector2<f64>| drive.force(&signal.value_on_piece(t, probe)) - y * gamma;
        for k in 0..n {
            let t = a + k as f64 * h;
            let k1 = f(t, &m);
            let k2 = f(t + 0.5 * h, &(m + k1 * (0.5 * h)));
            let k3 = f(t + 0.5 * h, &(m + k2 * (0.5 * h)));
            let k4 = f(t + h, &(m + k3 * h));
            m += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            if !m.iter().all(|v| v.is_finite()) {
                return Err(QrcError::NonFinite(t + h));
            }
            let t_next = if k + 1 == n { b } else { t + h };
            if samples.is_none() || (k + 1 == n && wanted(b)) {
                push(t_next, m)?;
            }
        }
    }
    Ok(out)
}

/// Damping mode for [`general_solution_node`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeMode {
    /// `dy/dt = f(u) − γy` with `γ > 0`.
    Damped { gamma: f64 },
    /// `dy/dt = f(u)`: the definite integral of the forcing. Carries no
    /// fading memory.
    Undamped,
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) / 2 * 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `Σ_l c_l ∫_{t0}^{t} e^{−γ(t−s)} du_l/ds ds`, integrating each smooth piece
/// separately. Jumps of piecewise-constant signals contribute nothing.
pub(crate) fn damped_derivative_integral(
    f: &Affine,
    gamma: f64,
    signal: &InputSignal,
    t0: f64,
    t: f64,
    intervals: usize,
) -> f64 {
    if signal.is_piecewise_constant() {
        return 0.0;
    }
    let ks = knots(t0, t, signal.breakpoints().iter().copied());
    ks.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let probe = 0.5 * (a + b);
            let slope = |s: f64| {
                let du = signal.derivative_on_piece(s, probe);
                f.weights.iter().zip(&du).map(|(c, d)| c * d).sum::<f64>()
            };
            (-gamma * (t - b)).exp() * simpson(|s| (-gamma * (b - s)).exp() * slope(s), a, b, intervals)
        })
        .sum()
}

/// Closed-form node value `y(t)` for `dy/dt = f(u(t)) − γy`, `y(t0) = y0`,
/// at each of `times`:
///
/// ```text
/// γ·y(t) = γ y0 e^{−γ(t−t0)} + f(u(t)) − e^{−γ(t−t0)} f(u(t0))
///          − ∫_{t0}^{t} e^{−γ(t−s)} (d/ds) f(u(s)) ds
/// ```
///
/// applied piece by piece, so a piecewise-constant input is a sequence of
/// constant-input evolutions with updated initial conditions. `intervals`
/// sets the Simpson resolution per piece.
pub fn general_solution_node(
    f: &Affine,
    mode: NodeMode,
    signal: &InputSignal,
    t0: f64,
    y0: f64,
    times: &[f64],
    intervals: usize,
) -> Result<Vec<f64>> {
    if signal.dim() != f.input_dim() {
        return Err(QrcError::InputArity { expected: f.input_dim(), got: signal.dim() });
    }
    if let NodeMode::Damped { gamma } = mode {
        if !(gamma > 0.0) {
            return Err(QrcError::Degenerate(format!(
                "damping rate {gamma}; use NodeMode::Undamped for γ = 0"
            )));
        }
    }
    times
        .iter()
        .map(|&t| {
            if !(t >= t0) {
                return Err(QrcError::InvalidArgument(format!("time {t} precedes t0 = {t0}")));
            }
            let ks = knots(t0, t, signal.breakpoints().iter().copied());
            let mut y = y0;
            for w in ks.windows(2) {
                let (a, b) = (w[0], w[1]);
                let probe = 0.5 * (a + b);
                let fu = |s: f64| f.eval(&signal.value_on_piece(s, probe));
                y = match mode {
                    NodeMode::Undamped => y + simpson(fu, a, b, intervals),
                    NodeMode::Damped { gamma } => {
                        let e = (-gamma * (b - a)).exp();
                        let integral = damped_derivative_integral(f, gamma, signal, a, b, intervals);
                        y * e + (fu(b) - e * fu(a) - integral) / gamma
                    }
                };
            }
            Ok(y)
        })
        .collect()
}
