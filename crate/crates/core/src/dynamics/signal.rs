use std::fmt;
use std::sync::Arc;

use crate::error::{QrcError, Result};

type Curve = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Time-dependent input vector `u(t)`.
#[derive(Clone)]
pub enum InputSignal {
    Constant(Vec<f64>),
    /// `values[0]` before `breakpoints[0]`, `values[k]` on
    /// `[breakpoints[k-1], breakpoints[k])`, and the last value afterwards.
    /// Segments are right-continuous.
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<Vec<f64>> },
    /// Linear interpolation between samples, held constant outside.
    Sampled { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// Smooth signal with optional analytic derivative.
    Analytic { dim: usize, value: Curve, derivative: Option<Curve> },
}

impl fmt::Debug for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSignal::Constant(u) => f.debug_tuple("Constant").field(u).finish(),
            InputSignal::PiecewiseConstant { breakpoints, values } => f
                .debug_struct("PiecewiseConstant")
                .field("breakpoints", breakpoints)
                .field("values", values)
                .finish(),
            InputSignal::Sampled { times, values } => {
                f.debug_struct("Sampled").field("times", times).field("values", values).finish()
            }
            InputSignal::Analytic { dim, derivative, .. } => f
                .debug_struct("Analytic")
                .field("dim", dim)
                .field("has_derivative", &derivative.is_some())
                .finish(),
        }
    }
}

fn check_rows(values: &[Vec<f64>]) -> Result<usize> {
    let dim = values
        .first()
        .map(Vec::len)
        .ok_or_else(|| QrcError::InvalidArgument("signal has no values".into()))?;
    if values.iter().any(|v| v.len() != dim) {
        return Err(QrcError::InvalidArgument("signal values differ in dimension".into()));
    }
    if let Some(bad) = values.iter().flatten().find(|x| !x.is_finite()) {
        return Err(QrcError::InvalidArgument(format!("non-finite signal value {bad}")));
    }
    Ok(dim)
}

fn check_increasing(ts: &[f64], what: &str) -> Result<()> {
    if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QrcError::InvalidArgument(format!("{what} must be finite and strictly increasing")));
    }
    Ok(())
}

impl InputSignal {
    pub fn constant(u: Vec<f64>) -> Result<Self> {
        check_rows(std::slice::from_ref(&u))?;
        Ok(InputSignal::Constant(u))
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_increasing(&breakpoints, "breakpoints")?;
        check_rows(&values)?;
        if values.len() != breakpoints.len() + 1 {
            return Err(QrcError::InvalidArgument(format!(
                "{} breakpoints need {} segment values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        Ok(InputSignal::PiecewiseConstant { breakpoints, values })
    }

    /// Piecewise-constant signal holding `values[k]` on
    /// `[t0 + k·hold, t0 + (k+1)·hold)`.
    pub fn held_steps(t0: f64, hold: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(hold > 0.0) {
            return Err(QrcError::InvalidArgument(format!("hold time {hold}")));
        }
        let breakpoints = (1..values.len()).map(|k| t0 + k as f64 * hold).collect();
        Self::piecewise_constant(breakpoints, values)
    }

    pub fn sampled(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_increasing(&times, "sample times")?;
        check_rows(&values)?;
        if times.len() != values.len() {
            return Err(QrcError::InvalidArgument("one value per sample time required".into()));
        }
        Ok(InputSignal::Sampled { times, values })
    }

    pub fn analytic(
        dim: usize,
        value: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        derivative: Option<Curve>,
    ) -> Self {
        InputSignal::Analytic { dim, value: Arc::new(value), derivative }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::Constant(u) => u.len(),
            InputSignal::PiecewiseConstant { values, .. } | InputSignal::Sampled { values, .. } => values[0].len(),
            InputSignal::Analytic { dim, .. } => *dim,
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, InputSignal::Constant(_) | InputSignal::PiecewiseConstant { .. })
    }

    /// Times where the signal or its derivative may jump. Integrators split
    /// their step grid here.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            InputSignal::PiecewiseConstant { breakpoints, .. } => breakpoints,
            InputSignal::Sampled { times, .. } => times,
            _ => &[],
        }
    }

    /// Index of the piece containing `t`, right-continuous at breakpoints.
    pub fn segment_index(&self, t: f64) -> usize {
        self.breakpoints().partition_point(|&b| b <= t)
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        match self {
            InputSignal::Constant(u) => u.clone(),
            InputSignal::PiecewiseConstant { values, .. } => values[self.segment_index(t)].clone(),
            InputSignal::Sampled { times, values } => {
                let k = self.segment_index(t);
                if k == 0 {
                    values[0].clone()
                } else if k == times.len() {
                    values[k - 1].clone()
                } else {
                    let (ta, tb) = (times[k - 1], times[k]);
                    let w = (t - ta) / (tb - ta);
                    values[k - 1].iter().zip(&values[k]).map(|(a, b)| a + w * (b - a)).collect()
                }
            }
            InputSignal::Analytic { value, .. } => value(t),
        }
    }

    /// Value on the piece containing `probe`, evaluated at `t`. Integrators
    /// use the step midpoint as `probe` so that stages landing exactly on a
    /// breakpoint stay on the current piece.
    pub fn value_on_piece(&self, t: f64, probe: f64) -> Vec<f64> {
        match self {
            InputSignal::PiecewiseConstant { values, .. } => values[self.segment_index(probe)].clone(),
            _ => self.value(t),
        }
    }

    /// Derivative on the piece containing `probe`, evaluated at `t`.
    pub fn derivative_on_piece(&self, t: f64, probe: f64) -> Vec<f64> {
        match self {
            InputSignal::Sampled { .. } => self.derivative(probe),
            _ => self.derivative(t),
        }
    }

    /// `du/dt` away from breakpoints. Piecewise-constant signals have zero
    /// derivative by convention. Analytic signals without a supplied
    /// derivative use a central difference.
    pub fn derivative(&self, t: f64) -> Vec<f64> {
        match self {
            InputSignal::Constant(u) => vec![0.0; u.len()],
            InputSignal::PiecewiseConstant { values, .. } => vec![0.0; values[0].len()],
            InputSignal::Sampled { times, values } => {
                let k = self.segment_index(t);
                if k == 0 || k == times.len() {
                    vec![0.0; values[0].len()]
                } else {
                    let dt = times[k] - times[k - 1];
                    values[k - 1].iter().zip(&values[k]).map(|(a, b)| (b - a) / dt).collect()
                }
            }
            InputSignal::Analytic { value, derivative, .. } => match derivative {
                Some(d) => d(t),
                None => {
                    let h = 1e-5 * t.abs().max(1.0);
                    value(t + h).iter().zip(value(t - h)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
                }
            },
        }
    }
}

/// Sorted, de-duplicated knots: `t0`, `t1` and every interior extra time.
pub(crate) fn knots(t0: f64, t1: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut ts = vec![t0, t1];
    ts.extend(extra.into_iter().filter(|&t| t > t0 && t < t1));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_constant_is_right_continuous() {
        let s = InputSignal::piecewise_constant(vec![1.0, 2.0], vec![vec![0.1], vec![0.5], vec![0.9]]).unwrap();
        assert_eq!(s.value(0.0), vec![0.1]);
        assert_eq!(s.value(1.0), vec![0.5]);
        assert_eq!(s.value(1.999), vec![0.5]);
        assert_eq!(s.value(5.0), vec![0.9]);
        assert_eq!(s.value_on_piece(2.0, 1.5), vec![0.5]);
        assert_eq!(s.derivative(1.5), vec![0.0]);
    }

    #[test]
    fn rejects_bad_signals() {
        assert!(InputSignal::piecewise_constant(vec![1.0, 1.0], vec![vec![0.0]; 3]).is_err());
        assert!(InputSignal::piecewise_constant(vec![1.0], vec![vec![0.0]]).is_err());
        assert!(InputSignal::piecewise_constant(vec![1.0], vec![vec![0.0], vec![f64::NAN]]).is_err());
        assert!(InputSignal::sampled(vec![0.0, 1.0], vec![vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn sampled_interpolates_linearly() {
        let s = InputSignal::sampled(vec![0.0, 2.0], vec![vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(s.value(0.5), vec![0.25, 1.0]);
        assert_eq!(s.derivative(1.0), vec![0.5, 0.0]);
        assert_eq!(s.value(3.0), vec![1.0, 1.0]);
    }

    #[test]
    fn analytic_finite_difference_derivative() {
        let s = InputSignal::analytic(1, |t| vec![t.sin()], None);
        assert!((s.derivative(0.3)[0] - 0.3f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn knots_merge_and_clip() {
        assert_eq!(knots(0.0, 2.0, [1.0, 1.0, 3.0, 0.5, 0.0]), vec![0.0, 0.5, 1.0, 2.0]);
    }
}
