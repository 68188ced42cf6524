//! First-order Magnus term `Ω₁ = ∫ M(u(s)) ds` of a time-ordered
//! exponential.

use super::signal::{knots, InputSignal};
use crate::error::{QrcError, Result};
use crate::operator::{c, matrix_exp, CMat};

/// Composite Simpson quadrature of `M(u(s))` over `t_span`, applied
/// separately on every smooth piece of the signal with `intervals` (rounded
/// up to even) subintervals per piece.
pub fn magnus_first_order<F>(m: F, signal: &InputSignal, t_span: (f64, f64), intervals: usize) -> Result<CMat>
where
    F: Fn(&[f64]) -> CMat,
{
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(QrcError::InvalidArgument(format!("time span [{t0}, {t1}]")));
    }
    let n = (intervals.max(2) + 1) / 2 * 2;
    let ks = knots(t0, t1, signal.breakpoints().iter().copied());
    let mut total: Option<CMat> = None;
    for w in ks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let probe = 0.5 * (a + b);
        let h = (b - a) / n as f64;
        for k in 0..=n {
            let weight = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let t = if k == n { b } else { a + k as f64 * h };
            let term = m(&signal.value_on_piece(t, probe)) * c(weight * h / 3.0);
            total = Some(match total {
                Some(acc) => acc + term,
                None => term,
            });
        }
    }
    match total {
        Some(t) => Ok(t),
        None => {
            let zero = m(&signal.value(t0));
            Ok(CMat::zeros(zero.nrows(), zero.ncols()))
        }
    }
}

/// Exact time-ordered exponential for a piecewise-constant signal: the
/// product of per-piece exponentials, later pieces on the left.
pub fn ordered_exponential_pwc<F>(m: F, signal: &InputSignal, t_span: (f64, f64)) -> Result<CMat>
where
    F: Fn(&[f64]) -> CMat,
{
    if !signal.is_piecewise_constant() {
        return Err(QrcError::InvalidArgument("exact ordered exponential needs a piecewise-constant signal".into()));
    }
    let (t0, t1) = t_span;
    let ks = knots(t0, t1, signal.breakpoints().iter().copied());
    let d = m(&signal.value(t0)).nrows();
    let mut prop = CMat::identity(d, d);
    for w in ks.windows(2) {
        let gen = m(&signal.value_on_piece(w[0], 0.5 * (w[0] + w[1])));
        prop = matrix_exp(&(gen * c(w[1] - w[0]))) * prop;
    }
    Ok(prop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Pauli, I};

    #[test]
    fn constant_generator_integrates_exactly() {
        let a = Pauli::X.matrix() * (-I);
        let s = InputSignal::Constant(vec![1.0]);
        let p = magnus_first_order(|u| &a * c(u[0]), &s, (0.0, 2.5), 4).unwrap();
        assert!((p - &a * c(2.5)).camax() < 1e-14);
    }

    #[test]
    fn commuting_family_is_exact_up_to_quadrature() {
        // M(t) = m(t)·A with m(t) = cos t: exp(Ω₁) = exp(sin(T)·A).
        let a = Pauli::Y.matrix() * (-I);
        let s = InputSignal::analytic(1, |t| vec![t.cos()], None);
        let t = 1.2;
        let p = magnus_first_order(|u| &a * c(u[0]), &s, (0.0, t), 200).unwrap();
        let exact = matrix_exp(&(&a * c(t.sin())));
        assert!((matrix_exp(&p) - exact).camax() < 1e-10);
    }

    #[test]
    fn pieces_are_integrated_separately() {
        let s = InputSignal::piecewise_constant(vec![0.3], vec![vec![1.0], vec![-2.0]]).unwrap();
        let a = Pauli::Z.matrix();
        let p = magnus_first_order(|u| &a * c(u[0]), &s, (0.0, 1.0), 2).unwrap();
        assert!((p - &a * c(0.3 - 2.0 * 0.7)).camax() < 1e-14);
        let exact = ordered_exponential_pwc(|u| &a * (-I * c(u[0])), &s, (0.0, 1.0)).unwrap();
        assert!((exact - matrix_exp(&(&a * (-I * c(-1.1))))).camax() < 1e-14);
    }
}
