use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QrcError, Result};

/// Default ridge strength, relative to the squared largest singular value
/// of the centered training features.
pub const DEFAULT_LAMBDA: f64 = 1e-8;

const TRAIN_FRACTION: f64 = 0.8;

/// Trained linear readout `y ≈ bias + Σ_k w_k x_{columns[k]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// Node columns kept after dropping constant ones.
    pub columns: Vec<usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    /// Rows used for training; the remainder is the test split.
    pub train_rows: usize,
    pub train_nmse: f64,
    pub test_nmse: f64,
}

impl ReadoutModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.bias + self.columns.iter().zip(&self.weights).map(|(&k, w)| w * row[k]).sum::<f64>()
    }

    pub fn predict_rows(&self, nodes: &DMatrix<f64>) -> Vec<f64> {
        (0..nodes.nrows())
            .map(|i| self.bias + self.columns.iter().zip(&self.weights).map(|(&k, w)| w * nodes[(i, k)]).sum::<f64>())
            .collect()
    }
}

fn variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Mean squared error divided by the variance of `target`.
pub fn nmse(prediction: &[f64], target: &[f64]) -> f64 {
    let mse = prediction.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / target.len() as f64;
    mse / variance(target)
}

/// Ridge regression of `targets` on the node columns.
///
/// The first 80% of rows train the model and the last 20% test it. Features
/// are centered on the training split so the bias is not regularized;
/// columns that are constant on the training split are dropped. The ridge
/// term is `lambda · σ_max²` with `σ_max` the largest singular value of the
/// centered training features, and the solve goes through an SVD. Both NMSE
/// values are normalized by the variance of the whole target sequence.
pub fn train_readout(nodes: &DMatrix<f64>, targets: &[f64], lambda: f64) -> Result<ReadoutModel> {
    let n = nodes.nrows();
    if targets.len() != n {
        return Err(QrcError::DimensionMismatch(format!("{n} node rows but {} targets", targets.len())));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(QrcError::InvalidArgument(format!("ridge strength {lambda}")));
    }
    let n_train = (TRAIN_FRACTION * n as f64).floor() as usize;
    if n_train < 2 || n_train == n {
        return Err(QrcError::InvalidArgument(format!("{n} rows are too few for a train/test split")));
    }
    let target_var = variance(targets);
    if !(target_var > 0.0) {
        return Err(QrcError::Degenerate("targets have zero variance".into()));
    }
    let train = nodes.rows(0, n_train);
    let mut columns = Vec::new();
    for k in 0..nodes.ncols() {
        let col: Vec<f64> = train.column(k).iter().copied().collect();
        let scale = col.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if variance(&col).sqrt() > 1e-12 * scale {
            columns.push(k);
        } else {
            log::warn!("dropping constant node column {k}");
        }
    }
    let y_train = &targets[..n_train];
    let y_mean = y_train.iter().sum::<f64>() / n_train as f64;
    let means: Vec<f64> = columns.iter().map(|&k| train.column(k).mean()).collect();
    let (weights, bias) = if columns.is_empty() {
        (Vec::new(), y_mean)
    } else {
        let x = DMatrix::from_fn(n_train, columns.len(), |i, j| train[(i, columns[j])] - means[j]);
        let yc = DVector::from_iterator(n_train, y_train.iter().map(|v| v - y_mean));
        let svd = x.svd(true, true);
        let (u, vt) = (svd.u.expect("left vectors requested"), svd.v_t.expect("right vectors requested"));
        let s_max = svd.singular_values.max();
        let reg = lambda * s_max * s_max;
        let uty = u.transpose() * yc;
        let scaled = DVector::from_fn(uty.len(), |i, _| {
            let s = svd.singular_values[i];
            s / (s * s + reg) * uty[i]
        });
        let w = vt.transpose() * scaled;
        let bias = y_mean - w.iter().zip(&means).map(|(a, m)| a * m).sum::<f64>();
        (w.iter().copied().collect(), bias)
    };
    if !(bias.is_finite() && weights.iter().all(|w| w.is_finite())) {
        return Err(QrcError::Degenerate("readout weights are not finite".into()));
    }
    let mut model =
        ReadoutModel { columns, weights, bias, lambda, train_rows: n_train, train_nmse: 0.0, test_nmse: 0.0 };
    let pred = model.predict_rows(nodes);
    let mse = |a: usize, b: usize| {
        pred[a..b].iter().zip(&targets[a..b]).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / (b - a) as f64
    };
    model.train_nmse = mse(0, n_train) / target_var;
    model.test_nmse = mse(n_train, n) / target_var;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_nodes(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_regression() {
        let x = random_nodes(200, 4, 1);
        let y: Vec<f64> = x.column(2).iter().copied().collect();
        let m = train_readout(&x, &y, 1e-12).unwrap();
        assert!((m.weights[2] - 1.0).abs() < 1e-8);
        assert!(m.train_nmse <= 1e-10 && m.test_nmse <= 1e-10);
    }

    #[test]
    fn unrelated_targets_give_unit_nmse() {
        let x = random_nodes(2000, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let y: Vec<f64> = (0..2000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = train_readout(&x, &y, DEFAULT_LAMBDA).unwrap();
        assert!((m.test_nmse - 1.0).abs() < 0.1, "{}", m.test_nmse);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let mut x = random_nodes(50, 3, 3);
        x.column_mut(0).fill(1.0);
        let y: Vec<f64> = x.column(1).iter().map(|v| 2.0 * v + 0.5).collect();
        let m = train_readout(&x, &y, 1e-12).unwrap();
        assert_eq!(m.columns, vec![1, 2]);
        assert!((m.bias - 0.5).abs() < 1e-8 && (m.weights[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_inputs() {
        let x = random_nodes(20, 2, 4);
        assert!(train_readout(&x, &[1.0; 20], 1e-8).is_err());
        assert!(train_readout(&x, &[1.0; 19], 1e-8).is_err());
        assert!(train_readout(&x, &vec![0.0; 20], 0.0).is_err());
    }

    #[test]
    fn train_error_grows_with_lambda() {
        let x = random_nodes(300, 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y: Vec<f64> = (0..300).map(|i| x[(i, 0)] - 0.5 * x[(i, 3)] + 0.3 * rng.random_range(-1.0..1.0)).collect();
        let errs: Vec<f64> = [1e-10, 1e-6, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
            .iter()
            .map(|&l| train_readout(&x, &y, l).unwrap().train_nmse)
            .collect();
        assert!(errs.windows(2).all(|w| w[1] >= w[0] - 1e-14), "{errs:?}");
    }

    proptest! {
        #[test]
        fn residuals_invariant_under_affine_recombination(seed in 0u64..1000) {
            let x = random_nodes(120, 3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let y: Vec<f64> = (0..120).map(|i| x[(i, 0)].sin() + x[(i, 1)] * x[(i, 2)] + 0.1 * rng.random_range(-1.0..1.0)).collect();
            let a = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { rng.random_range(-0.5..0.5) });
            let shift = nalgebra::RowDVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let mut z = &x * a;
            for mut row in z.row_iter_mut() {
                row += &shift;
            }
            let m1 = train_readout(&x, &y, 1e-14).unwrap();
            let m2 = train_readout(&z, &y, 1e-14).unwrap();
            let (p1, p2) = (m1.predict_rows(&x), m2.predict_rows(&z));
            for (a, b) in p1.iter().zip(&p2) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
