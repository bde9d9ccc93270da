//! Cross-entropy training with one-hot contexts.
//!
//! With one-hot context vectors the logits for context `j` are just row `j`
//! of `W`, so every quantity here is computed row by row.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoftmaxError {
    #[error("context {context} has no samples")]
    EmptyContext { context: usize },
    #[error("shape mismatch: weights are {weights:?}, data is {data:?}")]
    ShapeMismatch {
        weights: (usize, usize),
        data: (usize, usize),
    },
    #[error("pair ({context}, {token}) out of range for {contexts}x{tokens}")]
    IndexOutOfRange {
        context: usize,
        token: usize,
        contexts: usize,
        tokens: usize,
    },
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("weights contain a non-finite entry")]
    NonFinite,
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        weights: WeightMatrix,
    },
}

/// `c x s` count matrix of (context, next token) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenDataset {
    contexts: usize,
    tokens: usize,
    counts: Vec<u64>,
}

impl TokenDataset {
    pub fn from_counts(contexts: usize, tokens: usize, counts: Vec<u64>) -> Result<Self, SoftmaxError> {
        if counts.len() != contexts * tokens {
            return Err(SoftmaxError::ShapeMismatch {
                weights: (contexts, tokens),
                data: (counts.len(), 1),
            });
        }
        Ok(Self {
            contexts,
            tokens,
            counts,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, SoftmaxError> {
        let tokens = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != tokens) {
            return Err(SoftmaxError::ShapeMismatch {
                weights: (rows.len(), tokens),
                data: (rows.len(), bad.len()),
            });
        }
        Self::from_counts(rows.len(), tokens, rows.concat())
    }

    pub fn from_pairs(
        contexts: usize,
        tokens: usize,
        pairs: &[(usize, usize)],
    ) -> Result<Self, SoftmaxError> {
        let mut counts = vec![0u64; contexts * tokens];
        for &(context, token) in pairs {
            if context >= contexts || token >= tokens {
                return Err(SoftmaxError::IndexOutOfRange {
                    context,
                    token,
                    contexts,
                    tokens,
                });
            }
            counts[context * tokens + token] += 1;
        }
        Ok(Self {
            contexts,
            tokens,
            counts,
        })
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn row(&self, context: usize) -> &[u64] {
        &self.counts[context * self.tokens..(context + 1) * self.tokens]
    }

    pub fn row_total(&self, context: usize) -> u64 {
        self.row(context).iter().sum()
    }

    /// Number of samples `M`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Row-major `c x s` matrix of logits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SoftmaxError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(SoftmaxError::ShapeMismatch {
                weights: (rows.len(), cols),
                data: (rows.len(), bad.len()),
            });
        }
        let values = rows.concat();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SoftmaxError::NonFinite);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Softmax of every row.
    pub fn softmax_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| softmax(self.row(r))).collect()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

fn check_shape(w: &WeightMatrix, data: &TokenDataset) -> Result<(), SoftmaxError> {
    if w.shape() != (data.contexts, data.tokens) {
        return Err(SoftmaxError::ShapeMismatch {
            weights: w.shape(),
            data: (data.contexts, data.tokens),
        });
    }
    Ok(())
}

/// `count(j, .) / |C_j|` for every context; every context must be observed.
pub fn empirical_conditional(data: &TokenDataset) -> Result<Vec<Vec<f64>>, SoftmaxError> {
    (0..data.contexts)
        .map(|j| {
            let total = data.row_total(j);
            if total == 0 {
                return Err(SoftmaxError::EmptyContext { context: j });
            }
            Ok(data.row(j).iter().map(|&c| c as f64 / total as f64).collect())
        })
        .collect()
}

/// Mean negative log-likelihood over all samples.
pub fn ce_loss(w: &WeightMatrix, data: &TokenDataset) -> Result<f64, SoftmaxError> {
    check_shape(w, data)?;
    let m = data.total();
    if m == 0 {
        return Err(SoftmaxError::EmptyDataset);
    }
    let mut loss = 0.0;
    for j in 0..data.contexts {
        let logp = log_softmax(w.row(j));
        for (&c, lp) in data.row(j).iter().zip(logp) {
            if c > 0 {
                loss -= c as f64 * lp;
            }
        }
    }
    Ok((loss / m as f64).max(0.0))
}

/// `dL/dW[j][k] = (n_j / M) (softmax(W_j)_k - count(j, k) / n_j)`.
pub fn ce_gradient(w: &WeightMatrix, data: &TokenDataset) -> Result<WeightMatrix, SoftmaxError> {
    check_shape(w, data)?;
    let m = data.total();
    if m == 0 {
        return Err(SoftmaxError::EmptyDataset);
    }
    let m = m as f64;
    let mut grad = WeightMatrix::zeros(data.contexts, data.tokens);
    for j in 0..data.contexts {
        let n_j = data.row_total(j) as f64;
        if n_j == 0.0 {
            continue;
        }
        let p = softmax(w.row(j));
        for (k, (&c, pk)) in data.row(j).iter().zip(p).enumerate() {
            grad.set(j, k, (n_j * pk - c as f64) / m);
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trained {
    pub weights: WeightMatrix,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Full-batch gradient descent from `W = 0` until the sup norm of the
/// gradient drops below `tol`.
pub fn train_softmax(
    data: &TokenDataset,
    learning_rate: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Trained, SoftmaxError> {
    train_softmax_from(
        WeightMatrix::zeros(data.contexts, data.tokens),
        data,
        learning_rate,
        max_iters,
        tol,
    )
}

pub fn train_softmax_from(
    mut w: WeightMatrix,
    data: &TokenDataset,
    learning_rate: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Trained, SoftmaxError> {
    if !(learning_rate > 0.0) || !learning_rate.is_finite() {
        return Err(SoftmaxError::InvalidLearningRate(learning_rate));
    }
    let mut iterations = 0;
    loop {
        let grad = ce_gradient(&w, data)?;
        let grad_norm = grad.max_abs();
        if grad_norm < tol {
            return Ok(Trained {
                weights: w,
                iterations,
                grad_norm,
            });
        }
        if iterations == max_iters {
            return Err(SoftmaxError::NonConvergence {
                iterations,
                grad_norm,
                weights: w,
            });
        }
        for (v, g) in w.values.iter_mut().zip(&grad.values) {
            *v -= learning_rate * g;
        }
        iterations += 1;
    }
}

/// Largest row-wise L1 distance between two row-stochastic matrices.
pub fn max_row_l1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_rows() {
        let d = TokenDataset::from_rows(&[vec![3, 1, 0]]).unwrap();
        assert_eq!(empirical_conditional(&d).unwrap(), vec![vec![0.75, 0.25, 0.0]]);
        let d = TokenDataset::from_pairs(2, 3, &[(1, 2)]).unwrap();
        assert!(matches!(
            empirical_conditional(&d),
            Err(SoftmaxError::EmptyContext { context: 0 })
        ));
        let d = TokenDataset::from_pairs(2, 3, &[(1, 2), (0, 0)]).unwrap();
        assert_eq!(empirical_conditional(&d).unwrap()[1], vec![0.0, 0.0, 1.0]);
        let d = TokenDataset::from_rows(&[vec![4, 4, 4, 4]]).unwrap();
        assert_eq!(empirical_conditional(&d).unwrap()[0], vec![0.25; 4]);
        assert!(TokenDataset::from_pairs(2, 3, &[(2, 0)]).is_err());
    }

    #[test]
    fn flat_logits_give_log_s() {
        let d = TokenDataset::from_rows(&[vec![5, 0, 2, 1], vec![0, 0, 0, 9]]).unwrap();
        let w = WeightMatrix::from_rows(&[vec![3.0; 4], vec![-1.5; 4]]).unwrap();
        assert!((ce_loss(&w, &d).unwrap() - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn saturated_logits_give_small_loss() {
        let d = TokenDataset::from_rows(&[vec![0, 7, 0]]).unwrap();
        let w = WeightMatrix::from_rows(&[vec![0.0, 60.0, 0.0]]).unwrap();
        assert!(ce_loss(&w, &d).unwrap() < 1e-20);
    }

    #[test]
    fn shape_mismatch() {
        let d = TokenDataset::from_rows(&[vec![1, 1]]).unwrap();
        let w = WeightMatrix::zeros(1, 3);
        assert!(matches!(ce_loss(&w, &d), Err(SoftmaxError::ShapeMismatch { .. })));
        assert!(matches!(ce_gradient(&w, &d), Err(SoftmaxError::ShapeMismatch { .. })));
    }

    #[test]
    fn gradient_vanishes_at_frequencies() {
        let d = TokenDataset::from_rows(&[vec![3, 1, 2], vec![1, 1, 8]]).unwrap();
        let rows: Vec<Vec<f64>> = empirical_conditional(&d)
            .unwrap()
            .into_iter()
            .map(|r| r.into_iter().map(f64::ln).collect())
            .collect();
        let w = WeightMatrix::from_rows(&rows).unwrap();
        assert!(ce_gradient(&w, &d).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn single_sample_gradient() {
        let d = TokenDataset::from_pairs(2, 3, &[(0, 1)]).unwrap();
        let w = WeightMatrix::from_rows(&[vec![0.5, -0.2, 1.0], vec![9.0, 0.0, 0.0]]).unwrap();
        let g = ce_gradient(&w, &d).unwrap();
        let p = softmax(w.row(0));
        assert_eq!(g.row(0), &[p[0], p[1] - 1.0, p[2]]);
        assert_eq!(g.row(1), &[0.0; 3]);
    }

    #[test]
    fn uniform_data_converges_immediately() {
        let d = TokenDataset::from_rows(&[vec![2, 2, 2], vec![5, 5, 5]]).unwrap();
        let t = train_softmax(&d, 0.5, 10, 1e-12).unwrap();
        assert_eq!(t.iterations, 0);
    }

    #[test]
    fn zero_count_token_is_approached() {
        let d = TokenDataset::from_rows(&[vec![3, 1, 0]]).unwrap();
        let w = match train_softmax(&d, 0.5, 200_000, 1e-8) {
            Ok(t) => t.weights,
            Err(SoftmaxError::NonConvergence { weights, .. }) => weights,
            Err(e) => panic!("{e}"),
        };
        let p = softmax(w.row(0));
        let target = [0.75, 0.25, 0.0];
        let gap = p.iter().zip(target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-4, "{p:?}");
    }

    #[test]
    fn nonconvergence_reports_norm() {
        let d = TokenDataset::from_rows(&[vec![3, 1]]).unwrap();
        match train_softmax(&d, 0.1, 3, 1e-12) {
            Err(SoftmaxError::NonConvergence {
                iterations,
                grad_norm,
                ..
            }) => {
                assert_eq!(iterations, 3);
                assert!(grad_norm > 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(train_softmax(&d, 0.0, 3, 1e-12).is_err());
    }
}
