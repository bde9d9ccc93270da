//! Numerical check that cross-entropy training with one-hot contexts
//! recovers the empirical conditional frequencies.

use collapse_core::softmax::{
    ce_gradient, ce_loss, empirical_conditional, max_row_l1, train_softmax, SoftmaxError,
    TokenDataset, WeightMatrix,
};
use serde::Serialize;

pub const ROW_TOLERANCE: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-5;
pub const FD_STEP: f64 = 1e-6;
pub const GRAD_TOLERANCE: f64 = 1e-8;

/// Four contexts, five tokens, every count positive.
pub fn reference_dataset() -> TokenDataset {
    TokenDataset::from_rows(&[
        vec![5, 1, 2, 7, 3],
        vec![1, 1, 1, 1, 12],
        vec![9, 4, 2, 2, 1],
        vec![3, 3, 6, 2, 4],
    ])
    .expect("rectangular")
}

/// Fixed non-stationary point for the finite-difference comparison.
pub fn probe_weights(contexts: usize, tokens: usize) -> WeightMatrix {
    let rows: Vec<Vec<f64>> = (0..contexts)
        .map(|j| {
            (0..tokens)
                .map(|k| ((j * tokens + k) as f64 * 0.7).sin() * 1.5)
                .collect()
        })
        .collect();
    WeightMatrix::from_rows(&rows).expect("finite")
}

#[derive(Debug, Clone, Serialize)]
pub struct SoftmaxReport {
    pub contexts: usize,
    pub tokens: usize,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_loss: f64,
    pub row_l1_gaps: Vec<f64>,
    pub max_row_l1_gap: f64,
    pub fd_max_rel_error: f64,
    pub stationary: bool,
    pub rows_match: bool,
    pub gradient_matches: bool,
}

impl SoftmaxReport {
    pub fn passed(&self) -> bool {
        self.stationary && self.rows_match && self.gradient_matches
    }
}

/// Largest entrywise gap between the analytic gradient and central
/// differences, relative to the largest gradient entry.
pub fn finite_difference_error(w: &WeightMatrix, data: &TokenDataset, h: f64) -> Result<f64, SoftmaxError> {
    let grad = ce_gradient(w, data)?;
    let (rows, cols) = w.shape();
    let mut worst = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            let mut up = w.clone();
            up.set(r, c, w.get(r, c) + h);
            let mut down = w.clone();
            down.set(r, c, w.get(r, c) - h);
            let fd = (ce_loss(&up, data)? - ce_loss(&down, data)?) / (2.0 * h);
            worst = worst.max((fd - grad.get(r, c)).abs());
        }
    }
    Ok(worst / grad.max_abs())
}

pub fn run_check(data: &TokenDataset, learning_rate: f64, max_iters: usize) -> Result<SoftmaxReport, SoftmaxError> {
    let target = empirical_conditional(data)?;
    let (weights, iterations, grad_norm) = match train_softmax(data, learning_rate, max_iters, GRAD_TOLERANCE) {
        Ok(t) => (t.weights, t.iterations, t.grad_norm),
        Err(SoftmaxError::NonConvergence {
            iterations,
            grad_norm,
            weights,
        }) => (weights, iterations, grad_norm),
        Err(e) => return Err(e),
    };
    let rows = weights.softmax_rows();
    let row_l1_gaps: Vec<f64> = rows
        .iter()
        .zip(&target)
        .map(|(a, b)| max_row_l1(std::slice::from_ref(a), std::slice::from_ref(b)))
        .collect();
    let max_row_l1_gap = max_row_l1(&rows, &target);
    let fd = finite_difference_error(&probe_weights(data.contexts(), data.tokens()), data, FD_STEP)?;
    Ok(SoftmaxReport {
        contexts: data.contexts(),
        tokens: data.tokens(),
        iterations,
        final_grad_norm: grad_norm,
        final_loss: ce_loss(&weights, data)?,
        row_l1_gaps,
        max_row_l1_gap,
        fd_max_rel_error: fd,
        stationary: grad_norm < GRAD_TOLERANCE,
        rows_match: max_row_l1_gap < ROW_TOLERANCE,
        gradient_matches: fd < FD_TOLERANCE,
    })
}
