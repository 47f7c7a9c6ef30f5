//! L2-regularised multinomial logistic regression on sparse rows, fitted by
//! L-BFGS with a backtracking (Armijo) line search.

use serde::{Deserialize, Serialize};

/// Sparse row: `(column, value)` pairs sorted by column.
pub type SparseRow = Vec<(u32, f64)>;

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Penalty `lambda / 2 * ||W||^2`; biases are not penalised.
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the objective improves by less than this (relative to
    /// `max(1, |f|)`).
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_iter: 500,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// Class-major `n_classes x n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after each accepted iteration, starting at the zero model.
    pub objective_trace: Vec<f64>,
}

impl LogisticModel {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Self {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
            converged: true,
            iterations: 0,
            objective_trace: Vec::new(),
        }
    }

    pub fn fit(rows: &[SparseRow], labels: &[usize], n_classes: usize, n_features: usize, cfg: &LogisticConfig) -> Self {
        let problem = Problem {
            rows,
            labels,
            c: n_classes,
            d: n_features,
            lambda: cfg.lambda,
        };
        let mut theta = vec![0.0; n_classes * (n_features + 1)];
        let (converged, iterations, trace) = lbfgs(&problem, &mut theta, cfg);
        let bias = theta.split_off(n_classes * n_features);
        Self {
            n_classes,
            n_features,
            weights: theta,
            bias,
            converged,
            iterations,
            objective_trace: trace,
        }
    }

    pub fn decision(&self, row: &SparseRow) -> Vec<f64> {
        scores(&self.weights, &self.bias, self.n_features, row)
    }

    /// Softmax class probabilities.
    pub fn predict_proba(&self, row: &SparseRow) -> Vec<f64> {
        softmax(&self.decision(row))
    }

    pub fn heap_bytes(&self) -> usize {
        (self.weights.capacity() + self.bias.capacity() + self.objective_trace.capacity()) * 8
    }
}

fn scores(weights: &[f64], bias: &[f64], d: usize, row: &SparseRow) -> Vec<f64> {
    bias.iter()
        .enumerate()
        .map(|(c, &b)| {
            let w = &weights[c * d..(c + 1) * d];
            b + row.iter().map(|&(j, x)| w[j as usize] * x).sum::<f64>()
        })
        .collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

struct Problem<'a> {
    rows: &'a [SparseRow],
    labels: &'a [usize],
    c: usize,
    d: usize,
    lambda: f64,
}

impl Problem<'_> {
    /// Objective and gradient at `theta` (weights then biases).
    fn evaluate(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (w, b) = theta.split_at(self.c * self.d);
        let (gw, gb) = grad.split_at_mut(self.c * self.d);
        let mut f = 0.0;
        for (k, &v) in w.iter().enumerate() {
            f += 0.5 * self.lambda * v * v;
            gw[k] = self.lambda * v;
        }
        gb.iter_mut().for_each(|g| *g = 0.0);
        for (row, &y) in self.rows.iter().zip(self.labels) {
            let z = scores(w, b, self.d, row);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            f += lse - z[y];
            for c in 0..self.c {
                let r = (z[c] - lse).exp() - if c == y { 1.0 } else { 0.0 };
                gb[c] += r;
                let g = &mut gw[c * self.d..(c + 1) * self.d];
                for &(j, x) in row {
                    g[j as usize] += r * x;
                }
            }
        }
        f
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns `(converged, iterations, objective trace)`. Every accepted step
/// satisfies the Armijo condition, so the trace is non-increasing.
fn lbfgs(problem: &Problem, theta: &mut [f64], cfg: &LogisticConfig) -> (bool, usize, Vec<f64>) {
    let n = theta.len();
    let mut grad = vec![0.0; n];
    let mut f = problem.evaluate(theta, &mut grad);
    let mut trace = vec![f];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut new_theta = vec![0.0; n];
    let mut new_grad = vec![0.0; n];

    for iter in 0..cfg.max_iter {
        if dot(&grad, &grad).sqrt() <= 1e-10 {
            return (true, iter, trace);
        }
        let mut dir = two_loop(&grad, &s_hist, &y_hist);
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        let mut step = if s_hist.is_empty() {
            1.0 / dot(&grad, &grad).sqrt().max(1.0)
        } else {
            1.0
        };
        let new_f = loop {
            for k in 0..n {
                new_theta[k] = theta[k] + step * dir[k];
            }
            let candidate = problem.evaluate(&new_theta, &mut new_grad);
            if candidate <= f + ARMIJO * step * slope {
                break Some(candidate);
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some(new_f) = new_f else {
            return (false, iter, trace);
        };

        let s: Vec<f64> = new_theta.iter().zip(theta.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        theta.copy_from_slice(&new_theta);
        grad.copy_from_slice(&new_grad);
        let improvement = f - new_f;
        f = new_f;
        trace.push(f);
        if improvement < cfg.tolerance * f.abs().max(1.0) {
            return (true, iter + 1, trace);
        }
    }
    (false, cfg.max_iter, trace)
}

fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let k = s_hist.len();
    let mut alpha = vec![0.0; k];
    for i in (0..k).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alpha[i] = rho * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alpha[i] * yj;
        }
    }
    if k > 0 {
        let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..k {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alpha[i] - beta) * sj;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
