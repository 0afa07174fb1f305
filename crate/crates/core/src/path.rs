//! Discretised paths and the left-Riemann attribution integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Differentiable;
use crate::samp::momentum_update;
use crate::tensor::Tensor;

/// Tolerance for the telescoping check `start + Σ steps == end`.
pub const TELESCOPE_TOLERANCE: f64 = 1e-9;

/// Ordered step vectors `dx^1 … dx^n` from `start` to `end`.
///
/// The `k`-th visited point is `x^k = x^{k−1} + dx^k` with `x^0 = start`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegments {
    start: Tensor,
    end: Tensor,
    steps: Vec<Tensor>,
}

impl PathSegments {
    /// Builds a path and checks that every step matches the start shape and
    /// that the steps telescope to `end`.
    pub fn new(start: Tensor, end: Tensor, steps: Vec<Tensor>) -> Result<Self> {
        start.ensure_same_shape(&end)?;
        for step in &steps {
            start.ensure_same_shape(step)?;
        }
        let path = Self { start, end, steps };
        let gap = path.telescoping_error();
        if gap > TELESCOPE_TOLERANCE {
            return Err(Error::Input(format!(
                "steps do not telescope from start to end (max error {gap:e})"
            )));
        }
        Ok(path)
    }

    pub fn start(&self) -> &Tensor {
        &self.start
    }

    pub fn end(&self) -> &Tensor {
        &self.end
    }

    pub fn steps(&self) -> &[Tensor] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Visited points `x^0 = start, x^1, …, x^n`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut x = self.start.data().to_vec();
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(x.clone());
        for step in &self.steps {
            for (xi, di) in x.iter_mut().zip(step.data()) {
                *xi += di;
            }
            out.push(x.clone());
        }
        out
    }

    /// `max_i |start_i + Σ_k dx^k_i − end_i|`.
    pub fn telescoping_error(&self) -> f64 {
        let mut total = self.start.data().to_vec();
        for step in &self.steps {
            for (t, d) in total.iter_mut().zip(step.data()) {
                *t += d;
            }
        }
        total
            .iter()
            .zip(self.end.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Index sets touched by each step (coordinates with a non-zero entry).
    pub fn touched_indices(&self) -> Vec<Vec<usize>> {
        self.steps
            .iter()
            .map(|s| {
                s.data()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }

    /// Checks manipulation-path structure: step `k` sets exactly
    /// `min(s, remaining)` coordinates to their end values, the touched sets
    /// are disjoint, and together they cover every coordinate where start
    /// and end differ.
    pub fn check_manipulation_path(&self, s: usize) -> Result<()> {
        let d = self.start.len();
        let mut done = vec![false; d];
        let mut x = self.start.data().to_vec();
        let initially_open: Vec<bool> = self
            .start
            .data()
            .iter()
            .zip(self.end.data())
            .map(|(a, b)| a != b)
            .collect();
        let mut remaining = initially_open.iter().filter(|&&o| o).count();
        for (k, step) in self.steps.iter().enumerate() {
            let touched: Vec<usize> = (0..d).filter(|&i| step.data()[i] != 0.0).collect();
            let expected = s.min(remaining);
            if touched.len() != expected {
                return Err(Error::Input(format!(
                    "step {k} touches {} coordinates, expected {expected}",
                    touched.len()
                )));
            }
            for &i in &touched {
                if done[i] || !initially_open[i] {
                    return Err(Error::Input(format!(
                        "step {k} touches coordinate {i} which was already complete"
                    )));
                }
                x[i] += step.data()[i];
                let residual = (self.end.data()[i] - x[i]).abs();
                if residual > TELESCOPE_TOLERANCE {
                    return Err(Error::Input(format!(
                        "step {k} leaves coordinate {i} short of its end value by {residual:e}"
                    )));
                }
                done[i] = true;
            }
            remaining -= touched.len();
        }
        if remaining != 0 {
            return Err(Error::Input(format!(
                "{remaining} coordinates never reached their end value"
            )));
        }
        Ok(())
    }
}

/// `n` equal steps `(xT − x0)/n` on the straight line from `x0` to `xT`.
pub fn straight_line_path(x0: &Tensor, x_t: &Tensor, n: usize) -> Result<PathSegments> {
    x0.ensure_same_shape(x_t)?;
    if n == 0 {
        return Err(Error::Input("a straight-line path needs n >= 1".into()));
    }
    let step = x_t.sub(x0)?.scale(1.0 / n as f64)?;
    PathSegments::new(x0.clone(), x_t.clone(), vec![step; n])
}

/// Per-feature attribution with its total output change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub values: Tensor,
    /// `Δy = f(end) − f(start)`.
    pub delta_y: f64,
    /// `Var(a)`, see [`variance_objective`].
    pub variance: f64,
    /// `|Σ a_i − Δy|`.
    pub completeness_gap: f64,
}

impl Attribution {
    pub fn new(values: Tensor, delta_y: f64) -> Self {
        let variance = variance_of(values.data());
        let completeness_gap = (values.sum() - delta_y).abs();
        Self {
            values,
            delta_y,
            variance,
            completeness_gap,
        }
    }

    /// `|Σ a − Δy| / max(|Δy|, 1e-12)`.
    pub fn relative_gap(&self) -> f64 {
        self.completeness_gap / self.delta_y.abs().max(1e-12)
    }
}

fn variance_of(values: &[f64]) -> f64 {
    let d = values.len() as f64;
    let mean = values.iter().sum::<f64>() / d;
    values.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / d
}

/// Concentration objective `(1/d) Σ_i (a_i − mean(a))²`.
pub fn variance_objective(attribution: &Attribution) -> f64 {
    variance_of(attribution.values.data())
}

/// Left-Riemann line integral of the gradient along `path`.
///
/// Step `k` is weighted by the gradient at the point before the move,
/// `∇f(x^{k−1})`. With `momentum = Some(λ)` the weight is the smoothed
/// gradient `g^k = λ g^{k−1} + (1 − λ) ∇f(x^{k−1})`, `g^0 = ∇f(start)`.
pub fn integrate_path<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    path: &PathSegments,
    momentum: Option<f64>,
) -> Result<Attribution> {
    if let Some(lambda) = momentum {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Input(format!("momentum must lie in [0, 1), got {lambda}")));
        }
    }
    model.check_input(&path.start, class)?;
    let mut acc = vec![0.0; path.start.len()];
    let mut x = path.start.clone();
    let mut smoothed: Option<Tensor> = None;
    for step in &path.steps {
        let grad = model.gradient(&x, class)?;
        let g = match momentum {
            Some(lambda) => {
                let prev = smoothed.take().unwrap_or_else(|| grad.clone());
                momentum_update(&prev, &grad, lambda)?
            }
            None => grad,
        };
        for ((a, gi), di) in acc.iter_mut().zip(g.data()).zip(step.data()) {
            *a += gi * di;
        }
        if momentum.is_some() {
            smoothed = Some(g);
        }
        x = x.add(step)?;
    }
    let delta_y = model.forward(&path.end, class)? - model.forward(&path.start, class)?;
    Ok(Attribution::new(path.start.with_data(acc)?, delta_y))
}
