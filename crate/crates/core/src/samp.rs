//! Greedy salient manipulation path search.
//!
//! Each iteration scores every unfinished coordinate by the projection of the
//! (optionally momentum-smoothed) gradient onto its remaining displacement,
//! `α_j = g_j (x^E_j − x^k_j)`, moves the `s` best coordinates to their end
//! values, and caps the L1 length of the move at `η`. Attribution is
//! accumulated as `a += g ⊙ dx` with `g` taken at the pre-move point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Differentiable, Negated};
use crate::path::{Attribution, PathSegments};
use crate::tensor::Tensor;

/// Relative termination tolerance used when none is configured.
pub const DEFAULT_TERMINATION_FACTOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Search from the input toward the baseline (score-decrease path).
    ToBaseline,
    /// Search from the baseline toward the input.
    ToTarget,
    /// Run both and sum the attributions.
    Both,
}

/// Upper bound on the L1 length of each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepBound {
    /// `η = ratio · ‖x^S − x^E‖₁`.
    Ratio(f64),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampConfig {
    step_pixels: usize,
    eta: StepBound,
    momentum: f64,
    direction: Direction,
    termination_epsilon: Option<f64>,
}

impl SampConfig {
    pub fn new(
        step_pixels: usize,
        eta: StepBound,
        momentum: f64,
        direction: Direction,
    ) -> Result<Self> {
        let cfg = Self {
            step_pixels,
            eta,
            momentum,
            direction,
            termination_epsilon: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Plain greedy search: unbounded steps and no momentum.
    pub fn plain(step_pixels: usize) -> Result<Self> {
        Self::new(step_pixels, StepBound::Unbounded, 0.0, Direction::ToTarget)
    }

    /// Step bound of one tenth of the path length and momentum 0.5, both
    /// directions.
    pub fn improved(step_pixels: usize) -> Result<Self> {
        Self::new(step_pixels, StepBound::Ratio(0.1), 0.5, Direction::Both)
    }

    pub fn with_termination_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.termination_epsilon = Some(epsilon);
        self.validate()?;
        Ok(self)
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_eta(mut self, eta: StepBound) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_momentum(mut self, momentum: f64) -> Result<Self> {
        self.momentum = momentum;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_pixels == 0 {
            return Err(Error::Input("step_pixels must be at least 1".into()));
        }
        if let StepBound::Ratio(r) = self.eta {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Input(format!("eta ratio must lie in (0, 1], got {r}")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Input(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if let Some(eps) = self.termination_epsilon {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::Input(format!(
                    "termination epsilon must be finite and non-negative, got {eps}"
                )));
            }
        }
        Ok(())
    }

    pub fn step_pixels(&self) -> usize {
        self.step_pixels
    }

    pub fn eta(&self) -> StepBound {
        self.eta
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn termination_epsilon(&self) -> Option<f64> {
        self.termination_epsilon
    }

    /// Absolute step bound for a path of L1 length `length`.
    pub fn eta_for(&self, length: f64) -> f64 {
        match self.eta {
            StepBound::Ratio(r) => r * length,
            StepBound::Unbounded => f64::INFINITY,
        }
    }
}

fn alpha_scores(grad: &[f64], x_k: &[f64], x_e: &[f64], finished: &[bool]) -> Vec<f64> {
    (0..grad.len())
        .map(|j| {
            if finished[j] {
                f64::NEG_INFINITY
            } else {
                grad[j] * (x_e[j] - x_k[j])
            }
        })
        .collect()
}

/// Indices of the `s` largest finite scores, ties to the lower index.
fn top_s(alpha: &[f64], s: usize) -> Vec<usize> {
    let mut open: Vec<usize> = (0..alpha.len())
        .filter(|&j| alpha[j] != f64::NEG_INFINITY)
        .collect();
    open.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
    open.truncate(s);
    open
}

fn select_with_mask(
    grad: &[f64],
    x_k: &[f64],
    x_e: &[f64],
    finished: &[bool],
    s: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let alpha = alpha_scores(grad, x_k, x_e, finished);
    let chosen = top_s(&alpha, s);
    if chosen.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut step = vec![0.0; x_k.len()];
    for &i in &chosen {
        step[i] = x_e[i] - x_k[i];
    }
    Ok((chosen, step))
}

/// One greedy selection: the `s` unfinished coordinates (`x_E ≠ x_k`) with
/// the largest `α_j = grad_j (x_E_j − x_k_j)`, and the step that moves them
/// to their end values.
pub fn samp_select(
    grad: &Tensor,
    x_k: &Tensor,
    x_e: &Tensor,
    s: usize,
) -> Result<(Vec<usize>, Tensor)> {
    grad.ensure_same_shape(x_k)?;
    x_k.ensure_same_shape(x_e)?;
    if s == 0 {
        return Err(Error::Input("s must be at least 1".into()));
    }
    let finished: Vec<bool> = x_k
        .data()
        .iter()
        .zip(x_e.data())
        .map(|(a, b)| a == b)
        .collect();
    let (chosen, step) = select_with_mask(grad.data(), x_k.data(), x_e.data(), &finished, s)?;
    Ok((chosen, x_k.with_data(step)?))
}

/// Rescales `step` to L1 length `eta` when it is longer.
pub fn apply_infinitesimal_constraint(step: &Tensor, eta: f64) -> Result<Tensor> {
    if !(eta > 0.0) {
        return Err(Error::Input(format!("eta must be positive, got {eta}")));
    }
    let norm = step.l1_norm();
    if norm > eta {
        step.scale(eta / norm)
    } else {
        Ok(step.clone())
    }
}

/// `λ g_prev + (1 − λ) grad`.
pub fn momentum_update(g_prev: &Tensor, grad: &Tensor, lambda: f64) -> Result<Tensor> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Input(format!("momentum must lie in [0, 1), got {lambda}")));
    }
    if lambda == 0.0 {
        grad.ensure_same_shape(g_prev)?;
        return Ok(grad.clone());
    }
    g_prev.zip_with(grad, |p, g| lambda * p + (1.0 - lambda) * g)
}

/// Runs the greedy path search from `x_s` to `x_e` on `model` and returns the
/// attribution together with the realised path. `cfg.direction` is ignored
/// here; see [`attribute`].
pub fn samp_attribute<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x_s: &Tensor,
    x_e: &Tensor,
    cfg: &SampConfig,
) -> Result<(Attribution, PathSegments)> {
    cfg.validate()?;
    x_s.ensure_same_shape(x_e)?;
    model.check_input(x_s, class)?;

    let d = x_s.len();
    let s = cfg.step_pixels;
    let lambda = cfg.momentum;
    let length = x_s.l1_distance(x_e);
    let eta = cfg.eta_for(length);
    let epsilon = cfg
        .termination_epsilon
        .unwrap_or(DEFAULT_TERMINATION_FACTOR * length);
    let limit = if eta.is_finite() {
        (length / eta).ceil() as usize + d + 1
    } else {
        d + 1
    };

    let end = x_e.data();
    let mut x = x_s.clone();
    let mut finished: Vec<bool> = x.data().iter().zip(end).map(|(a, b)| a == b).collect();
    let mut attribution = vec![0.0; d];
    let mut steps = Vec::new();

    let mut pending_grad = Some(model.gradient(x_s, class)?);
    let mut g = pending_grad.clone().expect("initial gradient");

    let remaining = |x: &Tensor, finished: &[bool]| -> f64 {
        x.data()
            .iter()
            .zip(end)
            .zip(finished)
            .filter(|(_, &f)| !f)
            .map(|((a, b), _)| (b - a).abs())
            .sum()
    };

    while finished.iter().any(|f| !f) {
        if remaining(&x, &finished) <= epsilon {
            // residual closes the path in one unconstrained step
            let step: Vec<f64> = x
                .data()
                .iter()
                .zip(end)
                .zip(&finished)
                .map(|((a, b), &f)| if f { 0.0 } else { b - a })
                .collect();
            let grad = match pending_grad.take() {
                Some(grad) => grad,
                None => model.gradient(&x, class)?,
            };
            g = momentum_update(&g, &grad, lambda)?;
            let step = x.with_data(step)?;
            accumulate(&mut attribution, &g, &step);
            steps.push(step);
            break;
        }
        if steps.len() >= limit {
            return Err(Error::NonTermination { limit });
        }

        let grad = match pending_grad.take() {
            Some(grad) => grad,
            None => model.gradient(&x, class)?,
        };
        g = momentum_update(&g, &grad, lambda)?;
        let (chosen, raw) = select_with_mask(g.data(), x.data(), end, &finished, s)?;
        let raw = x.with_data(raw)?;
        let norm = raw.l1_norm();
        let step = if norm > eta {
            raw.scale(eta / norm)?
        } else {
            for &i in &chosen {
                finished[i] = true;
            }
            raw
        };
        accumulate(&mut attribution, &g, &step);
        x = x.add(&step)?;
        for (i, done) in finished.iter_mut().enumerate() {
            if x.data()[i] == end[i] {
                *done = true;
            }
        }
        steps.push(step);
    }

    let delta_y = model.forward(x_e, class)? - model.forward(x_s, class)?;
    let attribution = Attribution::new(x_s.with_data(attribution)?, delta_y);
    let path = PathSegments::new(x_s.clone(), x_e.clone(), steps)?;
    Ok((attribution, path))
}

fn accumulate(attribution: &mut [f64], g: &Tensor, step: &Tensor) {
    for ((a, gi), di) in attribution.iter_mut().zip(g.data()).zip(step.data()) {
        *a += gi * di;
    }
}

/// Result of a directional run. `combined` is what downstream metrics use.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalAttribution {
    pub to_baseline: Option<(Attribution, PathSegments)>,
    pub to_target: Option<(Attribution, PathSegments)>,
    pub combined: Attribution,
}

/// Baseline-bound search: walks from `x_t` to `x0` on `−f`, so the greedy
/// step removes the features whose removal lowers the score most, and the
/// attribution sums to `f(x_t) − f(x0)` like the target-bound one.
pub fn samp_to_baseline<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x0: &Tensor,
    x_t: &Tensor,
    cfg: &SampConfig,
) -> Result<(Attribution, PathSegments)> {
    samp_attribute(&Negated(model), class, x_t, x0, cfg)
}

/// Runs both directional searches and sums their attributions. With
/// `halve`, the sum is scaled by ½ so it is comparable to a single run.
pub fn bidirectional_attribute<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x0: &Tensor,
    x_t: &Tensor,
    cfg: &SampConfig,
    halve: bool,
) -> Result<DirectionalAttribution> {
    bidirectional_attribute_split(model, class, x0, x0, x_t, cfg, halve)
}

/// Like [`bidirectional_attribute`], but the baseline-bound run ends at
/// `x0_back` and the target-bound run starts at `x0_forth`. The recorded
/// `delta_y` is the sum of the two runs' output changes (halved with
/// `halve`), which is `2·(f(x_t) − f(x0))` when both baselines coincide.
pub fn bidirectional_attribute_split<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x0_back: &Tensor,
    x0_forth: &Tensor,
    x_t: &Tensor,
    cfg: &SampConfig,
    halve: bool,
) -> Result<DirectionalAttribution> {
    if cfg.direction != Direction::Both {
        return Err(Error::Input(
            "bidirectional attribution needs direction = both".into(),
        ));
    }
    let back = samp_to_baseline(model, class, x0_back, x_t, cfg)?;
    let forth = samp_attribute(model, class, x0_forth, x_t, cfg)?;
    let mut sum = back.0.values.add(&forth.0.values)?;
    let y_t = model.forward(x_t, class)?;
    let mut delta_y =
        (y_t - model.forward(x0_back, class)?) + (y_t - model.forward(x0_forth, class)?);
    if halve {
        sum = sum.scale(0.5)?;
        delta_y *= 0.5;
    }
    Ok(DirectionalAttribution {
        combined: Attribution::new(sum, delta_y),
        to_baseline: Some(back),
        to_target: Some(forth),
    })
}

/// Dispatches on `cfg.direction`.
pub fn attribute<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x0: &Tensor,
    x_t: &Tensor,
    cfg: &SampConfig,
) -> Result<DirectionalAttribution> {
    attribute_split(model, class, x0, x0, x_t, cfg)
}

/// Dispatches on `cfg.direction`, using `x0_back` as the end point of the
/// baseline-bound search and `x0_forth` as the start of the target-bound one.
pub fn attribute_split<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x0_back: &Tensor,
    x0_forth: &Tensor,
    x_t: &Tensor,
    cfg: &SampConfig,
) -> Result<DirectionalAttribution> {
    match cfg.direction {
        Direction::ToTarget => {
            let run = samp_attribute(model, class, x0_forth, x_t, cfg)?;
            Ok(DirectionalAttribution {
                combined: run.0.clone(),
                to_baseline: None,
                to_target: Some(run),
            })
        }
        Direction::ToBaseline => {
            let run = samp_to_baseline(model, class, x0_back, x_t, cfg)?;
            Ok(DirectionalAttribution {
                combined: run.0.clone(),
                to_baseline: Some(run),
                to_target: None,
            })
        }
        Direction::Both => {
            bidirectional_attribute_split(model, class, x0_back, x0_forth, x_t, cfg, false)
        }
    }
}
