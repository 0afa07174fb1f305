//! Differentiable fixture models and the gradient oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A scalar-output function `f_c: R^d → R` per class `c`, with exact gradient.
///
/// Implementations must be deterministic and safe to share across threads.
pub trait Differentiable: Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    /// Pre-softmax score of `class` at `x`.
    fn forward(&self, x: &Tensor, class: usize) -> Result<f64>;
    /// `∇_x forward(x, class)`, shaped like `x`.
    fn gradient(&self, x: &Tensor, class: usize) -> Result<Tensor>;

    /// Validates the `(x, class)` pair against the model signature.
    fn check_input(&self, x: &Tensor, class: usize) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.input_dim()],
                actual: x.shape().to_vec(),
            });
        }
        if class >= self.num_classes() {
            return Err(Error::Input(format!(
                "class {class} out of range for a model with {} classes",
                self.num_classes()
            )));
        }
        Ok(())
    }
}

impl<M: Differentiable + ?Sized> Differentiable for &M {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn forward(&self, x: &Tensor, class: usize) -> Result<f64> {
        (**self).forward(x, class)
    }
    fn gradient(&self, x: &Tensor, class: usize) -> Result<Tensor> {
        (**self).gradient(x, class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp,
    Counting,
}

/// Fully connected layer `y = W x + b` with `W` shaped `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.shape().len() != 2 || bias.shape() != [weight.shape()[0]] {
            return Err(Error::Input(format!(
                "dense layer needs weight [out, in] and bias [out], got {:?} and {:?}",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }
}

/// Smooth surrogate of pixel counting: `Σ_i exp(−((x_i − target) / tolerance)²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingModel {
    pub input_shape: Vec<usize>,
    pub target_value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(Dense),
    Mlp {
        layers: Vec<Dense>,
        activation: Activation,
    },
    Counting(CountingModel),
}

pub const DEFAULT_COUNTING_TOLERANCE: f64 = 0.05;

/// Counting model over an input of shape `input_layout`.
pub fn build_counting_model(
    input_layout: &[usize],
    target_value: f64,
    tolerance: f64,
) -> Result<Model> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::Input(format!(
            "counting tolerance must be positive, got {tolerance}"
        )));
    }
    if !target_value.is_finite() {
        return Err(Error::Input("counting target must be finite".into()));
    }
    if input_layout.is_empty() || input_layout.contains(&0) {
        return Err(Error::Input(format!(
            "invalid input layout {input_layout:?}"
        )));
    }
    Ok(Model::Counting(CountingModel {
        input_shape: input_layout.to_vec(),
        target_value,
        tolerance,
    }))
}

impl Model {
    /// Single dense layer with `weights` shaped `[classes, d]`.
    pub fn linear(weights: Tensor, bias: Tensor) -> Result<Self> {
        Ok(Model::Linear(Dense::new(weights, bias)?))
    }

    pub fn mlp(layers: Vec<Dense>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Input("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Input(format!(
                    "layer widths do not chain: {} outputs feed {} inputs",
                    pair[0].outputs(),
                    pair[1].inputs()
                )));
            }
        }
        Ok(Model::Mlp { layers, activation })
    }

    /// MLP with He-style Gaussian initialisation. `widths` lists every layer
    /// width from input to output, e.g. `[64, 32, 2]`.
    pub fn mlp_random(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Input(format!("invalid MLP widths {widths:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
            let w: Vec<f64> = (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect();
            layers.push(Dense::new(
                Tensor::new(vec![fan_out, fan_in], w)?,
                Tensor::zeros(&[fan_out]),
            )?);
        }
        Self::mlp(layers, activation)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear(_) => ModelKind::Linear,
            Model::Mlp { .. } => ModelKind::Mlp,
            Model::Counting(_) => ModelKind::Counting,
        }
    }

    pub fn layers(&self) -> &[Dense] {
        match self {
            Model::Linear(layer) => std::slice::from_ref(layer),
            Model::Mlp { layers, .. } => layers,
            Model::Counting(_) => &[],
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        match self {
            Model::Linear(layer) => std::slice::from_mut(layer),
            Model::Mlp { layers, .. } => layers,
            Model::Counting(_) => &mut [],
        }
    }

    pub fn activation(&self) -> Option<Activation> {
        match self {
            Model::Mlp { activation, .. } => Some(*activation),
            _ => None,
        }
    }

    /// Named parameter tensors in a stable order.
    pub fn parameters(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers().iter().enumerate() {
            out.push((format!("layer{i}.weight"), &layer.weight));
            out.push((format!("layer{i}.bias"), &layer.bias));
        }
        out
    }

    /// Records the logits of a dense model on `tape`. `params` holds one
    /// leaf per tensor of [`Model::parameters`], in the same order.
    pub(crate) fn record_logits(&self, tape: &mut Tape, x: Var, params: &[Var]) -> Var {
        let layers = self.layers();
        let activation = self.activation();
        let mut h = x;
        for (i, layer) in layers.iter().enumerate() {
            let z = tape.matvec(params[2 * i], h, layer.outputs(), layer.inputs());
            h = tape.add(z, params[2 * i + 1]);
            if i + 1 < layers.len() {
                h = match activation {
                    Some(Activation::Tanh) => tape.tanh(h),
                    _ => tape.relu(h),
                };
            }
        }
        h
    }

    fn record_score(&self, tape: &mut Tape, x: &Tensor, class: usize) -> (Var, Var) {
        let xv = tape.leaf(x.data().to_vec());
        let out = match self {
            Model::Counting(c) => tape.bump_sum(xv, c.target_value, c.tolerance),
            _ => {
                let params: Vec<Var> = self
                    .parameters()
                    .into_iter()
                    .map(|(_, p)| tape.leaf(p.data().to_vec()))
                    .collect();
                let logits = self.record_logits(tape, xv, &params);
                tape.pick(logits, class)
            }
        };
        (xv, out)
    }
}

impl Differentiable for Model {
    fn input_dim(&self) -> usize {
        match self {
            Model::Counting(c) => c.input_shape.iter().product(),
            _ => self.layers()[0].inputs(),
        }
    }

    fn num_classes(&self) -> usize {
        match self {
            Model::Counting(_) => 1,
            _ => self.layers().last().map_or(0, Dense::outputs),
        }
    }

    fn forward(&self, x: &Tensor, class: usize) -> Result<f64> {
        self.check_input(x, class)?;
        let mut tape = Tape::new();
        let (_, out) = self.record_score(&mut tape, x, class);
        let score = tape.scalar(out);
        if !score.is_finite() {
            return Err(Error::Numeric(format!("forward produced {score}")));
        }
        Ok(score)
    }

    fn gradient(&self, x: &Tensor, class: usize) -> Result<Tensor> {
        self.check_input(x, class)?;
        let mut tape = Tape::new();
        let (xv, out) = self.record_score(&mut tape, x, class);
        if !tape.scalar(out).is_finite() {
            return Err(Error::Numeric(format!(
                "forward produced {}",
                tape.scalar(out)
            )));
        }
        let mut adj = tape.backward(out);
        x.with_data(adj.take(xv))
    }
}

/// Central-difference gradient, one coordinate at a time.
pub fn finite_diff_gradient<M: Differentiable + ?Sized>(
    model: &M,
    x: &Tensor,
    class: usize,
    h: f64,
) -> Result<Tensor> {
    if !(h > 0.0) {
        return Err(Error::Input(format!("step h must be positive, got {h}")));
    }
    model.check_input(x, class)?;
    let mut probe = x.data().to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = model.forward(&x.with_data(probe.clone())?, class)?;
        probe[i] = orig - h;
        let down = model.forward(&x.with_data(probe.clone())?, class)?;
        probe[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    x.with_data(grad)
}

/// Pointwise sum of two models sharing a signature.
pub struct SumModel<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: Differentiable, B: Differentiable> SumModel<A, B> {
    pub fn new(first: A, second: B) -> Result<Self> {
        if first.input_dim() != second.input_dim() {
            return Err(Error::Input(format!(
                "summed models disagree on input size: {} vs {}",
                first.input_dim(),
                second.input_dim()
            )));
        }
        Ok(Self { first, second })
    }
}

impl<A: Differentiable, B: Differentiable> Differentiable for SumModel<A, B> {
    fn input_dim(&self) -> usize {
        self.first.input_dim()
    }
    fn num_classes(&self) -> usize {
        self.first.num_classes().min(self.second.num_classes())
    }
    fn forward(&self, x: &Tensor, class: usize) -> Result<f64> {
        Ok(self.first.forward(x, class)? + self.second.forward(x, class)?)
    }
    fn gradient(&self, x: &Tensor, class: usize) -> Result<Tensor> {
        self.first
            .gradient(x, class)?
            .add(&self.second.gradient(x, class)?)
    }
}

/// `−f`, used to orient the baseline-bound search toward score decrease.
pub struct Negated<M>(pub M);

impl<M: Differentiable> Differentiable for Negated<M> {
    fn input_dim(&self) -> usize {
        self.0.input_dim()
    }
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }
    fn forward(&self, x: &Tensor, class: usize) -> Result<f64> {
        Ok(-self.0.forward(x, class)?)
    }
    fn gradient(&self, x: &Tensor, class: usize) -> Result<Tensor> {
        self.0.gradient(x, class)?.map(|v| -v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::from_vec(v.to_vec()).unwrap()
    }

    fn linear_123() -> Model {
        Model::linear(
            Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap(),
            Tensor::zeros(&[1]),
        )
        .unwrap()
    }

    /// `f(x) = x²` on a single coordinate.
    struct Square;
    impl Differentiable for Square {
        fn input_dim(&self) -> usize {
            1
        }
        fn num_classes(&self) -> usize {
            1
        }
        fn forward(&self, x: &Tensor, _: usize) -> Result<f64> {
            Ok(x.data()[0] * x.data()[0])
        }
        fn gradient(&self, x: &Tensor, _: usize) -> Result<Tensor> {
            x.map(|v| 2.0 * v)
        }
    }

    #[test]
    fn linear_forward_and_gradient() {
        let m = linear_123();
        assert_eq!(m.forward(&t(&[1.0, 1.0, 1.0]), 0).unwrap(), 6.0);
        for x in [[0.0, 0.0, 0.0], [-3.0, 5.0, 0.25]] {
            assert_eq!(m.gradient(&t(&x), 0).unwrap().data(), &[1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn input_errors() {
        let m = linear_123();
        assert!(matches!(
            m.forward(&t(&[1.0, 1.0]), 0),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            m.forward(&t(&[1.0, 1.0, 1.0]), 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn relu_mlp_gradient_is_weight_product_when_active() {
        // 2-2-2 network, every pre-activation positive at x = (1, 1).
        let l1 = Dense::new(
            Tensor::new(vec![2, 2], vec![1.0, 2.0, 0.5, 1.5]).unwrap(),
            Tensor::from_vec(vec![0.1, 0.2]).unwrap(),
        )
        .unwrap();
        let l2 = Dense::new(
            Tensor::new(vec![2, 2], vec![3.0, -1.0, 2.0, 4.0]).unwrap(),
            Tensor::zeros(&[2]),
        )
        .unwrap();
        let m = Model::mlp(vec![l1, l2], Activation::Relu).unwrap();
        let x = t(&[1.0, 1.0]);
        // class 0 row of W2 · W1 = (3, −1)·[[1, 2], [0.5, 1.5]] = (2.5, 4.5)
        assert_eq!(m.gradient(&x, 0).unwrap().data(), &[2.5, 4.5]);
        // class 1 row: (2, 4)·W1 = (4, 10)
        assert_eq!(m.gradient(&x, 1).unwrap().data(), &[4.0, 10.0]);
        // h = (3.1, 2.2), logit 0 = 3·3.1 − 2.2
        assert!((m.forward(&x, 0).unwrap() - 7.1).abs() < 1e-12);
    }

    #[test]
    fn finite_differences() {
        let fd = finite_diff_gradient(&Square, &t(&[3.0]), 0, 1e-5).unwrap();
        assert!((fd.data()[0] - 6.0).abs() < 1e-8);

        let m = linear_123();
        for h in [1e-2, 1e-5, 1.0] {
            let fd = finite_diff_gradient(&m, &t(&[0.3, -0.2, 0.7]), 0, h).unwrap();
            assert!(fd.max_abs_diff(&t(&[1.0, 2.0, 3.0])) < 1e-9);
        }
        assert!(finite_diff_gradient(&m, &t(&[0.0; 3]), 0, 0.0).is_err());
    }

    #[test]
    fn counting_model_scores() {
        let m = build_counting_model(&[2, 4], 1.0, DEFAULT_COUNTING_TOLERANCE).unwrap();
        let d = 8.0;
        let all = Tensor::filled(&[8], 1.0);
        assert!((m.forward(&all, 0).unwrap() - d).abs() < 1e-12);

        let far = Tensor::filled(&[8], 1.0 - 5.0 * DEFAULT_COUNTING_TOLERANCE);
        assert!(m.forward(&far, 0).unwrap() < 1e-6 * d);

        // direct summation: 4 bumps at peak, 4 pixels at 0.3 (14 tolerances away)
        let half = t(&[1.0, 0.3, 1.0, 0.3, 1.0, 0.3, 1.0, 0.3]);
        let expected: f64 = half
            .data()
            .iter()
            .map(|v| (-((v - 1.0) / 0.05f64).powi(2)).exp())
            .sum();
        let score = m.forward(&half, 0).unwrap();
        assert!((score - expected).abs() < 1e-12);
        assert!((score - d / 2.0).abs() < 0.01 * d / 2.0);

        assert!(build_counting_model(&[4], 1.0, 0.0).is_err());
    }

    #[test]
    fn wrappers_compose_gradients() {
        let a = linear_123();
        let b = Model::mlp_random(&[3, 4, 1], Activation::Tanh, 3).unwrap();
        let sum = SumModel::new(&a, &b).unwrap();
        let x = t(&[0.2, -0.4, 0.9]);
        let g = sum.gradient(&x, 0).unwrap();
        let expected = a.gradient(&x, 0).unwrap().add(&b.gradient(&x, 0).unwrap()).unwrap();
        assert_eq!(g, expected);
        let neg = Negated(&b);
        assert_eq!(neg.forward(&x, 0).unwrap(), -b.forward(&x, 0).unwrap());
    }

    #[test]
    fn random_mlp_is_seeded() {
        let a = Model::mlp_random(&[6, 5, 2], Activation::Relu, 11).unwrap();
        let b = Model::mlp_random(&[6, 5, 2], Activation::Relu, 11).unwrap();
        let c = Model::mlp_random(&[6, 5, 2], Activation::Relu, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
