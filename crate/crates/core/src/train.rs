//! Per-sample SGD with momentum for the dense fixture models.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{Differentiable, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    pub epoch_losses: Vec<f64>,
    pub final_accuracy: f64,
}

/// Fraction of samples whose highest logit is the label.
pub fn accuracy(model: &Model, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("accuracy of an empty dataset".into()));
    }
    let mut correct = 0usize;
    for (x, &label) in data.inputs().iter().zip(data.labels()) {
        if predict(model, x)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Arg-max class, ties to the lower index.
pub fn predict(model: &Model, x: &crate::Tensor) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for c in 0..model.num_classes() {
        let s = model.forward(x, c)?;
        if s > best.1 {
            best = (c, s);
        }
    }
    Ok(best.0)
}

/// Trains a linear or MLP model with softmax cross-entropy. Samples are
/// visited in a per-epoch shuffle drawn from `config.seed`, so the result
/// is a pure function of its arguments.
pub fn train_fixture(model: &Model, data: &Dataset, config: &TrainConfig) -> Result<(Model, TrainLog)> {
    if data.is_empty() {
        return Err(Error::Input("training data is empty".into()));
    }
    if matches!(model, Model::Counting(_)) {
        return Err(Error::Input("counting models have no trainable parameters".into()));
    }
    if data.feature_count() != model.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: vec![model.input_dim()],
            actual: vec![data.feature_count()],
        });
    }
    data.check_labels(model.num_classes())?;
    if !(config.learning_rate > 0.0) || !(0.0..1.0).contains(&config.momentum) {
        return Err(Error::Input(format!(
            "need learning_rate > 0 and momentum in [0, 1), got {} and {}",
            config.learning_rate, config.momentum
        )));
    }

    let mut trained = model.clone();
    let mut params: Vec<Vec<f64>> = trained
        .parameters()
        .iter()
        .map(|(_, p)| p.data().to_vec())
        .collect();
    let mut velocity: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let mut tape = Tape::new();
            let x = tape.leaf(data.inputs()[i].data().to_vec());
            let leaves: Vec<_> = params.iter().map(|p| tape.leaf(p.clone())).collect();
            let logits = trained.record_logits(&mut tape, x, &leaves);
            let loss = tape.softmax_cross_entropy(logits, data.labels()[i]);
            total += tape.scalar(loss);
            let adj = tape.backward(loss);
            for ((p, v), leaf) in params.iter_mut().zip(&mut velocity).zip(&leaves) {
                for ((pj, vj), gj) in p.iter_mut().zip(v.iter_mut()).zip(adj.get(*leaf)) {
                    *vj = config.momentum * *vj - config.learning_rate * gj;
                    *pj += *vj;
                }
            }
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || params.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        epoch_losses.push(mean);
    }

    let mut flat = params.into_iter();
    for layer in trained.layers_mut() {
        layer.weight = layer.weight.with_data(flat.next().expect("weight"))?;
        layer.bias = layer.bias.with_data(flat.next().expect("bias"))?;
    }
    let final_accuracy = accuracy(&trained, data)?;
    Ok((
        trained,
        TrainLog {
            seed: config.seed,
            epoch_losses,
            final_accuracy,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::separable_points;
    use crate::model::Activation;
    use crate::Tensor;

    #[test]
    fn separable_points_train_to_perfect_accuracy() {
        let data = separable_points(80, 5);
        let init = Model::linear(Tensor::zeros(&[2, 2]), Tensor::zeros(&[2])).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let (model, log) = train_fixture(&init, &data, &cfg).unwrap();
        assert_eq!(log.final_accuracy, 1.0);
        assert_eq!(accuracy(&model, &data).unwrap(), 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable_points(40, 1);
        let init = Model::mlp_random(&[2, 4, 2], Activation::Relu, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 17,
            ..TrainConfig::default()
        };
        let (a, la) = train_fixture(&init, &data, &cfg).unwrap();
        let (b, lb) = train_fixture(&init, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        for ((_, pa), (_, pb)) in a.parameters().iter().zip(b.parameters()) {
            let bits_a: Vec<u64> = pa.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = pb.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn divergence_names_the_epoch() {
        let data = separable_points(40, 1);
        let init = Model::mlp_random(&[2, 8, 2], Activation::Relu, 2).unwrap();
        let scaled = Dataset::new(
            data.inputs().iter().map(|x| x.scale(1e150).unwrap()).collect(),
            data.labels().to_vec(),
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            learning_rate: 10.0,
            ..TrainConfig::default()
        };
        match train_fixture(&init, &scaled, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert_eq!(epoch, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_mismatched_data() {
        let init = Model::mlp_random(&[3, 4, 2], Activation::Relu, 2).unwrap();
        let empty = Dataset::new(vec![], vec![]).unwrap();
        assert!(train_fixture(&init, &empty, &TrainConfig::default()).is_err());
        let data = separable_points(4, 1);
        assert!(matches!(
            train_fixture(&init, &data, &TrainConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
