#![allow(clippy::needless_range_loop)]

use samp_core::fixture::{fixture_datasets, train_default_fixture};
use samp_core::model::Model;
use samp_core::train::accuracy;
use samp_core::{Differentiable, Tensor};

const GOLDEN: &str = include_str!("data/golden_fixture.json");

/// Plain scalar loops over the stored weights, sharing no code with the
/// tape-based forward pass.
fn scalar_forward(model: &Model, x: &Tensor, class: usize) -> f64 {
    let mut h: Vec<f64> = x.data().to_vec();
    let layers = model.layers();
    for (l, layer) in layers.iter().enumerate() {
        let (rows, cols) = (layer.outputs(), layer.inputs());
        let mut next = vec![0.0; rows];
        for r in 0..rows {
            let mut acc = layer.bias.data()[r];
            for c in 0..cols {
                acc += layer.weight.data()[r * cols + c] * h[c];
            }
            next[r] = if l + 1 < layers.len() { acc.max(0.0) } else { acc };
        }
        h = next;
    }
    h[class]
}

#[test]
fn fixture_trains_and_matches_golden_scores() {
    let (train, heldout) = fixture_datasets(0);
    let (model, log) = train_default_fixture(&train, 0).unwrap();
    assert!(log.final_accuracy >= 0.95, "training accuracy {}", log.final_accuracy);
    assert!(accuracy(&model, &heldout).unwrap() >= 0.9);

    let golden: serde_json::Value = serde_json::from_str(GOLDEN).unwrap();
    for entry in golden["scores"].as_array().unwrap() {
        let index = entry["input"].as_u64().unwrap() as usize;
        let class = entry["class"].as_u64().unwrap() as usize;
        let expected = entry["score"].as_f64().unwrap();
        let x = &heldout.inputs()[index];
        let score = model.forward(x, class).unwrap();
        assert!((score - expected).abs() <= 1e-9, "input {index}: {score} vs golden {expected}");
        assert!((scalar_forward(&model, x, class) - score).abs() <= 1e-9);
    }
}

#[test]
#[ignore = "regenerates the golden file"]
fn write_golden() {
    let (train, heldout) = fixture_datasets(0);
    let (model, _) = train_default_fixture(&train, 0).unwrap();
    let scores: Vec<serde_json::Value> = [0usize, 1, 7, 23, 49]
        .iter()
        .map(|&i| {
            let class = heldout.labels()[i];
            serde_json::json!({"input": i, "class": class, "score": model.forward(&heldout.inputs()[i], class).unwrap()})
        })
        .collect();
    let text = serde_json::to_string_pretty(&serde_json::json!({"seed": 0, "scores": scores})).unwrap();
    std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_fixture.json"), text + "\n").unwrap();
}
