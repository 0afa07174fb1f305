use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samp_core::model::{build_counting_model, finite_diff_gradient, Activation, Model};
use samp_core::{Differentiable, Tensor};

const TRIPLES: usize = 50;

fn relative_error(auto: &Tensor, numeric: &Tensor) -> f64 {
    let scale = numeric.data().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
    auto.max_abs_diff(numeric) / scale
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn worst_error(mut make: impl FnMut(&mut ChaCha8Rng) -> (Model, Tensor)) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..TRIPLES {
        let (model, x) = make(&mut rng);
        let class = rng.random_range(0..model.num_classes());
        let auto = model.gradient(&x, class).unwrap();
        let numeric = finite_diff_gradient(&model, &x, class, 1e-5).unwrap();
        worst = worst.max(relative_error(&auto, &numeric));
    }
    worst
}

#[test]
fn linear_gradients_match_finite_differences() {
    let worst = worst_error(|rng| {
        let w = random_tensor(rng, &[3, 10], -1.0, 1.0);
        let b = random_tensor(rng, &[3], -0.5, 0.5);
        (Model::linear(w, b).unwrap(), random_tensor(rng, &[10], 0.0, 1.0))
    });
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for activation in [Activation::Relu, Activation::Tanh] {
        let worst = worst_error(|rng| {
            let seed = rng.random();
            let model = Model::mlp_random(&[12, 16, 8, 3], activation, seed).unwrap();
            (model, random_tensor(rng, &[12], 0.0, 1.0))
        });
        assert!(worst < 1e-4, "{activation:?}: worst relative error {worst:e}");
    }
}

#[test]
fn counting_gradients_match_finite_differences() {
    let worst = worst_error(|rng| {
        let target = rng.random_range(0.2..0.8);
        let tolerance = rng.random_range(0.05..0.3);
        let model = build_counting_model(&[4, 4], target, tolerance).unwrap();
        let x = random_tensor(rng, &[4, 4], target - 2.0 * tolerance, target + 2.0 * tolerance);
        (model, x)
    });
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}
