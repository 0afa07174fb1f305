//! Fixtures shared by the command line and the tests: the small trained
//! classifier (an MLP `[64, 32, 2]` with ReLU trained on 8×8 two-class blob
//! images) and the pixel-counting completeness setup.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{blob_images, Dataset};
use crate::error::Result;
use crate::model::{build_counting_model, Activation, Model};
use crate::samp::{Direction, SampConfig, StepBound};
use crate::tensor::Tensor;
use crate::train::{train_fixture, TrainConfig, TrainLog};

pub const FIXTURE_SIDE: usize = 8;
pub const FIXTURE_HIDDEN: usize = 32;
pub const FIXTURE_TRAIN_SIZE: usize = 400;
pub const FIXTURE_HELDOUT_SIZE: usize = 50;

/// Training and held-out sets; the held-out set uses `seed + 1`.
pub fn fixture_datasets(seed: u64) -> (Dataset, Dataset) {
    (
        blob_images(FIXTURE_TRAIN_SIZE, FIXTURE_SIDE, seed),
        blob_images(FIXTURE_HELDOUT_SIZE, FIXTURE_SIDE, seed.wrapping_add(1)),
    )
}

/// Untrained fixture network, He-initialised from `seed`.
pub fn fixture_init(seed: u64) -> Result<Model> {
    Model::mlp_random(
        &[FIXTURE_SIDE * FIXTURE_SIDE, FIXTURE_HIDDEN, 2],
        Activation::Relu,
        seed,
    )
}

/// Trains the fixture network on `data` with the default schedule.
pub fn train_default_fixture(data: &Dataset, seed: u64) -> Result<(Model, TrainLog)> {
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    train_fixture(&fixture_init(seed)?, data, &config)
}

pub const COUNTING_SIDE: usize = 4;
pub const COUNTING_TARGET: f64 = 1.0;
/// Wider than the model default so that a step of `‖Δx‖₁/100` resolves the
/// bump; see [`counting_fixture`].
pub const COUNTING_TOLERANCE: f64 = 0.2;

/// Counting model over 4×4 images plus `n` inputs. Each input has between
/// 1 and 4 pixels (drawn with replacement) at exactly the target value and
/// the rest uniform in `[0, 0.5)`, where the bump is below `e^{−6}`.
pub fn counting_fixture(n: usize, seed: u64) -> Result<(Model, Vec<Tensor>)> {
    let d = COUNTING_SIDE * COUNTING_SIDE;
    let model = build_counting_model(&[COUNTING_SIDE, COUNTING_SIDE], COUNTING_TARGET, COUNTING_TOLERANCE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = (0..n)
        .map(|_| {
            let k = rng.random_range(1..=d / 4);
            let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.5)).collect();
            for _ in 0..k {
                v[rng.random_range(0..d)] = COUNTING_TARGET;
            }
            Tensor::new(vec![COUNTING_SIDE, COUNTING_SIDE], v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((model, inputs))
}

/// Search settings for completeness runs on the counting fixture: four
/// pixels per step, no momentum (a lagged gradient biases the Riemann sum),
/// target-bound. `eta_ratio` is the step bound as a fraction of `‖Δx‖₁`.
pub fn completeness_config(eta_ratio: f64) -> Result<SampConfig> {
    SampConfig::new(4, StepBound::Ratio(eta_ratio), 0.0, Direction::ToTarget)
}
