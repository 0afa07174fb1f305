//! Deletion/Insertion curves, baseline images, the Sensitivity-N sweep and
//! summary statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::image_dims;
use crate::model::Differentiable;
use crate::path::Attribution;
use crate::samp::{attribute, SampConfig, StepBound};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    Black,
    White,
    UniformRandom,
    /// `N(0.5, 0.25²)` per pixel, clamped to `[0, 1]`.
    GaussianRandom,
    /// `sigma` is the standard deviation of the kernel.
    GaussianBlur { kernel_size: usize, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    #[serde(flatten)]
    pub kind: BaselineKind,
    #[serde(default)]
    pub seed: u64,
}

impl BaselineSpec {
    pub fn black() -> Self {
        Self {
            kind: BaselineKind::Black,
            seed: 0,
        }
    }

    pub fn blur(kernel_size: usize, sigma: f64) -> Self {
        Self {
            kind: BaselineKind::GaussianBlur { kernel_size, sigma },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let BaselineKind::GaussianBlur { kernel_size, sigma } = self.kind {
            check_kernel(kernel_size, sigma)?;
        }
        Ok(())
    }
}

fn check_kernel(kernel_size: usize, sigma: f64) -> Result<()> {
    if kernel_size == 0 || kernel_size.is_multiple_of(2) {
        return Err(Error::Input(format!(
            "blur kernel size must be odd and positive, got {kernel_size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Input(format!("blur sigma must be positive, got {sigma}")));
    }
    Ok(())
}

pub fn make_baseline(x: &Tensor, spec: &BaselineSpec) -> Result<Tensor> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        BaselineKind::Black => Ok(Tensor::zeros(x.shape())),
        BaselineKind::White => Ok(Tensor::filled(x.shape(), 1.0)),
        BaselineKind::UniformRandom => {
            x.with_data((0..x.len()).map(|_| rng.random_range(0.0..1.0)).collect())
        }
        BaselineKind::GaussianRandom => {
            let normal = Normal::<f64>::new(0.5, 0.25).expect("valid std");
            x.with_data(
                (0..x.len())
                    .map(|_| normal.sample(&mut rng).clamp(0.0, 1.0))
                    .collect(),
            )
        }
        BaselineKind::GaussianBlur { kernel_size, sigma } => gaussian_blur(x, kernel_size, sigma),
    }
}

/// Normalised 1-D Gaussian kernel of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Vec<f64>> {
    check_kernel(size, sigma)?;
    let r = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let t = i as f64 - r;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Half-sample symmetric reflection (`dcba|abcd|dcba`), valid for any offset.
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Separable Gaussian blur of a `[height, width]` image with reflective
/// boundaries.
pub fn gaussian_blur(x: &Tensor, kernel_size: usize, sigma: f64) -> Result<Tensor> {
    let (h, w) = image_dims(x)?;
    let kernel = gaussian_kernel(kernel_size, sigma)?;
    let r = (kernel_size / 2) as isize;
    let src = x.data();

    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        for c in 0..w {
            rows[y * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * src[y * w + reflect_index(c as isize + k as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for c in 0..w {
            out[y * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * rows[reflect_index(y as isize + k as isize - r, h) * w + c])
                .sum();
        }
    }
    x.with_data(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    Deletion,
    Insertion,
}

/// Which model output feeds the curve. Metrics use logits; the softmax
/// probability is only for visual comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    #[default]
    Logit,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Features modified so far.
    pub k: usize,
    pub y_raw: f64,
    /// `y_raw / y^T`.
    pub y_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub mode: CurveMode,
    pub points: Vec<CurvePoint>,
    /// Mean of `y_hat` over all points; not confined to `[0, 1]`.
    pub auc: f64,
}

impl MetricCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,y_raw,y_hat\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.k, p.y_raw, p.y_hat));
        }
        out
    }
}

fn score<M: Differentiable + ?Sized>(
    model: &M,
    x: &Tensor,
    class: usize,
    kind: ScoreKind,
) -> Result<f64> {
    match kind {
        ScoreKind::Logit => model.forward(x, class),
        ScoreKind::Softmax => {
            let logits = (0..model.num_classes())
                .map(|c| model.forward(x, c))
                .collect::<Result<Vec<_>>>()?;
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            Ok((logits[class] - max).exp() / total)
        }
    }
}

/// Feature indices by descending attribution, ties to the lower index.
pub fn ranking(attribution: &Tensor) -> Vec<usize> {
    let a = attribution.data();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    order
}

/// Deletion/Insertion curve against a prepared baseline image.
#[allow(clippy::too_many_arguments)]
pub fn deletion_insertion_with_baseline<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x: &Tensor,
    attribution: &Tensor,
    mode: CurveMode,
    step: usize,
    baseline: &Tensor,
    kind: ScoreKind,
) -> Result<MetricCurve> {
    if step == 0 {
        return Err(Error::Input("metric step must be at least 1".into()));
    }
    x.ensure_same_shape(attribution)?;
    x.ensure_same_shape(baseline)?;
    let d = x.len();
    let order = ranking(attribution);
    let y_t = score(model, x, class, kind)?;
    if y_t.abs() < 1e-12 {
        return Err(Error::DegenerateNormalizer(y_t));
    }

    let (mut state, source) = match mode {
        CurveMode::Deletion => (x.data().to_vec(), baseline.data()),
        CurveMode::Insertion => (baseline.data().to_vec(), x.data()),
    };
    let mut points = Vec::with_capacity(d / step + 2);
    let mut k = 0;
    loop {
        let y = score(model, &x.with_data(state.clone())?, class, kind)?;
        points.push(CurvePoint {
            k,
            y_raw: y,
            y_hat: y / y_t,
        });
        if k == d {
            break;
        }
        let next = (k + step).min(d);
        for &i in &order[k..next] {
            state[i] = source[i];
        }
        k = next;
    }
    let auc = points.iter().map(|p| p.y_hat).sum::<f64>() / points.len() as f64;
    Ok(MetricCurve { mode, points, auc })
}

/// Deletion/Insertion curve with the baseline built from `baseline`.
pub fn deletion_insertion<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x: &Tensor,
    attribution: &Attribution,
    mode: CurveMode,
    step: usize,
    baseline: &BaselineSpec,
) -> Result<MetricCurve> {
    let base = make_baseline(x, baseline)?;
    deletion_insertion_with_baseline(
        model,
        class,
        x,
        &attribution.values,
        mode,
        step,
        &base,
        ScoreKind::Logit,
    )
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Input(format!(
            "pearson needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub beta: f64,
    /// Pearson correlation between `Σ a` and `Δy` across inputs.
    pub correlation: f64,
    /// Median of `|Σ a − Δy| / |Δy|` across inputs.
    pub median_relative_gap: f64,
}

/// Sensitivity-N completeness check: for each `β`, sets `η = ‖x^S − x^E‖₁/β`
/// per input, runs the configured search from the baseline of each input,
/// and correlates total attribution with output change.
pub fn sensitivity_sweep<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    inputs: &[Tensor],
    baseline: &BaselineSpec,
    beta_list: &[f64],
    cfg: &SampConfig,
) -> Result<Vec<SensitivityRow>> {
    if inputs.len() < 10 {
        return Err(Error::Input(format!(
            "the sweep needs at least 10 inputs, got {}",
            inputs.len()
        )));
    }
    if beta_list.is_empty()
        || beta_list.iter().any(|&b| !(b >= 1.0))
        || beta_list.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Input(format!(
            "beta values must be ascending and at least 1, got {beta_list:?}"
        )));
    }
    let baselines = inputs
        .iter()
        .map(|x| make_baseline(x, baseline))
        .collect::<Result<Vec<_>>>()?;
    beta_list
        .iter()
        .map(|&beta| {
            let run_cfg = cfg.with_eta(StepBound::Ratio(1.0 / beta))?;
            let pairs = inputs
                .par_iter()
                .zip(&baselines)
                .map(|(x, x0)| {
                    let a = attribute(model, class, x0, x, &run_cfg)?.combined;
                    Ok((a.values.sum(), a.delta_y, a.relative_gap()))
                })
                .collect::<Result<Vec<_>>>()?;
            let sums: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let deltas: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let gaps: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            Ok(SensitivityRow {
                beta,
                correlation: pearson(&sums, &deltas)?,
                median_relative_gap: median(&gaps),
            })
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean ± standard deviation (population) and median of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        Self {
            mean,
            std,
            median: median(values),
            n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Model;

    fn img(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Tensor {
        let data = (0..h * w).map(|i| f(i / w, i % w)).collect();
        Tensor::new(vec![h, w], data).unwrap()
    }

    /// Direct 2-D convolution with the outer-product kernel.
    fn reference_blur(x: &Tensor, size: usize, sigma: f64) -> Vec<f64> {
        let (h, w) = image_dims(x).unwrap();
        let r = (size / 2) as isize;
        let g: Vec<f64> = (0..size)
            .map(|i| (-((i as f64 - r as f64).powi(2)) / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = g.iter().sum::<f64>().powi(2);
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for ky in 0..size {
                    for kx in 0..size {
                        let sy = reflect_index(y as isize + ky as isize - r, h);
                        let sx = reflect_index(c as isize + kx as isize - r, w);
                        acc += g[ky] * g[kx] * x.data()[sy * w + sx];
                    }
                }
                out[y * w + c] = acc / norm;
            }
        }
        out
    }

    #[test]
    fn reflection_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-9, 4), 0);
    }

    #[test]
    fn kernel_sums_to_one() {
        for size in [1, 3, 5, 11, 31] {
            for sigma in [0.3, 1.0, 5.0, 20.0] {
                let k = gaussian_kernel(size, sigma).unwrap();
                assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!(gaussian_kernel(4, 1.0).is_err());
        assert!(gaussian_blur(&img(3, 3, |_, _| 0.0), 2, 1.0).is_err());
    }

    #[test]
    fn blur_identities() {
        let x = img(5, 6, |r, c| ((r * 7 + c * 3) % 5) as f64 / 4.0);
        assert_eq!(gaussian_blur(&x, 1, 2.0).unwrap(), x);

        let flat = img(8, 8, |_, _| 0.37);
        let b = gaussian_blur(&flat, 11, 5.0).unwrap();
        assert!(b.max_abs_diff(&flat) < 1e-12);

        // impulse far from the border reproduces the kernel
        let imp = img(9, 9, |r, c| if r == 4 && c == 4 { 1.0 } else { 0.0 });
        let k = gaussian_kernel(5, 1.0).unwrap();
        let b = gaussian_blur(&imp, 5, 1.0).unwrap();
        for dy in 0..5 {
            for dx in 0..5 {
                let v = b.data()[(2 + dy) * 9 + 2 + dx];
                assert!((v - k[dy] * k[dx]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blur_matches_direct_convolution() {
        let x = img(8, 8, |r, c| ((r * 13 + c * 7) % 11) as f64 / 10.0);
        for (size, sigma) in [(3, 1.0), (11, 5.0), (21, 2.0)] {
            let fast = gaussian_blur(&x, size, sigma).unwrap();
            let slow = reference_blur(&x, size, sigma);
            for (a, b) in fast.data().iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((fast.mean() - x.mean()).abs() < 1e-6);
        }
    }

    #[test]
    fn baselines() {
        let x = img(4, 4, |r, c| (r + c) as f64 / 6.0);
        assert_eq!(make_baseline(&x, &BaselineSpec::black()).unwrap(), Tensor::zeros(&[4, 4]));
        let white = BaselineSpec {
            kind: BaselineKind::White,
            seed: 0,
        };
        assert_eq!(make_baseline(&x, &white).unwrap().sum(), 16.0);
        for kind in [BaselineKind::UniformRandom, BaselineKind::GaussianRandom] {
            let spec = BaselineSpec { kind, seed: 4 };
            let a = make_baseline(&x, &spec).unwrap();
            assert_eq!(a, make_baseline(&x, &spec).unwrap());
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let other = BaselineSpec { kind, seed: 5 };
            assert_ne!(a, make_baseline(&x, &other).unwrap());
        }
        assert!(make_baseline(&x, &BaselineSpec::blur(4, 1.0)).is_err());
    }

    fn linear(w: &[f64]) -> Model {
        Model::linear(
            Tensor::new(vec![1, w.len()], w.to_vec()).unwrap(),
            Tensor::zeros(&[1]),
        )
        .unwrap()
    }

    #[test]
    fn deletion_on_linear_model_matches_partial_sums() {
        let w = [0.5, 2.0, 1.0, 3.0, 0.25];
        let m = linear(&w);
        let x = Tensor::from_vec(vec![1.0, 0.5, 1.0, 0.2, 0.8]).unwrap();
        let contrib: Vec<f64> = w.iter().zip(x.data()).map(|(a, b)| a * b).collect();
        let attr = Attribution::new(Tensor::from_vec(contrib.clone()).unwrap(), 0.0);
        let curve =
            deletion_insertion(&m, 0, &x, &attr, CurveMode::Deletion, 2, &BaselineSpec::black())
                .unwrap();
        // removal order by contribution: 2 (1.0), 1 (1.0), 3 (0.6), 0 (0.5), 4 (0.2)
        let total: f64 = contrib.iter().sum();
        let expected = [total, total - 2.0, total - 2.6 - 0.5, 0.0];
        assert_eq!(curve.points.iter().map(|p| p.k).collect::<Vec<_>>(), vec![0, 2, 4, 5]);
        for (p, e) in curve.points.iter().zip(expected) {
            assert!((p.y_raw - e).abs() < 1e-12);
        }
        assert_eq!(curve.points[0].y_hat, 1.0);
        assert!(curve.points.windows(2).all(|w| w[1].y_hat <= w[0].y_hat));
        let auc: f64 = expected.iter().map(|e| e / total).sum::<f64>() / 4.0;
        assert!((curve.auc - auc).abs() < 1e-12);
    }

    #[test]
    fn insertion_of_input_into_itself_is_flat() {
        let m = linear(&[1.0, -0.5, 2.0]);
        let x = Tensor::from_vec(vec![0.3, 0.1, 0.9]).unwrap();
        let attr = Tensor::from_vec(vec![0.2, 0.5, 0.1]).unwrap();
        let c = deletion_insertion_with_baseline(
            &m, 0, &x, &attr, CurveMode::Insertion, 1, &x, ScoreKind::Logit,
        )
        .unwrap();
        assert!(c.points.iter().all(|p| p.y_hat == 1.0));
        assert_eq!(c.auc, 1.0);
    }

    #[test]
    fn reversed_ranking_insertion_mirrors_deletion() {
        let m = Model::mlp_random(&[6, 5, 2], crate::model::Activation::Tanh, 8).unwrap();
        let x = Tensor::from_vec(vec![0.9, 0.1, 0.5, 0.7, 0.3, 0.8]).unwrap();
        let a = Tensor::from_vec(vec![0.4, -0.2, 0.9, 0.1, 0.3, -0.5]).unwrap();
        let base = Tensor::zeros(&[6]);
        for step in [1, 2, 3] {
            let del = deletion_insertion_with_baseline(
                &m, 0, &x, &a, CurveMode::Deletion, step, &base, ScoreKind::Logit,
            )
            .unwrap();
            let ins = deletion_insertion_with_baseline(
                &m, 0, &x, &a.scale(-1.0).unwrap(), CurveMode::Insertion, step, &base, ScoreKind::Logit,
            )
            .unwrap();
            assert!((del.auc - ins.auc).abs() < 1e-12);
            assert_eq!(ins.points.last().unwrap().y_hat, 1.0);
        }
    }

    #[test]
    fn degenerate_normalizer() {
        let m = linear(&[1.0, -1.0]);
        let x = Tensor::from_vec(vec![0.5, 0.5]).unwrap();
        let attr = Attribution::new(Tensor::zeros(&[2]), 0.0);
        let err = deletion_insertion(&m, 0, &x, &attr, CurveMode::Deletion, 1, &BaselineSpec::black());
        assert!(matches!(err, Err(Error::DegenerateNormalizer(_))));
    }

    #[test]
    fn softmax_scores_are_probabilities() {
        let m = Model::mlp_random(&[3, 4, 3], crate::model::Activation::Relu, 1).unwrap();
        let x = Tensor::from_vec(vec![0.2, 0.4, 0.6]).unwrap();
        let p: f64 = (0..3).map(|c| score(&m, &x, c, ScoreKind::Softmax).unwrap()).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_values() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let affine: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((pearson(&xs, &affine).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // hand computation: Sxy = 8, Sxx = 10, Syy = 10; second set Sxy = 10, Syy = 14.8
        let ys = [2.0, 1.0, 4.0, 3.0, 5.0];
        let ys2 = [2.0, 1.0, 4.0, 3.0, 6.0];
        assert!((pearson(&xs, &ys).unwrap() - 0.8).abs() < 1e-12);
        let expected = 10.0 / (10.0f64 * 14.8).sqrt();
        assert!((pearson(&xs, &ys2).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(
            pearson(&xs, &[1.0; 5]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn linear_sweep_is_perfectly_correlated() {
        let m = linear(&[1.0, 2.0, -1.0, 0.5]);
        let inputs: Vec<Tensor> = (0..12)
            .map(|i| {
                let f = i as f64 / 12.0;
                Tensor::new(vec![2, 2], vec![f, 1.0 - f, f * f, 0.3 + 0.05 * i as f64]).unwrap()
            })
            .collect();
        let cfg = SampConfig::improved(1).unwrap();
        let rows = sensitivity_sweep(&m, 0, &inputs, &BaselineSpec::black(), &[10.0, 50.0, 100.0], &cfg)
            .unwrap();
        for r in rows {
            assert!((r.correlation - 1.0).abs() < 1e-9);
            assert!(r.median_relative_gap < 1e-9);
        }
        assert!(sensitivity_sweep(&m, 0, &inputs[..5], &BaselineSpec::black(), &[10.0], &cfg).is_err());
        assert!(sensitivity_sweep(&m, 0, &inputs, &BaselineSpec::black(), &[50.0, 10.0], &cfg).is_err());
    }
}
