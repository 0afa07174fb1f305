//! Independent verification machinery.
//!
//! * Exhaustive enumeration of manipulation paths (ordered partitions of the
//!   feature indices into blocks of `s`) and a brute-force search for the
//!   most concentrated attribution among them.
//! * Monte Carlo sampling of the conditional allocation law: if the running
//!   attribution sum is a Brownian motion with per-step variance `σ`, the
//!   allocations conditioned on `Σ a_i = C` are Gaussian with mean `C/d` and
//!   covariance `σ (I − J/d)`. Samples are drawn exactly through the bridge
//!   projection `a_i = z_i − mean(z) + C/d`, `z_i ~ N(0, σ)` iid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Differentiable;
use crate::path::{integrate_path, variance_objective, PathSegments};
use crate::tensor::Tensor;

/// Largest feature count accepted by [`enumerate_paths`].
pub const MAX_ENUMERATION_DIM: usize = 9;

/// Every ordered partition of `0..d` into blocks of `s` (the last block
/// holds `d mod s` indices when `s` does not divide `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnumeration {
    pub d: usize,
    pub s: usize,
    pub paths: Vec<Vec<Vec<usize>>>,
}

impl PathEnumeration {
    pub fn count(&self) -> usize {
        self.paths.len()
    }
}

/// `d! / (s!)^{d/s}` as a float, used for size estimates.
pub fn manipulation_path_count_estimate(d: usize, s: usize) -> f64 {
    let ln_fact = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    let full = d / s;
    let rest = d % s;
    (ln_fact(d) - full as f64 * ln_fact(s) - ln_fact(rest)).exp()
}

fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            go(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn enumerate_paths(d: usize, s: usize) -> Result<PathEnumeration> {
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::TooLarge {
            d,
            s,
            estimate: manipulation_path_count_estimate(d, s.max(1).min(d)),
        });
    }
    if s == 0 || s > d {
        return Err(Error::Input(format!("need 1 <= s <= d, got s = {s}, d = {d}")));
    }

    fn extend(
        remaining: &[usize],
        s: usize,
        prefix: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if remaining.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for block in combinations(remaining, s.min(remaining.len())) {
            let rest: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|i| !block.contains(i))
                .collect();
            prefix.push(block);
            extend(&rest, s, prefix, out);
            prefix.pop();
        }
    }

    let all: Vec<usize> = (0..d).collect();
    let mut paths = Vec::new();
    extend(&all, s, &mut Vec::new(), &mut paths);
    Ok(PathEnumeration { d, s, paths })
}

/// Realises an index ordering as a manipulation path: step `k` moves the
/// coordinates of block `k` from their current value to `x_t`.
pub fn realize_path(blocks: &[Vec<usize>], x0: &Tensor, x_t: &Tensor) -> Result<PathSegments> {
    x0.ensure_same_shape(x_t)?;
    let mut x = x0.data().to_vec();
    let mut steps = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut step = vec![0.0; x.len()];
        for &i in block {
            step[i] = x_t.data()[i] - x[i];
        }
        for (xi, di) in x.iter_mut().zip(&step) {
            *xi += di;
        }
        steps.push(x0.with_data(step)?);
    }
    PathSegments::new(x0.clone(), x_t.clone(), steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub best_path: Vec<Vec<usize>>,
    pub best_variance: f64,
    /// Objective of every enumerated path, in enumeration order.
    pub all_variances: Vec<f64>,
}

/// Evaluates the concentration objective of every manipulation path (plain
/// left-Riemann integration, no momentum, no step bound) and returns the
/// best one. Ties keep the first path in enumeration order.
pub fn brute_force_optimal<M: Differentiable + ?Sized>(
    model: &M,
    class: usize,
    x0: &Tensor,
    x_t: &Tensor,
    s: usize,
) -> Result<BruteForceResult> {
    let enumeration = enumerate_paths(x0.len(), s)?;
    let all_variances = enumeration
        .paths
        .par_iter()
        .map(|blocks| {
            let path = realize_path(blocks, x0, x_t)?;
            Ok(variance_objective(&integrate_path(model, class, &path, None)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best, best_variance) = all_variances
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(BruteForceResult {
        best_path: enumeration.paths[best].clone(),
        best_variance,
        all_variances,
    })
}

/// Number of independent Monte Carlo batches; standard errors come from
/// the spread of per-batch estimates.
pub const MC_BATCHES: usize = 100;

/// Minimum trial count accepted by the samplers.
pub const MIN_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianReport {
    pub d: usize,
    pub sigma: f64,
    pub c: f64,
    pub trials: usize,
    /// Mean of the free allocations `a_1 … a_{d−1}`.
    pub empirical_mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Covariance of the free allocations, `(d−1) × (d−1)`.
    pub empirical_cov: Vec<Vec<f64>>,
    pub cov_se: Vec<Vec<f64>>,
    /// `E[u_k | u_d = C]` for `k = 1 … d`.
    pub partial_sum_means: Vec<f64>,
    pub partial_sum_se: Vec<f64>,
    /// Mean and variance of the last allocation `a_d`.
    pub last_mean: f64,
    pub last_variance: f64,
}

impl BrownianReport {
    pub fn expected_mean(&self) -> f64 {
        self.c / self.d as f64
    }

    pub fn expected_cov(&self, i: usize, j: usize) -> f64 {
        let diag = if i == j { 1.0 } else { 0.0 };
        self.sigma * (diag - 1.0 / self.d as f64)
    }

    pub fn expected_partial_sum(&self, k: usize) -> f64 {
        k as f64 * self.c / self.d as f64
    }
}

fn bridge_sample(rng: &mut ChaCha8Rng, d: usize, std: f64, c: f64, out: &mut [f64]) {
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = std * z;
    }
    let shift = out.iter().sum::<f64>() / d as f64 - c / d as f64;
    for v in out.iter_mut() {
        *v -= shift;
    }
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

fn batch_sizes(trials: usize) -> Vec<usize> {
    (0..MC_BATCHES)
        .map(|b| trials / MC_BATCHES + usize::from(b < trials % MC_BATCHES))
        .collect()
}

fn check_mc_args(d: usize, sigma: f64, trials: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Input(format!("need d >= 2, got {d}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Input(format!("sigma must be positive, got {sigma}")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::Input(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    Ok(())
}

/// Raw moment sums of one batch.
#[derive(Clone)]
struct Moments {
    n: f64,
    sum: Vec<f64>,
    /// Upper triangle of Σ a_i a_j over the free coordinates, row-major.
    cross: Vec<f64>,
    partial: Vec<f64>,
    last_sq: f64,
}

impl Moments {
    fn new(d: usize) -> Self {
        let m = d - 1;
        Self {
            n: 0.0,
            sum: vec![0.0; d],
            cross: vec![0.0; m * m],
            partial: vec![0.0; d],
            last_sq: 0.0,
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
        for (a, b) in self.partial.iter_mut().zip(&other.partial) {
            *a += b;
        }
        self.last_sq += other.last_sq;
    }

    fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n
    }

    fn cov(&self, i: usize, j: usize, m: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        (self.cross[lo * m + hi] - self.n * self.mean(i) * self.mean(j)) / (self.n - 1.0)
    }
}

fn standard_error(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Samples the conditional allocation law `trials` times. Batches run in
/// parallel with per-batch streams derived from `seed`, so results do not
/// depend on the thread count.
pub fn sample_conditional_allocation(
    d: usize,
    sigma: f64,
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<BrownianReport> {
    check_mc_args(d, sigma, trials)?;
    let m = d - 1;
    let std = sigma.sqrt();
    let batches: Vec<Moments> = batch_sizes(trials)
        .into_par_iter()
        .enumerate()
        .map(|(b, size)| {
            let mut rng = batch_rng(seed, b);
            let mut acc = Moments::new(d);
            let mut a = vec![0.0; d];
            for _ in 0..size {
                bridge_sample(&mut rng, d, std, c, &mut a);
                acc.n += 1.0;
                let mut running = 0.0;
                for k in 0..d {
                    acc.sum[k] += a[k];
                    running += a[k];
                    acc.partial[k] += running;
                }
                for i in 0..m {
                    let row = &mut acc.cross[i * m..(i + 1) * m];
                    for j in i..m {
                        row[j] += a[i] * a[j];
                    }
                }
                acc.last_sq += a[m] * a[m];
            }
            acc
        })
        .collect();

    let mut total = Moments::new(d);
    for b in &batches {
        total.merge(b);
    }
    let empirical_mean = (0..m).map(|i| total.mean(i)).collect();
    let mean_se = (0..m)
        .map(|i| standard_error(batches.iter().map(|b| b.mean(i))))
        .collect();
    let empirical_cov = (0..m)
        .map(|i| (0..m).map(|j| total.cov(i, j, m)).collect())
        .collect();
    let cov_se = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| standard_error(batches.iter().map(|b| b.cov(i, j, m))))
                .collect()
        })
        .collect();
    let partial_sum_means = (0..d).map(|k| total.partial[k] / total.n).collect();
    let partial_sum_se = (0..d)
        .map(|k| standard_error(batches.iter().map(|b| b.partial[k] / b.n)))
        .collect();
    let last_mean = total.mean(m);
    let last_variance = (total.last_sq - total.n * last_mean * last_mean) / (total.n - 1.0);
    Ok(BrownianReport {
        d,
        sigma,
        c,
        trials,
        empirical_mean,
        mean_se,
        empirical_cov,
        cov_se,
        partial_sum_means,
        partial_sum_se,
        last_mean,
        last_variance,
    })
}

/// Off-diagonal conditional correlation at one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceRow {
    pub d: usize,
    /// `1/(d−1)`; `None` when there is no off-diagonal pair (`d = 2`).
    pub expected_abs_corr: Option<f64>,
    /// Pooled estimate of `|corr(a_i, a_j)|` over all free pairs.
    pub abs_corr: Option<f64>,
    pub se: Option<f64>,
    /// Largest `|corr(a_i, a_j)|` over individual pairs (only for `d <= 20`).
    pub max_pair_abs_corr: Option<f64>,
}

impl IndependenceRow {
    /// `| |corr| − 1/(d−1) | <= 3 SE`; trivially true when `d = 2`.
    pub fn within_three_se(&self) -> bool {
        match (self.abs_corr, self.expected_abs_corr, self.se) {
            (Some(est), Some(exp), Some(se)) => (est - exp).abs() <= 3.0 * se,
            _ => true,
        }
    }
}

/// Pooled correlation estimator from per-batch sums: the mean off-diagonal
/// covariance is `(Var(Σ_{i<d} a_i) − Σ_{i<d} Var(a_i)) / ((d−1)(d−2))`.
#[derive(Clone, Default)]
struct PooledMoments {
    n: f64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    total: f64,
    total_sq: f64,
}

impl PooledMoments {
    fn new(m: usize) -> Self {
        Self {
            sum: vec![0.0; m],
            sum_sq: vec![0.0; m],
            ..Self::default()
        }
    }

    fn merge(&mut self, o: &PooledMoments) {
        self.n += o.n;
        for i in 0..self.sum.len() {
            self.sum[i] += o.sum[i];
            self.sum_sq[i] += o.sum_sq[i];
        }
        self.total += o.total;
        self.total_sq += o.total_sq;
    }

    fn correlation(&self) -> f64 {
        let n = self.n;
        let m = self.sum.len() as f64;
        let var = |s: f64, sq: f64| (sq - s * s / n) / (n - 1.0);
        let var_sum: f64 = (0..self.sum.len())
            .map(|i| var(self.sum[i], self.sum_sq[i]))
            .sum();
        let mean_var = var_sum / m;
        let mean_cov = (var(self.total, self.total_sq) - var_sum) / (m * (m - 1.0));
        mean_cov / mean_var
    }
}

/// Tabulates the off-diagonal conditional correlation against `d`.
pub fn check_asymptotic_independence(
    d_list: &[usize],
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<IndependenceRow>> {
    if d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("d_list must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        check_mc_args(d, sigma, trials)?;
        if d == 2 {
            rows.push(IndependenceRow {
                d,
                expected_abs_corr: None,
                abs_corr: None,
                se: None,
                max_pair_abs_corr: None,
            });
            continue;
        }
        let m = d - 1;
        let std = sigma.sqrt();
        let row_seed = seed ^ (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let batches: Vec<PooledMoments> = batch_sizes(trials)
            .into_par_iter()
            .enumerate()
            .map(|(b, size)| {
                let mut rng = batch_rng(row_seed, b);
                let mut acc = PooledMoments::new(m);
                let mut a = vec![0.0; d];
                for _ in 0..size {
                    bridge_sample(&mut rng, d, std, 0.0, &mut a);
                    acc.n += 1.0;
                    let mut t = 0.0;
                    for i in 0..m {
                        acc.sum[i] += a[i];
                        acc.sum_sq[i] += a[i] * a[i];
                        t += a[i];
                    }
                    acc.total += t;
                    acc.total_sq += t * t;
                }
                acc
            })
            .collect();
        let mut pooled = PooledMoments::new(m);
        for b in &batches {
            pooled.merge(b);
        }
        let se = standard_error(batches.iter().map(|b| b.correlation().abs()));
        let max_pair_abs_corr = if d <= 20 {
            let report = sample_conditional_allocation(d, sigma, 0.0, trials, row_seed)?;
            let cov = &report.empirical_cov;
            let mut max = 0.0f64;
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        max = max.max((cov[i][j] / (cov[i][i] * cov[j][j]).sqrt()).abs());
                    }
                }
            }
            Some(max)
        } else {
            None
        };
        rows.push(IndependenceRow {
            d,
            expected_abs_corr: Some(1.0 / (d as f64 - 1.0)),
            abs_corr: Some(pooled.correlation().abs()),
            se: Some(se),
            max_pair_abs_corr,
        });
    }
    Ok(rows)
}

/// One instance of the brute-force comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    pub seed: u64,
    pub linear: bool,
    pub samp_variance: f64,
    pub best_variance: f64,
}

impl GapInstance {
    /// `samp / best`, or 1 when both are zero.
    pub fn ratio(&self) -> f64 {
        if self.best_variance == 0.0 {
            1.0
        } else {
            self.samp_variance / self.best_variance
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceStudy {
    pub d: usize,
    pub instances: Vec<GapInstance>,
}

impl BruteForceStudy {
    /// No instance beats the enumerated optimum by more than `slack`.
    pub fn never_above_optimum(&self, slack: f64) -> bool {
        self.instances
            .iter()
            .all(|g| g.samp_variance <= g.best_variance + slack)
    }

    /// Every linear instance reaches the optimum within `slack`.
    pub fn linear_exact(&self, slack: f64) -> bool {
        self.instances
            .iter()
            .filter(|g| g.linear)
            .all(|g| (g.samp_variance - g.best_variance).abs() <= slack)
    }

    /// Nonlinear instances whose ratio to the optimum is at least `fraction`.
    pub fn count_at_least(&self, fraction: f64) -> usize {
        self.instances
            .iter()
            .filter(|g| !g.linear && g.ratio() >= fraction)
            .count()
    }
}

/// He-initialised ReLU MLP with biases drawn from `U(−0.5, 0.5)`, so the
/// network is not piecewise linear through the origin.
pub fn random_relu_mlp(widths: &[usize], rng: &mut ChaCha8Rng, seed: u64) -> Result<crate::model::Model> {
    use crate::model::{Activation, Dense, Model};
    use rand::Rng;

    let base = Model::mlp_random(widths, Activation::Relu, seed)?;
    let layers = base
        .layers()
        .iter()
        .map(|layer| {
            let b = (0..layer.outputs()).map(|_| rng.random_range(-0.5..0.5)).collect();
            Dense::new(layer.weight.clone(), Tensor::from_vec(b)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Model::mlp(layers, Activation::Relu)
}

/// The class whose score rises most from `x0` to `x_t` (first on ties), the
/// analogue of explaining the evidence for a predicted class.
pub fn rising_class<M: Differentiable + ?Sized>(model: &M, x0: &Tensor, x_t: &Tensor) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for c in 0..model.num_classes() {
        let rise = model.forward(x_t, c)? - model.forward(x0, c)?;
        if rise > best.1 {
            best = (c, rise);
        }
    }
    Ok(best.0)
}

/// Compares plain SAMP (`s = 1`, no step bound, no momentum) with the
/// enumerated optimum on `mlps` random ReLU networks (see
/// [`random_relu_mlp`]) and `linears` random linear models over `d`
/// features. Instance `i` draws its model from `seed + i` and its input
/// uniformly from `[0, 1]^d`; the baseline is zero and the explained class
/// is [`rising_class`].
pub fn brute_force_study(d: usize, mlps: usize, linears: usize, seed: u64) -> Result<BruteForceStudy> {
    use crate::model::Model;
    use crate::samp::{samp_attribute, SampConfig};
    use rand::Rng;

    let cfg = SampConfig::plain(1)?;
    let instances = (0..mlps + linears)
        .into_par_iter()
        .map(|i| {
            let inst_seed = seed.wrapping_add(i as u64);
            let linear = i >= mlps;
            let mut rng = ChaCha8Rng::seed_from_u64(inst_seed);
            let model = if linear {
                let w = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                Model::linear(Tensor::new(vec![1, d], w)?, Tensor::from_vec(vec![0.0])?)?
            } else {
                random_relu_mlp(&[d, 8, 2], &mut rng, inst_seed)?
            };
            let x_t = Tensor::from_vec((0..d).map(|_| rng.random_range(0.0..1.0)).collect())?;
            let x0 = Tensor::zeros(&[d]);
            let class = rising_class(&model, &x0, &x_t)?;
            let (a, _) = samp_attribute(&model, class, &x0, &x_t, &cfg)?;
            let best = brute_force_optimal(&model, class, &x0, &x_t, 1)?;
            Ok(GapInstance {
                seed: inst_seed,
                linear,
                samp_variance: variance_objective(&a),
                best_variance: best.best_variance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BruteForceStudy { d, instances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Model};
    use crate::samp::{samp_attribute, SampConfig};

    fn factorial(n: u128) -> u128 {
        (1..=n).product()
    }

    #[test]
    fn counts_match_closed_form() {
        for d in 1..=6usize {
            for s in (1..=d).filter(|s| d % s == 0) {
                let e = enumerate_paths(d, s).unwrap();
                let expected = factorial(d as u128) / factorial(s as u128).pow((d / s) as u32);
                assert_eq!(e.count() as u128, expected, "d={d} s={s}");
            }
        }
        assert_eq!(enumerate_paths(4, 1).unwrap().count(), 24);
        assert_eq!(enumerate_paths(4, 2).unwrap().count(), 6);
        assert_eq!(enumerate_paths(1, 1).unwrap().count(), 1);
    }

    #[test]
    fn uneven_blocks() {
        // 5 = 2 + 2 + 1: 5!/(2!·2!·1!) ordered partitions
        let e = enumerate_paths(5, 2).unwrap();
        assert_eq!(e.count(), 30);
        assert!(e.paths.iter().all(|p| p.last().unwrap().len() == 1));
    }

    #[test]
    fn enumeration_is_a_set_of_partitions() {
        let e = enumerate_paths(5, 1).unwrap();
        let mut seen = std::collections::HashSet::new();
        for p in &e.paths {
            let mut flat: Vec<usize> = p.iter().flatten().copied().collect();
            assert!(seen.insert(flat.clone()), "duplicate path");
            flat.sort_unstable();
            assert_eq!(flat, (0..5).collect::<Vec<_>>());
        }
    }

    #[test]
    fn refuses_large_dimension() {
        match enumerate_paths(10, 1) {
            Err(Error::TooLarge { estimate, .. }) => assert!((estimate - 3_628_800.0).abs() < 1.0),
            other => panic!("expected refusal, got {other:?}"),
        }
        assert!(enumerate_paths(3, 0).is_err());
        assert!(enumerate_paths(3, 4).is_err());
    }

    #[test]
    fn realized_paths_are_manipulation_paths() {
        let x0 = Tensor::from_vec(vec![0.0, 0.5, 1.0, -1.0]).unwrap();
        let xt = Tensor::from_vec(vec![1.0, 0.25, -1.0, 2.0]).unwrap();
        for s in [1, 2, 4] {
            for blocks in enumerate_paths(4, s).unwrap().paths {
                let p = realize_path(&blocks, &x0, &xt).unwrap();
                p.check_manipulation_path(s).unwrap();
            }
        }
    }

    #[test]
    fn bilinear_hand_integration() {
        // f(x) = x0·x1 via the identity 4·x0·x1 = (x0+x1)² − (x0−x1)²
        struct Bilinear;
        impl Differentiable for Bilinear {
            fn input_dim(&self) -> usize {
                2
            }
            fn num_classes(&self) -> usize {
                1
            }
            fn forward(&self, x: &Tensor, _: usize) -> Result<f64> {
                Ok(x.data()[0] * x.data()[1])
            }
            fn gradient(&self, x: &Tensor, _: usize) -> Result<Tensor> {
                Tensor::from_vec(vec![x.data()[1], x.data()[0]])
            }
        }
        let x0 = Tensor::from_vec(vec![0.0, 0.0]).unwrap();
        let xt = Tensor::from_vec(vec![1.0, 1.0]).unwrap();
        let r = brute_force_optimal(&Bilinear, 0, &x0, &xt, 1).unwrap();
        assert_eq!(r.all_variances, vec![0.25, 0.25]);
        let first = integrate_path(&Bilinear, 0, &realize_path(&[vec![0], vec![1]], &x0, &xt).unwrap(), None).unwrap();
        assert_eq!(first.values.data(), &[0.0, 1.0]);
        let second = integrate_path(&Bilinear, 0, &realize_path(&[vec![1], vec![0]], &x0, &xt).unwrap(), None).unwrap();
        assert_eq!(second.values.data(), &[1.0, 0.0]);

        let (a, _) = samp_attribute(&Bilinear, 0, &x0, &xt, &SampConfig::plain(1).unwrap()).unwrap();
        assert_eq!(a.variance, 0.25);
    }

    #[test]
    fn linear_models_have_flat_landscapes() {
        let m = Model::linear(
            Tensor::new(vec![1, 4], vec![1.0, -2.0, 0.5, 3.0]).unwrap(),
            Tensor::zeros(&[1]),
        )
        .unwrap();
        let x0 = Tensor::zeros(&[4]);
        let xt = Tensor::from_vec(vec![0.3, 0.9, -0.4, 0.2]).unwrap();
        let r = brute_force_optimal(&m, 0, &x0, &xt, 1).unwrap();
        assert!(r.all_variances.iter().all(|v| (v - r.best_variance).abs() < 1e-12));
        let (a, _) = samp_attribute(&m, 0, &x0, &xt, &SampConfig::plain(1).unwrap()).unwrap();
        assert!((a.variance - r.best_variance).abs() < 1e-12);
    }

    #[test]
    fn samp_never_beats_the_optimum() {
        for seed in 0..10 {
            let m = Model::mlp_random(&[4, 6, 2], Activation::Relu, seed).unwrap();
            let x0 = Tensor::zeros(&[4]);
            let xt = Tensor::from_vec(vec![0.9, 0.2, 0.6, 0.4]).unwrap();
            let r = brute_force_optimal(&m, 1, &x0, &xt, 1).unwrap();
            let (a, path) = samp_attribute(&m, 1, &x0, &xt, &SampConfig::plain(1).unwrap()).unwrap();
            assert!(a.variance <= r.best_variance + 1e-9);
            // the greedy path is one of the enumerated ones
            let blocks = path.touched_indices();
            let idx = enumerate_paths(4, 1).unwrap().paths.iter().position(|p| *p == blocks).unwrap();
            assert!((r.all_variances[idx] - a.variance).abs() < 1e-12);
        }
    }

    #[test]
    fn small_bridge_run_is_deterministic_and_centred() {
        let a = sample_conditional_allocation(4, 2.0, 3.0, 20_000, 5).unwrap();
        let b = sample_conditional_allocation(4, 2.0, 3.0, 20_000, 5).unwrap();
        assert_eq!(a, b);
        // u_d = C on every sample
        assert!((a.partial_sum_means[3] - 3.0).abs() < 1e-9);
        assert!(a.partial_sum_se[3] < 1e-9);
        for i in 0..3 {
            assert!((a.empirical_mean[i] - 0.75).abs() < 5.0 * a.mean_se[i]);
            assert!((a.empirical_cov[i][i] - a.expected_cov(i, i)).abs() < 5.0 * a.cov_se[i][i]);
        }
        assert!(sample_conditional_allocation(4, 1.0, 0.0, 100, 1).is_err());
        assert!(sample_conditional_allocation(4, 0.0, 0.0, 20_000, 1).is_err());
    }

    #[test]
    fn independence_table_shape() {
        let rows = check_asymptotic_independence(&[2, 6], 1.0, 20_000, 3).unwrap();
        assert!(rows[0].abs_corr.is_none() && rows[0].within_three_se());
        let r = &rows[1];
        assert!((r.abs_corr.unwrap() - 0.2).abs() < 5.0 * r.se.unwrap());
        assert!(r.max_pair_abs_corr.unwrap() >= r.abs_corr.unwrap() - 0.05);
        assert!(check_asymptotic_independence(&[6, 6], 1.0, 20_000, 3).is_err());
    }
}
