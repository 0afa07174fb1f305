//! Subcommand implementations. Each takes a resolved [`RunConfig`], writes
//! its artifacts under `out_dir`, records them in the manifest and returns
//! a report for the caller to print.

use std::path::Path;

use rayon::prelude::*;
use samp_core::dataset::{blob_images, Dataset};
use samp_core::export::{attribution_csv, saliency_pgm, write_path};
use samp_core::io::{load_model, read_csv_row, read_pgm_image, save_model};
use samp_core::method::Method;
use samp_core::metrics::{
    deletion_insertion_with_baseline, make_baseline, median, pearson, sensitivity_sweep, CurveMode,
    MetricCurve, ScoreKind, SensitivityRow, Summary,
};
use samp_core::model::{Activation, Model};
use samp_core::oracle::{
    brute_force_study, check_asymptotic_independence, enumerate_paths, sample_conditional_allocation,
    IndependenceRow,
};
use samp_core::path::{variance_objective, Attribution};
use samp_core::samp::{Direction, SampConfig, StepBound};
use samp_core::train::{predict, train_fixture, TrainConfig};
use samp_core::{Differentiable, Tensor};
use serde::{Deserialize, Serialize};

use crate::config::{method_slug, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, OutputDir};

fn with_pool<T: Send>(cfg: &RunConfig, job: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

fn inferred_shape(len: usize) -> Vec<usize> {
    let side = (len as f64).sqrt().round() as usize;
    if side * side == len && len > 1 {
        vec![side, side]
    } else {
        vec![len]
    }
}

fn shape_for(cfg: &RunConfig, len: usize) -> CliResult<Vec<usize>> {
    match &cfg.shape {
        Some(shape) if shape.iter().product::<usize>() == len => Ok(shape.clone()),
        Some(shape) => Err(CliError::Core(samp_core::Error::ShapeMismatch {
            expected: shape.clone(),
            actual: vec![len],
        })),
        None => Ok(inferred_shape(len)),
    }
}

/// Loads the configured dataset, shaping every row per [`RunConfig::shape`].
pub fn load_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    let path = cfg.require_dataset()?;
    if !path.exists() {
        return Err(CliError::Usage(format!("dataset not found: {}", path.display())));
    }
    let flat = Dataset::load_csv(path, None)?;
    let shape = shape_for(cfg, flat.feature_count())?;
    let inputs = flat
        .inputs()
        .iter()
        .map(|x| x.reshape(shape.clone()))
        .collect::<samp_core::Result<Vec<_>>>()?;
    Ok(Dataset::new(inputs, flat.labels().to_vec())?)
}

fn load_configured_model(cfg: &RunConfig) -> CliResult<Model> {
    let path = cfg.require_model()?;
    if !path.exists() {
        return Err(CliError::Usage(format!("model not found: {}", path.display())));
    }
    Ok(load_model(path)?)
}

fn check_dims(model: &Model, x: &Tensor) -> CliResult<()> {
    if x.len() != model.input_dim() {
        return Err(CliError::Core(samp_core::Error::ShapeMismatch {
            expected: vec![model.input_dim()],
            actual: x.shape().to_vec(),
        }));
    }
    Ok(())
}

// ---------------------------------------------------------------- gen-data

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenDataReport {
    pub train: String,
    pub heldout: String,
    pub train_size: usize,
    pub heldout_size: usize,
    pub side: usize,
}

/// Writes `train.csv` and `heldout.csv` blob-image datasets; the held-out
/// set uses `seed + 1`.
pub fn cmd_gen_data(cfg: &RunConfig) -> CliResult<GenDataReport> {
    if cfg.image_side < 2 || cfg.train_size == 0 {
        return Err(CliError::Usage("image_side must be at least 2 and train_size positive".into()));
    }
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let train = blob_images(cfg.train_size, cfg.image_side, cfg.seed);
    let heldout = blob_images(cfg.heldout_size, cfg.image_side, cfg.seed.wrapping_add(1));
    let train_path = out.write("train.csv", train.to_csv().as_bytes())?;
    let heldout_path = out.write("heldout.csv", heldout.to_csv().as_bytes())?;
    out.finish("gen-data", cfg)?;
    Ok(GenDataReport {
        train: train_path.display().to_string(),
        heldout: heldout_path.display().to_string(),
        train_size: cfg.train_size,
        heldout_size: cfg.heldout_size,
        side: cfg.image_side,
    })
}

// ----------------------------------------------------------- train-fixture

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub final_accuracy: f64,
    pub final_loss: f64,
    pub model: String,
    /// SHA-256 of the parameter blob.
    pub blob_sha256: String,
}

/// Trains an MLP `[d, hidden, classes]` with ReLU on the configured dataset
/// and writes `model.json`, `model.bin` and `train_log.json`.
pub fn cmd_train_fixture(cfg: &RunConfig) -> CliResult<TrainReport> {
    let data = load_dataset(cfg)?;
    let classes = data.num_classes().max(2);
    let init = Model::mlp_random(&[data.feature_count(), cfg.hidden, classes], Activation::Relu, cfg.seed)?;
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        seed: cfg.seed,
    };
    let (model, log) = train_fixture(&init, &data, &train_cfg)?;
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let model_path = out.path("model.json");
    save_model(&model, &model_path)?;
    out.adopt("model.json")?;
    out.adopt("model.bin")?;
    out.write_json("train_log.json", &log)?;
    out.finish("train-fixture", cfg)?;
    let blob = std::fs::read(out_path(cfg, "model.bin"))
        .map_err(|e| CliError::Usage(format!("cannot read model blob: {e}")))?;
    Ok(TrainReport {
        seed: log.seed,
        final_accuracy: log.final_accuracy,
        final_loss: log.epoch_losses.last().copied().unwrap_or(f64::NAN),
        model: model_path.display().to_string(),
        blob_sha256: sha256_hex(&blob),
    })
}

fn out_path(cfg: &RunConfig, name: &str) -> std::path::PathBuf {
    cfg.out_dir.join(name)
}

// --------------------------------------------------------------- attribute

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub delta_y: f64,
    pub completeness_gap: f64,
    pub variance_objective: f64,
    pub steps: usize,
    pub telescoping_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub method: String,
    pub class: usize,
    pub delta_y: f64,
    pub completeness_gap: f64,
    pub relative_gap: f64,
    pub variance_objective: f64,
    pub to_baseline: Option<DirectionSummary>,
    pub to_target: Option<DirectionSummary>,
    pub artifacts: Vec<String>,
}

fn read_input(cfg: &RunConfig, model: &Model) -> CliResult<Tensor> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("no input given (set \"input\" or --input)".into()))?;
    if !path.exists() {
        return Err(CliError::Usage(format!("input not found: {}", path.display())));
    }
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let x = if is_pgm {
        read_pgm_image(path)?
    } else {
        let flat = read_csv_row(path, cfg.row, model.input_dim())?;
        flat.reshape(shape_for(cfg, flat.len())?)?
    };
    check_dims(model, &x)?;
    Ok(x)
}

fn direction_summary(run: &Option<(Attribution, samp_core::path::PathSegments)>) -> Option<DirectionSummary> {
    run.as_ref().map(|(a, p)| DirectionSummary {
        delta_y: a.delta_y,
        completeness_gap: a.completeness_gap,
        variance_objective: variance_objective(a),
        steps: p.len(),
        telescoping_error: p.telescoping_error(),
    })
}

/// Explains one input and writes attribution CSVs, a saliency PGM (for 2-D
/// inputs), path headers and blobs, and a JSON summary, all prefixed by the
/// method name.
pub fn cmd_attribute(cfg: &RunConfig) -> CliResult<AttributeReport> {
    let model = load_configured_model(cfg)?;
    let x = read_input(cfg, &model)?;
    let class = match cfg.class {
        Some(c) if c >= model.num_classes() => {
            return Err(CliError::Usage(format!(
                "class {c} out of range for a model with {} classes",
                model.num_classes()
            )))
        }
        Some(c) => c,
        None => predict(&model, &x)?,
    };
    let method = cfg.method_named(&cfg.method)?;
    let (del, ins) = cfg.baselines_for(0);
    let x0_back = make_baseline(&x, &del)?;
    let x0_forth = make_baseline(&x, &ins)?;
    let run = method.explain_split(&model, class, &x0_back, &x0_forth, &x)?;

    let slug = method_slug(&cfg.method);
    let samp_cfg = match method {
        Method::Samp(c) => Some(c),
        Method::Ig { .. } => None,
    };
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut written = Vec::new();
    let emit = |out: &mut OutputDir, written: &mut Vec<String>, name: String, bytes: &[u8]| -> CliResult<()> {
        out.write(&name, bytes)?;
        written.push(name);
        Ok(())
    };
    emit(&mut out, &mut written, format!("{slug}_attribution.csv"), attribution_csv(&run.combined.values).as_bytes())?;
    if x.shape().len() == 2 {
        let (h, w) = (x.shape()[0], x.shape()[1]);
        let (pgm, scaling) = saliency_pgm(&run.combined.values, h, w)?;
        emit(&mut out, &mut written, format!("{slug}_saliency.pgm"), &pgm)?;
        emit(&mut out, &mut written, format!("{slug}_saliency.json"), &crate::manifest::pretty_json(&scaling))?;
    }
    for (label, part) in [("to_baseline", &run.to_baseline), ("to_target", &run.to_target)] {
        if let Some((a, path)) = part {
            if run.to_baseline.is_some() && run.to_target.is_some() {
                emit(&mut out, &mut written, format!("{slug}_{label}_attribution.csv"), attribution_csv(&a.values).as_bytes())?;
            }
            let stem = format!("{slug}_path_{label}");
            write_path(out.root(), &stem, path, samp_cfg.as_ref())?;
            for ext in ["json", "bin"] {
                let name = format!("{stem}.{ext}");
                out.adopt(&name)?;
                written.push(name);
            }
        }
    }
    let report = AttributeReport {
        method: cfg.method.clone(),
        class,
        delta_y: run.combined.delta_y,
        completeness_gap: run.combined.completeness_gap,
        relative_gap: run.combined.relative_gap(),
        variance_objective: variance_objective(&run.combined),
        to_baseline: direction_summary(&run.to_baseline),
        to_target: direction_summary(&run.to_target),
        artifacts: Vec::new(),
    };
    let summary_name = format!("{slug}_summary.json");
    out.write_json(&summary_name, &report)?;
    written.push(summary_name);
    out.finish(&format!("attribute:{slug}"), cfg)?;
    Ok(AttributeReport {
        artifacts: written,
        ..report
    })
}

// ---------------------------------------------------------------- evaluate

/// Deletion/Insertion results of one method over the evaluated inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub deletion: Vec<f64>,
    pub insertion: Vec<f64>,
    /// `|Σa − Δy| / |Δy|` of the attribution used for the curves.
    pub relative_gap: Vec<f64>,
}

struct InputScore {
    deletion: MetricCurve,
    insertion: MetricCurve,
    relative_gap: f64,
}

fn score_inputs(
    model: &Model,
    data: &Dataset,
    cfg: &RunConfig,
    method: &Method,
    class_override: Option<usize>,
) -> CliResult<Vec<InputScore>> {
    let n = cfg.inputs.min(data.len());
    let run = || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let x = &data.inputs()[i];
                let class = class_override.unwrap_or(data.labels()[i]);
                let (del, ins) = cfg.baselines_for(i);
                let x0_back = make_baseline(x, &del)?;
                let x0_forth = make_baseline(x, &ins)?;
                let a = method.explain_split(model, class, &x0_back, &x0_forth, x)?.combined;
                let curve = |mode, base: &Tensor| {
                    deletion_insertion_with_baseline(
                        model,
                        class,
                        x,
                        &a.values,
                        mode,
                        cfg.metric_step,
                        base,
                        ScoreKind::Logit,
                    )
                };
                Ok(InputScore {
                    deletion: curve(CurveMode::Deletion, &x0_back)?,
                    insertion: curve(CurveMode::Insertion, &x0_forth)?,
                    relative_gap: a.relative_gap(),
                })
            })
            .collect::<samp_core::Result<Vec<_>>>()
    };
    Ok(with_pool(cfg, run)??)
}

fn collect_scores(scores: &[InputScore]) -> MethodScores {
    MethodScores {
        deletion: scores.iter().map(|s| s.deletion.auc).collect(),
        insertion: scores.iter().map(|s| s.insertion.auc).collect(),
        relative_gap: scores.iter().map(|s| s.relative_gap).collect(),
    }
}

/// Scores `method` on the first `cfg.inputs` rows of `data`, explaining each
/// row's label.
pub fn score_method(model: &Model, data: &Dataset, cfg: &RunConfig, method: &Method) -> CliResult<MethodScores> {
    Ok(collect_scores(&score_inputs(model, data, cfg, method, None)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub deletion: Summary,
    pub insertion: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub config_hash: String,
    pub seed: u64,
    pub inputs: usize,
    pub baseline: String,
    pub metric_step: usize,
    pub methods: Vec<MethodRow>,
}

impl EvaluateReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.methods.iter().find(|r| r.method == method)
    }
}

/// Deletion/Insertion AUC summaries per method (`evaluate.json`), per-input
/// AUCs (`evaluate_inputs.csv`) and every curve under `curves/<method>/`.
pub fn cmd_evaluate(cfg: &RunConfig) -> CliResult<EvaluateReport> {
    let model = load_configured_model(cfg)?;
    let data = load_dataset(cfg)?;
    data.check_labels(model.num_classes())?;
    if let Some(x) = data.inputs().first() {
        check_dims(&model, x)?;
    }
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut rows = Vec::new();
    let mut per_input = String::from("method,input,deletion_auc,insertion_auc\n");
    for name in &cfg.methods {
        let method = cfg.method_named(name)?;
        let scores = score_inputs(&model, &data, cfg, &method, None)?;
        let slug = method_slug(name);
        for (i, s) in scores.iter().enumerate() {
            out.write(&format!("curves/{slug}/{i:03}_deletion.csv"), s.deletion.to_csv().as_bytes())?;
            out.write(&format!("curves/{slug}/{i:03}_insertion.csv"), s.insertion.to_csv().as_bytes())?;
            per_input.push_str(&format!("{name},{i},{},{}\n", s.deletion.auc, s.insertion.auc));
        }
        let collected = collect_scores(&scores);
        rows.push(MethodRow {
            method: name.clone(),
            deletion: Summary::of(&collected.deletion),
            insertion: Summary::of(&collected.insertion),
        });
    }
    let report = EvaluateReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        inputs: cfg.inputs.min(data.len()),
        baseline: cfg.baseline.to_string(),
        metric_step: cfg.metric_step,
        methods: rows,
    };
    out.write("evaluate_inputs.csv", per_input.as_bytes())?;
    out.write_json("evaluate.json", &report)?;
    out.finish("evaluate", cfg)?;
    Ok(report)
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub eta_ratio: f64,
    pub median_relative_gap: f64,
    pub deletion_median: f64,
    pub insertion_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingRow {
    pub setting: String,
    pub deletion: Summary,
    pub insertion: Summary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub eta: Option<Vec<EtaRow>>,
    pub lambda: Option<Vec<SettingRow>>,
    pub direction: Option<Vec<SettingRow>>,
    pub sensitivity: Option<Vec<SensitivityRow>>,
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::ToBaseline => "to_baseline",
        Direction::ToTarget => "to_target",
        Direction::Both => "both",
    }
}

fn setting_csv(header: &str, rows: &[SettingRow]) -> String {
    let mut csv = format!(
        "{header},deletion_mean,deletion_std,deletion_median,insertion_mean,insertion_std,insertion_median\n"
    );
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.setting,
            r.deletion.mean,
            r.deletion.std,
            r.deletion.median,
            r.insertion.mean,
            r.insertion.std,
            r.insertion.median
        ));
    }
    csv
}

fn improved(cfg: &RunConfig) -> CliResult<SampConfig> {
    cfg.samp_config("samp++")
}

/// SAMP++ under each direction setting (removal search only, insertion
/// search only, both summed).
pub fn direction_table(model: &Model, data: &Dataset, cfg: &RunConfig) -> CliResult<Vec<SettingRow>> {
    cfg.directions
        .iter()
        .map(|&d| {
            let method = Method::Samp(improved(cfg)?.with_direction(d));
            let s = score_method(model, data, cfg, &method)?;
            Ok(SettingRow {
                setting: direction_name(d).into(),
                deletion: Summary::of(&s.deletion),
                insertion: Summary::of(&s.insertion),
            })
        })
        .collect()
}

/// Runs the configured sweeps (`sweep` = eta, lambda, direction,
/// sensitivity or all) and writes one CSV per swept parameter.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepReport> {
    use crate::config::SweepKind as K;
    let model = load_configured_model(cfg)?;
    let data = load_dataset(cfg)?;
    data.check_labels(model.num_classes())?;
    let wants = |k: K| cfg.sweep == k || cfg.sweep == K::All;
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut report = SweepReport::default();

    if wants(K::Eta) {
        if cfg.eta_grid.is_empty() {
            return Err(CliError::Usage("eta_grid is empty".into()));
        }
        let mut rows = Vec::new();
        let mut csv = String::from("eta_ratio,median_relative_gap,deletion_median,insertion_median\n");
        for &ratio in &cfg.eta_grid {
            let method = Method::Samp(improved(cfg)?.with_eta(StepBound::Ratio(ratio))?);
            let s = score_method(&model, &data, cfg, &method)?;
            let row = EtaRow {
                eta_ratio: ratio,
                median_relative_gap: median(&s.relative_gap),
                deletion_median: median(&s.deletion),
                insertion_median: median(&s.insertion),
            };
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.eta_ratio, row.median_relative_gap, row.deletion_median, row.insertion_median
            ));
            rows.push(row);
        }
        out.write("sweep_eta.csv", csv.as_bytes())?;
        report.eta = Some(rows);
    }
    if wants(K::Lambda) {
        if cfg.lambda_grid.is_empty() {
            return Err(CliError::Usage("lambda_grid is empty".into()));
        }
        let rows = cfg
            .lambda_grid
            .iter()
            .map(|&lambda| {
                let method = Method::Samp(improved(cfg)?.with_momentum(lambda)?);
                let s = score_method(&model, &data, cfg, &method)?;
                Ok(SettingRow {
                    setting: lambda.to_string(),
                    deletion: Summary::of(&s.deletion),
                    insertion: Summary::of(&s.insertion),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        out.write("sweep_lambda.csv", setting_csv("lambda", &rows).as_bytes())?;
        report.lambda = Some(rows);
    }
    if wants(K::Direction) {
        if cfg.directions.is_empty() {
            return Err(CliError::Usage("directions is empty".into()));
        }
        let rows = direction_table(&model, &data, cfg)?;
        out.write("sweep_direction.csv", setting_csv("direction", &rows).as_bytes())?;
        report.direction = Some(rows);
    }
    if wants(K::Sensitivity) {
        let n = cfg.inputs.min(data.len());
        let class = cfg.class.unwrap_or(0);
        let samp_cfg = improved(cfg)?;
        let rows = with_pool(cfg, || {
            sensitivity_sweep(&model, class, &data.inputs()[..n], &cfg.deletion_baseline(), &cfg.betas, &samp_cfg)
        })??;
        let mut csv = String::from("beta,correlation,median_relative_gap\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{}\n", r.beta, r.correlation, r.median_relative_gap));
        }
        out.write("sweep_sensitivity.csv", csv.as_bytes())?;
        report.sensitivity = Some(rows);
    }
    out.write_json("sweep.json", &report)?;
    out.finish("sweep", cfg)?;
    Ok(report)
}

// ------------------------------------------------------------------ verify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn enumeration_check() -> CliResult<CheckResult> {
    let mut rows = Vec::new();
    let mut passed = true;
    for d in 1..=6usize {
        for s in (1..=d).filter(|s| d % s == 0) {
            let count = enumerate_paths(d, s)?.count() as u128;
            let expected = factorial(d) / factorial(s).pow((d / s) as u32);
            passed &= count == expected;
            rows.push(serde_json::json!({"d": d, "s": s, "count": count, "expected": expected}));
        }
    }
    Ok(CheckResult {
        name: "enumeration_count".into(),
        passed,
        detail: serde_json::json!({"cases": rows}),
    })
}

/// Fraction of the enumerated optimum plain SAMP is expected to reach.
pub const REGRESSION_FRACTION: f64 = 0.8;

fn brute_force_check(cfg: &RunConfig) -> CliResult<CheckResult> {
    let study = brute_force_study(4, cfg.brute_force_instances, cfg.brute_force_linear, cfg.seed)?;
    let max_excess = study
        .instances
        .iter()
        .map(|g| g.samp_variance - g.best_variance)
        .fold(f64::NEG_INFINITY, f64::max);
    let never_above = study.never_above_optimum(1e-9);
    let linear_exact = study.linear_exact(1e-9);
    let ratios: Vec<f64> = study.instances.iter().filter(|g| !g.linear).map(|g| g.ratio()).collect();
    Ok(CheckResult {
        name: "brute_force_gap".into(),
        passed: never_above && linear_exact,
        detail: serde_json::json!({
            "d": study.d,
            "mlp_instances": cfg.brute_force_instances,
            "linear_instances": cfg.brute_force_linear,
            "max_excess_over_optimum": max_excess,
            "never_above_optimum": never_above,
            "linear_exact": linear_exact,
            "median_ratio_to_optimum": median(&ratios),
            "at_least_0_8_of_optimum": study.count_at_least(REGRESSION_FRACTION),
        }),
    })
}

fn brownian_checks(cfg: &RunConfig) -> CliResult<Vec<CheckResult>> {
    let r = sample_conditional_allocation(5, 1.0, 0.0, cfg.trials, cfg.seed)?;
    let free = r.empirical_mean.len();
    let mut worst_cov_z = 0.0f64;
    let mut worst_mean_z = 0.0f64;
    let mut off_diag = Vec::new();
    for i in 0..free {
        worst_mean_z = worst_mean_z.max((r.empirical_mean[i] - r.expected_mean()).abs() / r.mean_se[i]);
        for j in 0..free {
            if i != j {
                off_diag.push(r.empirical_cov[i][j]);
                worst_cov_z = worst_cov_z.max((r.empirical_cov[i][j] - r.expected_cov(i, j)).abs() / r.cov_se[i][j]);
            }
        }
    }
    let mean_cov = off_diag.iter().sum::<f64>() / off_diag.len() as f64;
    let mean_cov_se = (0..free)
        .flat_map(|i| (0..free).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| r.cov_se[i][j])
        .sum::<f64>()
        / off_diag.len() as f64;
    let cov_check = CheckResult {
        name: "brownian_covariance".into(),
        passed: worst_cov_z <= 3.0 && worst_mean_z <= 3.0,
        detail: serde_json::json!({
            "d": 5, "sigma": 1.0, "c": 0.0, "trials": r.trials,
            "expected_cov": r.expected_cov(0, 1),
            "mean_off_diagonal_cov": mean_cov,
            "typical_cov_se": mean_cov_se,
            "worst_cov_z": worst_cov_z,
            "worst_mean_z": worst_mean_z,
            "last_mean": r.last_mean,
            "last_variance": r.last_variance,
        }),
    };

    let drift = sample_conditional_allocation(5, 1.0, 10.0, cfg.trials, cfg.seed.wrapping_add(1))?;
    let mut rows = Vec::new();
    let mut passed = true;
    for k in 1..=4 {
        let err = (drift.partial_sum_means[k - 1] - drift.expected_partial_sum(k)).abs();
        let ok = err <= 3.0 * drift.partial_sum_se[k - 1];
        passed &= ok;
        rows.push(serde_json::json!({
            "k": k,
            "mean": drift.partial_sum_means[k - 1],
            "se": drift.partial_sum_se[k - 1],
            "expected": drift.expected_partial_sum(k),
        }));
    }
    let drift_check = CheckResult {
        name: "brownian_drift".into(),
        passed,
        detail: serde_json::json!({"d": 5, "sigma": 1.0, "c": 10.0, "partial_sums": rows}),
    };
    Ok(vec![cov_check, drift_check])
}

fn independence_check(cfg: &RunConfig) -> CliResult<CheckResult> {
    let rows: Vec<IndependenceRow> = check_asymptotic_independence(&[2, 10, 100], 1.0, cfg.trials, cfg.seed)?;
    let estimates: Vec<f64> = rows.iter().filter_map(|r| r.abs_corr).collect();
    let decreasing = estimates.windows(2).all(|w| w[1] < w[0]);
    let passed = decreasing && rows.iter().all(IndependenceRow::within_three_se);
    Ok(CheckResult {
        name: "asymptotic_independence".into(),
        passed,
        detail: serde_json::json!({"rows": rows, "decreasing": decreasing}),
    })
}

/// Runs every oracle check and writes `verify.json`. The caller decides the
/// exit status from [`VerifyReport::passed`].
pub fn cmd_verify(cfg: &RunConfig) -> CliResult<VerifyReport> {
    let checks = with_pool(cfg, || -> CliResult<Vec<CheckResult>> {
        let mut checks = vec![enumeration_check()?, brute_force_check(cfg)?];
        checks.extend(brownian_checks(cfg)?);
        checks.push(independence_check(cfg)?);
        Ok(checks)
    })??;
    let report = VerifyReport {
        seed: cfg.seed,
        trials: cfg.trials,
        checks,
    };
    let mut out = OutputDir::create(&cfg.out_dir)?;
    out.write_json("verify.json", &report)?;
    out.finish("verify", cfg)?;
    Ok(report)
}

/// Pearson correlation of two AUC columns; used by sweep summaries.
pub fn correlation(xs: &[f64], ys: &[f64]) -> CliResult<f64> {
    Ok(pearson(xs, ys)?)
}

/// Checks that a directory holds a manifest; used by tests and scripts.
pub fn has_manifest(dir: &Path) -> bool {
    dir.join(crate::manifest::MANIFEST_FILE).exists()
}
