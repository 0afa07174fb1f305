//! Run configuration: a flat JSON file whose fields can be overridden by
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use samp_core::metrics::{BaselineKind, BaselineSpec};
use samp_core::method::Method;
use samp_core::samp::{Direction, SampConfig, StepBound};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Step bound as a fraction of the path length, or `"unbounded"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaRatio {
    Ratio(f64),
    Unbounded(UnboundedTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnboundedTag {
    #[serde(rename = "unbounded")]
    Unbounded,
}

impl EtaRatio {
    pub const UNBOUNDED: EtaRatio = EtaRatio::Unbounded(UnboundedTag::Unbounded);

    pub fn bound(self) -> StepBound {
        match self {
            EtaRatio::Ratio(r) => StepBound::Ratio(r),
            EtaRatio::Unbounded(_) => StepBound::Unbounded,
        }
    }
}

/// Accepts `unbounded`, a decimal, or a fraction such as `1/50`.
impl FromStr for EtaRatio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unbounded") {
            return Ok(Self::UNBOUNDED);
        }
        parse_fraction(s).map(EtaRatio::Ratio)
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let bad = || format!("expected a number or a fraction like 1/50, got {s:?}");
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            Ok(num / den)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Baseline pair written `deletion+insertion` (e.g. `black+blur`); a single
/// name applies to both sides. Names: black, white, uniform, gaussian, blur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselinePair {
    pub deletion: String,
    pub insertion: String,
}

const BASELINE_NAMES: [&str; 5] = ["black", "white", "uniform", "gaussian", "blur"];

impl FromStr for BaselinePair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (del, ins) = s.split_once('+').unwrap_or((s, s));
        let (del, ins) = (del.trim().to_ascii_lowercase(), ins.trim().to_ascii_lowercase());
        for name in [&del, &ins] {
            if !BASELINE_NAMES.contains(&name.as_str()) {
                return Err(format!(
                    "unknown baseline {name:?} (expected one of {})",
                    BASELINE_NAMES.join(", ")
                ));
            }
        }
        Ok(Self {
            deletion: del,
            insertion: ins,
        })
    }
}

impl fmt::Display for BaselinePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deletion == self.insertion {
            f.write_str(&self.deletion)
        } else {
            write!(f, "{}+{}", self.deletion, self.insertion)
        }
    }
}

impl Serialize for BaselinePair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BaselinePair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Which parameter `sweep` varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Eta,
    Lambda,
    Direction,
    Sensitivity,
    All,
}

/// Every setting any subcommand reads. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads for per-input work; 1 keeps runs single-threaded.
    pub threads: usize,

    pub model: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    /// Shape of one input; defaults to a square image when the feature count
    /// is a perfect square, otherwise a flat vector.
    pub shape: Option<Vec<usize>>,

    // gen-data
    pub train_size: usize,
    pub heldout_size: usize,
    pub image_side: usize,

    // train-fixture
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,

    // attribute
    /// A PGM image or a CSV file (see `row`).
    pub input: Option<PathBuf>,
    pub row: usize,
    /// Explained class; defaults to the label (evaluate) or the prediction
    /// (attribute).
    pub class: Option<usize>,
    pub method: String,

    // evaluate / sweep
    pub methods: Vec<String>,
    /// Number of leading dataset rows used.
    pub inputs: usize,

    // search
    pub step_pixels: usize,
    pub eta_ratio: EtaRatio,
    pub lambda: f64,
    pub direction: Direction,
    pub ig_steps: usize,

    // baselines and metrics
    pub baseline: BaselinePair,
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub metric_step: usize,

    // sweeps
    pub sweep: SweepKind,
    pub eta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub directions: Vec<Direction>,
    pub betas: Vec<f64>,

    // verify
    pub trials: usize,
    pub brute_force_instances: usize,
    pub brute_force_linear: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            threads: 1,
            model: None,
            dataset: None,
            shape: None,
            train_size: 400,
            heldout_size: 50,
            image_side: 8,
            hidden: 32,
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            input: None,
            row: 0,
            class: None,
            method: "samp++".into(),
            methods: vec!["ig".into(), "samp".into(), "samp++".into()],
            inputs: 50,
            step_pixels: 1,
            eta_ratio: EtaRatio::Ratio(0.1),
            lambda: 0.5,
            direction: Direction::Both,
            ig_steps: samp_core::method::DEFAULT_IG_STEPS,
            baseline: BaselinePair {
                deletion: "black".into(),
                insertion: "blur".into(),
            },
            blur_kernel: 11,
            blur_sigma: 5.0,
            metric_step: 1,
            sweep: SweepKind::All,
            eta_grid: vec![0.1, 0.02, 0.01],
            lambda_grid: vec![0.0, 0.3, 0.5, 0.9],
            directions: vec![Direction::ToBaseline, Direction::ToTarget, Direction::Both],
            betas: vec![10.0, 50.0, 100.0],
            trials: 1_000_000,
            brute_force_instances: 100,
            brute_force_linear: 20,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON form, leaving out settings that do not
    /// affect results (output directory, thread count).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        canonical.threads = 1;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.threads == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        if self.metric_step == 0 {
            return Err(CliError::Usage("metric_step must be at least 1".into()));
        }
        if self.blur_kernel.is_multiple_of(2) {
            return Err(CliError::Usage(format!(
                "blur_kernel must be odd, got {}",
                self.blur_kernel
            )));
        }
        self.samp_config(&self.method)?;
        for m in &self.methods {
            self.method_named(m)?;
        }
        self.deletion_baseline().validate()?;
        Ok(())
    }

    /// Search settings for `samp` (unbounded, no momentum) or `samp++`.
    pub fn samp_config(&self, method: &str) -> CliResult<SampConfig> {
        let eta = self.eta_ratio.bound();
        let cfg = match method {
            "samp" => SampConfig::new(self.step_pixels, StepBound::Unbounded, 0.0, self.direction)?,
            _ => SampConfig::new(self.step_pixels, eta, self.lambda, self.direction)?,
        };
        Ok(cfg)
    }

    pub fn method_named(&self, name: &str) -> CliResult<Method> {
        Ok(Method::from_name(
            name,
            self.samp_config("samp")?,
            self.samp_config("samp++")?,
            self.ig_steps,
        )?)
    }

    fn baseline_spec(&self, name: &str, seed: u64) -> BaselineSpec {
        let kind = match name {
            "white" => BaselineKind::White,
            "uniform" => BaselineKind::UniformRandom,
            "gaussian" => BaselineKind::GaussianRandom,
            "blur" => BaselineKind::GaussianBlur {
                kernel_size: self.blur_kernel,
                sigma: self.blur_sigma,
            },
            _ => BaselineKind::Black,
        };
        BaselineSpec { kind, seed }
    }

    /// Baseline for deletion curves and removal searches.
    pub fn deletion_baseline(&self) -> BaselineSpec {
        self.baseline_spec(&self.baseline.deletion, self.seed)
    }

    /// Baseline for insertion curves and insertion searches.
    pub fn insertion_baseline(&self) -> BaselineSpec {
        self.baseline_spec(&self.baseline.insertion, self.seed)
    }

    /// Per-input baselines; random kinds draw from `seed + index`.
    pub fn baselines_for(&self, index: usize) -> (BaselineSpec, BaselineSpec) {
        let seed = self.seed.wrapping_add(index as u64);
        (
            self.baseline_spec(&self.baseline.deletion, seed),
            self.baseline_spec(&self.baseline.insertion, seed),
        )
    }

    pub fn require_model(&self) -> CliResult<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| CliError::Usage("no model given (set \"model\" or --model)".into()))
    }

    pub fn require_dataset(&self) -> CliResult<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::Usage("no dataset given (set \"dataset\" or --dataset)".into()))
    }
}

/// File-name friendly method label (`samp++` → `samp_pp`).
pub fn method_slug(name: &str) -> String {
    name.replace("++", "_pp")
}
