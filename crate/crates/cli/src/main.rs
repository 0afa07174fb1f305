use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use samp_cli::commands;
use samp_cli::config::{BaselinePair, EtaRatio, RunConfig, SweepKind};
use samp_cli::error::{CliError, CliResult};
use samp_core::samp::Direction;

#[derive(Parser)]
#[command(name = "samp", version, about = "Path attribution with SAMP / SAMP++")]
struct Cli {
    /// Flat JSON config; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Global seed. Falls back to the config, then SAMP_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-input work.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic blob-image train/held-out datasets.
    GenData {
        #[arg(long)]
        train_size: Option<usize>,
        #[arg(long)]
        heldout_size: Option<usize>,
        #[arg(long)]
        image_side: Option<usize>,
    },
    /// Train the MLP fixture on a CSV dataset.
    TrainFixture {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Attribute one input (CSV row or PGM image).
    Attribute {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        row: Option<usize>,
        #[arg(long)]
        class: Option<usize>,
        /// ig, samp or samp++.
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Deletion/Insertion AUCs per method over a dataset.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        inputs: Option<usize>,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Sweep the step bound, momentum, direction or sensitivity β.
    Sweep {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        inputs: Option<usize>,
        #[arg(long, value_enum)]
        sweep: Option<SweepKind>,
        #[arg(long)]
        class: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run the oracle checks; exits 1 if any fails.
    Verify {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        brute_force_instances: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    ToBaseline,
    ToTarget,
    Both,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::ToBaseline => Direction::ToBaseline,
            DirectionArg::ToTarget => Direction::ToTarget,
            DirectionArg::Both => Direction::Both,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Pixels moved per step (s).
    #[arg(long)]
    step_pixels: Option<usize>,
    /// Step bound as a fraction of the path length: 0.1, 1/50 or "unbounded".
    #[arg(long)]
    eta_ratio: Option<EtaRatio>,
    /// Momentum coefficient.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Baseline name, or DELETION+INSERTION (e.g. black+blur).
    #[arg(long)]
    baseline: Option<BaselinePair>,
    /// Pixels per Deletion/Insertion step.
    #[arg(long)]
    metric_step: Option<usize>,
    #[arg(long)]
    ig_steps: Option<usize>,
    #[arg(long)]
    blur_kernel: Option<usize>,
    #[arg(long)]
    blur_sigma: Option<f64>,
}

macro_rules! set {
    ($cfg:ident, $($field:ident),+ $(,)?) => {
        $( if let Some(v) = $field { $cfg.$field = v.into(); } )+
    };
}

impl SearchArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let SearchArgs {
            step_pixels,
            eta_ratio,
            lambda,
            direction,
            baseline,
            metric_step,
            ig_steps,
            blur_kernel,
            blur_sigma,
        } = self;
        set!(cfg, step_pixels, eta_ratio, lambda, direction, baseline, metric_step, ig_steps, blur_kernel, blur_sigma);
    }
}

fn config_has_seed(path: &Path) -> CliResult<bool> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    Ok(value.get("seed").is_some())
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var("SAMP_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("SAMP_SEED is not an unsigned integer: {s:?}"))),
        Err(_) => Ok(None),
    }
}

#[derive(Clone, Copy)]
enum Task {
    GenData,
    TrainFixture,
    Attribute,
    Evaluate,
    Sweep,
    Verify,
}

fn resolve(cli: Cli) -> CliResult<(RunConfig, Task)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let from_config = match &cli.config {
        Some(path) => config_has_seed(path)?,
        None => false,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if !from_config {
        cfg.seed = env_seed()?.unwrap_or(0);
    }
    let (out_dir, threads) = (cli.out_dir, cli.threads);
    set!(cfg, out_dir, threads);

    let task = match cli.command {
        Command::GenData { train_size, heldout_size, image_side } => {
            set!(cfg, train_size, heldout_size, image_side);
            Task::GenData
        }
        Command::TrainFixture { dataset, hidden, epochs, learning_rate } => {
            let dataset = dataset.map(Some);
            set!(cfg, dataset, hidden, epochs, learning_rate);
            Task::TrainFixture
        }
        Command::Attribute { model, input, row, class, method, search } => {
            let (model, input, class) = (model.map(Some), input.map(Some), class.map(Some));
            set!(cfg, model, input, row, class, method);
            search.apply(&mut cfg);
            Task::Attribute
        }
        Command::Evaluate { model, dataset, inputs, methods, search } => {
            let (model, dataset) = (model.map(Some), dataset.map(Some));
            set!(cfg, model, dataset, inputs, methods);
            search.apply(&mut cfg);
            Task::Evaluate
        }
        Command::Sweep { model, dataset, inputs, sweep, class, search } => {
            let (model, dataset, class) = (model.map(Some), dataset.map(Some), class.map(Some));
            set!(cfg, model, dataset, inputs, sweep, class);
            search.apply(&mut cfg);
            Task::Sweep
        }
        Command::Verify { trials, brute_force_instances } => {
            set!(cfg, trials, brute_force_instances);
            Task::Verify
        }
    };
    cfg.validate()?;
    Ok((cfg, task))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn run(cli: Cli) -> CliResult<()> {
    let (cfg, task) = resolve(cli)?;
    match task {
        Task::GenData => print_json(&commands::cmd_gen_data(&cfg)?),
        Task::TrainFixture => {
            let r = commands::cmd_train_fixture(&cfg)?;
            println!("final_accuracy {:.4}  seed {}  model {}", r.final_accuracy, r.seed, r.model);
            println!("model.bin sha256 {}", r.blob_sha256);
        }
        Task::Attribute => {
            let r = commands::cmd_attribute(&cfg)?;
            println!("method {}  class {}", r.method, r.class);
            println!("delta_y {:.6e}", r.delta_y);
            println!("completeness_gap {:.6e}", r.completeness_gap);
            println!("variance_objective {:.6e}", r.variance_objective);
            for (label, part) in [("to_baseline", &r.to_baseline), ("to_target", &r.to_target)] {
                if let Some(p) = part {
                    println!(
                        "  {label}: delta_y {:.6e}  completeness_gap {:.6e}  steps {}",
                        p.delta_y, p.completeness_gap, p.steps
                    );
                }
            }
            println!("wrote {} artifacts to {}", r.artifacts.len(), cfg.out_dir.display());
        }
        Task::Evaluate => {
            let r = commands::cmd_evaluate(&cfg)?;
            println!("{:<8} {:>22} {:>22}", "method", "deletion (mean±std)", "insertion (mean±std)");
            for row in &r.methods {
                println!(
                    "{:<8} {:>13.4} ± {:<6.4} {:>13.4} ± {:<6.4}",
                    row.method, row.deletion.mean, row.deletion.std, row.insertion.mean, row.insertion.std
                );
            }
        }
        Task::Sweep => print_json(&commands::cmd_sweep(&cfg)?),
        Task::Verify => {
            let r = commands::cmd_verify(&cfg)?;
            for c in &r.checks {
                println!("{:<24} {}", c.name, if c.passed { "ok" } else { "FAILED" });
                println!("  {}", c.detail);
            }
            if !r.passed() {
                let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                return Err(CliError::Check(format!("failed checks: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
