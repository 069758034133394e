use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use logit_ensemble::error::Error;
use logit_ensemble::{run, synthetic};

/// Dynamic logistic ensembles: prepare data, train tree models of several
/// depths, evaluate them, and verify the analytical gradients.
#[derive(Parser)]
#[command(name = "logit-ensemble", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the layer list, e.g. `--layers 1,2,3,4`.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<u32>>,
    /// Override the training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the label-encoding threshold.
    #[arg(long)]
    threshold: Option<i64>,
    /// Override the learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Override the iteration count.
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Augment, standardize, and split the input CSV.
    Prepare(RunArgs),
    /// Train one ensemble per configured layer count.
    Train(RunArgs),
    /// Compute metrics and ROC curves for the trained models.
    Evaluate(RunArgs),
    /// Check analytical gradients and recursive probabilities against oracles.
    Gradcheck {
        /// Tree depth.
        #[arg(long, default_value_t = 3)]
        layers: u32,
        /// Feature dimension of the random model.
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random data points.
        #[arg(long, default_value_t = 16)]
        points: usize,
        /// Negative control: perturb one analytical gradient entry.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Generate a wine-quality-shaped synthetic CSV for demo runs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1599)]
        rows: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn load_config(args: &RunArgs) -> Result<run::RunConfig, Error> {
    let mut config = run::RunConfig::load(&args.config)?;
    if let Some(layers) = &args.layers {
        config.layers = layers.clone();
    }
    if let Some(seed) = args.seed {
        config.train.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(threshold) = args.threshold {
        config.label_threshold = threshold;
    }
    if let Some(lr) = args.lr {
        config.train.learning_rate = lr;
    }
    if let Some(iters) = args.iters {
        config.train.iterations = iters;
    }
    config.validate()?;
    Ok(config)
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::NonFinite(_) | Error::Diverged { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Prepare(args) => {
            let config = load_config(&args)?;
            let summary = run::prepare(&config)?;
            println!(
                "prepared {} augmented rows: {} train / {} test (class 1 share {:.4})",
                summary.augmented_rows,
                summary.train_rows,
                summary.test_rows,
                summary.balance.proportion_class1
            );
            println!("artifacts written to {}", config.out_dir.display());
            Ok(0)
        }
        Command::Train(args) => {
            let config = load_config(&args)?;
            for (n, result) in run::train_all(&config)? {
                let final_cost = result.cost_history.last().map(|&(_, c)| c).unwrap_or(f64::NAN);
                println!(
                    "n={n}: {} iterations, final cost {final_cost:.6}",
                    result.converged_iterations
                );
            }
            Ok(0)
        }
        Command::Evaluate(args) => {
            let config = load_config(&args)?;
            for (n, m) in run::evaluate_all(&config)? {
                println!(
                    "n={n}: train acc {:.4}, test acc {:.4}, test auc {:.4}",
                    m.train_accuracy, m.test_accuracy, m.test_auc
                );
            }
            Ok(0)
        }
        Command::Gradcheck {
            layers,
            dim,
            seed,
            points,
            corrupt,
        } => {
            let report = run::gradcheck(layers, dim, seed, points, corrupt)?;
            println!(
                "gradient:    max relative error {:.3e} (tolerance {:.0e}) -> {}",
                report.max_gradient_relative_error,
                report.gradient_tolerance,
                if report.gradient_ok { "ok" } else { "FAIL" }
            );
            println!(
                "probability: max oracle difference {:.3e} (tolerance {:.0e}) -> {}",
                report.max_probability_difference,
                report.probability_tolerance,
                if report.probability_ok { "ok" } else { "FAIL" }
            );
            if !report.gradient_ok {
                Ok(EXIT_TOLERANCE)
            } else if !report.probability_ok {
                Ok(EXIT_NUMERIC)
            } else {
                Ok(0)
            }
        }
        Command::Synth { out, rows, seed } => {
            let table = synthetic::generate(rows, seed)?;
            synthetic::write_csv(&table, &out)?;
            println!("wrote {rows} rows to {}", out.display());
            Ok(0)
        }
    }
}
