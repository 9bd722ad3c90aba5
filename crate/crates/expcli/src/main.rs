use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uic_cli::config::{ExperimentConfig, RecipeKind};
use uic_cli::error::{CliError, ConfigError};
use uic_cli::io::format_float;
use uic_cli::output::{hyperparameter_string, write_run};
use uic_cli::recipes::{run_recipe, RunOptions};
use uic_core::loss::loss_derivs;
use uic_core::{Label, LossSpec};

/// Simulations of linear classifiers under extreme class imbalance.
#[derive(Parser)]
#[command(name = "uic", version)]
struct Cli {
    /// Experiment config (JSON). Without it the recipe's defaults are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output`, then `out/<recipe>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent cells.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// No progress output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print the resolved config in canonical form and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decision boundaries of linear fits under several losses.
    Boundary,
    /// Population AUC across a grid of alpha values.
    AlphaSweep,
    /// Exact against asymptotic divergence generators.
    Fcurve,
    /// Population fits against limiting classifiers.
    LimitCheck,
    /// Tunable boosting loss across its penalty under label noise.
    CAblation,
    /// Hessian influence against upweight-and-retrain.
    Influence,
    /// Loss utilities.
    Losses {
        #[command(subcommand)]
        command: LossesCommand,
    },
}

#[derive(Subcommand)]
enum LossesCommand {
    /// Print value, gradient and curvature in the prediction, as CSV.
    Eval(EvalArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Loss spec as JSON, e.g. '{"family":"alpha","alpha":0.5}'.
    #[arg(long)]
    loss: String,
    /// Predicted probabilities; repeatable.
    #[arg(long = "etahat", required = true, num_args = 1..)]
    etahat: Vec<f64>,
    /// Label, 0 or 1; both when omitted.
    #[arg(long)]
    y: Option<u8>,
}

fn recipe_kind(c: &Command) -> Option<RecipeKind> {
    Some(match c {
        Command::Boundary => RecipeKind::Boundary,
        Command::AlphaSweep => RecipeKind::AlphaSweep,
        Command::Fcurve => RecipeKind::Fcurve,
        Command::LimitCheck => RecipeKind::LimitCheck,
        Command::CAblation => RecipeKind::CAblation,
        Command::Influence => RecipeKind::InfluenceDemo,
        Command::Losses { .. } => return None,
    })
}

fn eval_losses(args: &EvalArgs) -> Result<(), CliError> {
    let spec: LossSpec = serde_json::from_str(&args.loss).map_err(|e| ConfigError::at("--loss", e.to_string()))?;
    let labels = match args.y {
        Some(y) => vec![Label::from_u8(y).map_err(|e| ConfigError::at("--y", e.to_string()))?],
        None => vec![Label::Negative, Label::Positive],
    };
    println!("loss,hyperparameters,y,etahat,value,grad,hess");
    for y in labels {
        for &p in &args.etahat {
            let d = loss_derivs(&spec, y, p).map_err(|e| ConfigError::at("--etahat", e.to_string()))?;
            println!(
                "{},{},{},{},{},{},{}",
                spec.family.name(),
                hyperparameter_string(&spec),
                y.as_u8(),
                format_float(p),
                format_float(d.value),
                format_float(d.d1),
                format_float(d.d2)
            );
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let kind = match (&cli.command, recipe_kind(&cli.command)) {
        (
            Command::Losses {
                command: LossesCommand::Eval(args),
            },
            _,
        ) => return eval_losses(args),
        (_, Some(k)) => k,
        _ => unreachable!(),
    };
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.recipe.kind() != kind {
        return Err(ConfigError::at(
            "recipe",
            format!(
                "the config describes `{}`, not `{}`",
                cfg.recipe.kind().name(),
                kind.name()
            ),
        )
        .into());
    }
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if cli.print_config {
        print!("{}", cfg.pretty_json());
        return Ok(());
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let outcome = run_recipe(
        &cfg,
        RunOptions {
            threads: cli.threads,
            quiet: cli.quiet,
        },
    )?;
    let manifest = write_run(&out, &cfg, &outcome)?;
    if !cli.quiet {
        eprintln!(
            "{} rows, {} files, manifest {}",
            outcome.table.rows.len(),
            outcome.plots.len() + outcome.samples.len() + 2,
            manifest.display()
        );
    }
    if !outcome.failures.is_empty() {
        let first = &outcome.failures[0];
        let msg = format!(
            "{} cell(s) failed; first: {}: {}",
            outcome.failures.len(),
            first.cell,
            first.error
        );
        return Err(CliError::Numerical(msg));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
