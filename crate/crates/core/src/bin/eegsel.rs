use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eegsel::pipeline::{commands, ExperimentConfig};

#[derive(Parser)]
#[command(name = "eegsel", version, about = "Attribution-guided EEG channel selection for attention decoding")]
struct Cli {
    /// TOML experiment configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write synthetic subjects with planted alpha lateralisation.
    Synth,
    /// Filter, re-reference and normalise raw trials.
    Preprocess,
    /// Train the topographic CNN on every fold.
    TrainCnn,
    /// Attribute the test windows of every fold and aggregate.
    Shap,
    /// Rank channels from the aggregated attribution map.
    Select,
    /// Train the TCN on the top-k channels for every budget.
    TrainTcn,
    /// Write CSV and PGM artifacts.
    Report,
    /// Print parameter and MAC counts per channel budget.
    Complexity,
    /// Run every step in order.
    All,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subject ids.
    #[arg(long, global = true, value_delimiter = ',')]
    subjects: Option<Vec<String>>,
    #[arg(long, global = true)]
    window_seconds: Option<f64>,
    #[arg(long, global = true)]
    overlap: Option<f64>,
    /// Comma-separated channel budgets.
    #[arg(long, global = true, value_delimiter = ',')]
    budgets: Option<Vec<usize>>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true)]
    split_by_trial: Option<bool>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    weight_decay: Option<f64>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    max_epochs: Option<usize>,
    #[arg(long, global = true)]
    patience: Option<usize>,
    #[arg(long, global = true)]
    background_size: Option<usize>,
    #[arg(long, global = true)]
    explain_size: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    synth_subjects: Option<usize>,
    #[arg(long, global = true)]
    synth_trials: Option<usize>,
    #[arg(long, global = true)]
    synth_trial_seconds: Option<f64>,
    #[arg(long, global = true)]
    synth_depth: Option<f64>,
    #[arg(long, global = true)]
    synth_seed: Option<u64>,
}

macro_rules! apply {
    ($cfg:expr, $o:expr, $($field:ident => $($target:ident).+),* $(,)?) => {
        $(if let Some(v) = $o.$field.clone() { $cfg.$($target).+ = v; })*
    };
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply!(cfg, self,
            data_dir => data_dir, out_dir => out_dir, subjects => subjects,
            window_seconds => window_seconds, overlap => overlap, budgets => budgets, folds => folds,
            split_by_trial => split_by_trial, learning_rate => learning_rate, weight_decay => weight_decay,
            batch_size => batch_size, max_epochs => max_epochs, patience => patience,
            background_size => background_size, explain_size => explain_size, seed => seed,
            synth_subjects => synth_subjects, synth_trials => synth.n_trials,
            synth_trial_seconds => synth.trial_seconds, synth_depth => synth.depth, synth_seed => synth.seed,
        );
    }
}

fn run(cli: &Cli) -> eegsel::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    let name = match cli.command {
        Command::Synth => "synth",
        Command::Preprocess => "preprocess",
        Command::TrainCnn => "train-cnn",
        Command::Shap => "shap",
        Command::Select => "select",
        Command::TrainTcn => "train-tcn",
        Command::Report => "report",
        Command::Complexity => "complexity",
        Command::All => "all",
    };
    commands::journal(&cfg, name, "start")?;
    match cli.command {
        Command::Synth => {
            for s in commands::synth(&cfg)? {
                println!("{}", cfg.data_dir.join(s).display());
            }
        }
        Command::Preprocess => commands::preprocess(&cfg)?,
        Command::TrainCnn => commands::train_cnn(&cfg)?,
        Command::Shap => commands::shap(&cfg)?,
        Command::Select => commands::select(&cfg)?,
        Command::TrainTcn => commands::train_tcn(&cfg)?,
        Command::Complexity => print!("{}", commands::complexity(&cfg)?),
        Command::Report | Command::All => {
            let written = if matches!(cli.command, Command::All) { commands::all(&cfg)? } else { commands::report(&cfg)? };
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    commands::journal(&cfg, name, "done")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
