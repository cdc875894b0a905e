use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbayes_harness::{emit_report, load_config, run_experiment, Command, Format, HarnessError};

/// Quantum Bayesian updating experiments on a simulated register.
#[derive(Debug, Parser)]
#[command(name = "qbayes", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Run an update algorithm.
    #[command(subcommand)]
    Update(UpdateVerb),
    /// Phase-estimate the rotation angle and update with each estimate.
    EstimateTheta(RunArgs),
    /// Exact single-copy success bound and the rotation that attains it.
    Bound(RunArgs),
    /// Split a likelihood table into elimination and two-valued stages.
    Decompose(RunArgs),
    /// Run the configured algorithm and fail on any broken contract.
    Verify(RunArgs),
}

#[derive(Debug, Subcommand)]
enum UpdateVerb {
    /// Probabilistic update with an ancilla rotation.
    Prob(RunArgs),
    /// Deterministic update by amplitude amplification.
    Det(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for trials; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(command: Command, args: &RunArgs) -> Result<(), HarnessError> {
    let mut experiment = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        experiment = experiment.with_seed(seed);
    }
    if let Some(trials) = args.trials {
        experiment = experiment.with_trials(trials);
    }
    let report = match args.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Config(format!("--threads: {e}")))?
            .install(|| run_experiment(command, &experiment))?,
        None => run_experiment(command, &experiment)?,
    };
    emit_report(&report, args.format, args.out.as_deref())?;
    let failed = report.failed_checks();
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<String> = failed.iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        Err(HarnessError::Verification(names.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match &cli.verb {
        Verb::Update(UpdateVerb::Prob(args)) => (Command::UpdateProb, args),
        Verb::Update(UpdateVerb::Det(args)) => (Command::UpdateDet, args),
        Verb::EstimateTheta(args) => (Command::EstimateTheta, args),
        Verb::Bound(args) => (Command::Bound, args),
        Verb::Decompose(args) => (Command::Decompose, args),
        Verb::Verify(args) => (Command::Verify, args),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
