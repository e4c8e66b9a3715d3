use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qoco::harness::{
    self, csv, gradcheck, run_one, run_summary, run_trials, trials_summary, write_atomic, Experiment, ExperimentConfig,
};
use qoco::ogd::RPrimeMode;
use qoco::qgrad::{calibrate, Convention, TransformSign};
use qoco::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_CALIBRATION: u8 = 4;

#[derive(Parser)]
#[command(name = "qoco", version, about = "Zeroth-order online convex optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and write its transcript and summary.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Play several seeded games and write one transcript per game.
    Trials {
        config: PathBuf,
        /// Number of games; defaults to the config's runtime.trials.
        #[arg(long)]
        num: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Measure the first-round gradient error distribution of the configured
    /// estimator and loss family.
    Gradcheck {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check that linear losses with on-grid slopes decode exactly and print
    /// the decoding convention.
    Calibrate {
        #[arg(long, value_enum, hide = true)]
        force_sign: Option<Sign>,
    },
}

#[derive(Args)]
struct Common {
    /// Seed (the first seed for trials); overrides runtime.seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Largest number of simulated amplitudes; overrides runtime.memory_guard.
    #[arg(long)]
    memory_guard: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "paper_literal")]
    PaperLiteral,
    #[value(name = "proof_consistent")]
    ProofConsistent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sign {
    Negative,
    Positive,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
}

fn load(config: &Path, common: &Common) -> Result<Experiment, Error> {
    let mut c = ExperimentConfig::load(config)?;
    if let Some(seed) = common.seed {
        c.runtime.seed = seed;
    }
    if let Some(mode) = common.mode {
        c.schedule.r_prime_mode = match mode {
            Mode::PaperLiteral => RPrimeMode::PaperLiteral,
            Mode::ProofConsistent => RPrimeMode::ProofConsistent,
        };
    }
    if let Some(guard) = common.memory_guard {
        c.runtime.memory_guard = guard;
    }
    c.build()
}

fn cmd_run(config: &Path, common: &Common) -> ExitCode {
    let experiment = match load(config, common) {
        Ok(e) => e,
        Err(e) => return fail(&Error::Config(e.to_string())),
    };
    let seed = experiment.config.runtime.seed;
    let result = match run_one(&experiment, seed) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let summary = run_summary(&experiment, &result);
    let r = &result.report;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# single game, seed {seed}: regret {} against certified bound {} ({})",
        csv::format_real(r.regret),
        csv::format_real(r.bound_value),
        if r.bound_satisfied { "satisfied" } else { "violated" }
    );
    text.push_str(&summary);
    let written = write_atomic(&common.out_dir.join("transcript.csv"), &csv::emit(&result.transcript))
        .and_then(|_| write_atomic(&common.out_dir.join("summary.txt"), &text));
    if let Err(e) = written {
        return fail(&e);
    }
    if !r.comparator_converged {
        eprintln!("warning: comparator stopped above the gradient-mapping tolerance {:e}", harness::MAPPING_TOLERANCE);
    }
    print!("{summary}");
    ExitCode::SUCCESS
}

fn cmd_trials(config: &Path, num: Option<usize>, common: &Common) -> ExitCode {
    let experiment = match load(config, common) {
        Ok(e) => e,
        Err(e) => return fail(&Error::Config(e.to_string())),
    };
    let num = num.unwrap_or(experiment.config.runtime.trials);
    let seed_base = experiment.config.runtime.seed;
    let report = run_trials(&experiment, num, seed_base);
    for r in &report.results {
        let path = common.out_dir.join(format!("transcript_{}.csv", r.seed));
        if let Err(e) = write_atomic(&path, &csv::emit(&r.transcript)) {
            return fail(&e);
        }
    }
    let summary = trials_summary(&experiment, &report, seed_base);
    let a = report.aggregate();
    let text = format!(
        "# {} of {} games completed; regret within the certified bound in {:.1}% of them\n{summary}",
        a.completed,
        a.trials,
        100.0 * a.success_fraction
    );
    if let Err(e) = write_atomic(&common.out_dir.join("summary.txt"), &text) {
        return fail(&e);
    }
    for (seed, e) in &report.failures {
        eprintln!("trial {seed} failed: {e}");
    }
    print!("{summary}");
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_RUNTIME)
    }
}

fn cmd_gradcheck(config: &Path, trials: usize, common: &Common) -> ExitCode {
    let experiment = match load(config, common) {
        Ok(e) => e,
        Err(e) => return fail(&Error::Config(e.to_string())),
    };
    let seed = experiment.config.runtime.seed;
    let report = match gradcheck(&experiment, trials, seed) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let mut table = String::from("trial,l1_error\n");
    for (i, e) in report.errors.iter().enumerate() {
        let _ = writeln!(table, "{i},{}", csv::format_real(*e));
    }
    if let Err(e) = write_atomic(&common.out_dir.join("gradcheck.csv"), &table) {
        return fail(&e);
    }
    println!("estimator={}", experiment.estimator);
    println!("trials={}", report.errors.len());
    println!("threshold={}", csv::format_real(report.threshold));
    println!("exceedances={}", report.exceedances);
    println!("exceedance_rate={}", report.exceedance_rate());
    for (name, q) in [("min", 0.0), ("median", 0.5), ("p90", 0.9), ("p99", 0.99), ("max", 1.0)] {
        println!("error_{name}={}", csv::format_real(report.quantile(q)));
    }
    ExitCode::SUCCESS
}

fn cmd_calibrate(force: Option<Sign>) -> ExitCode {
    let result = match force {
        None => calibrate(Convention::CALIBRATED.sign),
        Some(Sign::Negative) => calibrate(TransformSign::Negative),
        Some(Sign::Positive) => calibrate(TransformSign::Positive),
    };
    match result {
        Ok(record) if record.convention == Convention::CALIBRATED || force.is_some() => {
            println!("{record}");
            ExitCode::SUCCESS
        }
        Ok(record) => {
            eprintln!("error: calibrated convention {} differs from the built-in {}", record.convention, Convention::CALIBRATED);
            ExitCode::from(EXIT_CALIBRATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CALIBRATION)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config, common } => cmd_run(config, common),
        Command::Trials { config, num, common } => cmd_trials(config, *num, common),
        Command::Gradcheck { config, trials, common } => cmd_gradcheck(config, *trials, common),
        Command::Calibrate { force_sign } => cmd_calibrate(*force_sign),
    }
}
