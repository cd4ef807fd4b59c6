//! `corrbandit` — config-driven correlated-bandit experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 domain or
//! ingestion error.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corrbandit::analysis::{t0_threshold, ArmLabel};
use corrbandit::config::ExperimentConfig;
use corrbandit::experiment;
use corrbandit::ingest;
use corrbandit::{Error, Result};

#[derive(Parser)]
#[command(name = "corrbandit", version, about = "Correlated multi-armed bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a key = value experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set horizon=5000 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured policies over seeded trials and emit regret CSV.
    Run(ConfigArgs),
    /// Print the competitiveness oracle for the configured instance.
    Oracle(ConfigArgs),
    /// Evaluate the theoretical pull and regret bounds at the horizon.
    Bounds(ConfigArgs),
    /// Construct the configured pseudo-reward table and write it out.
    BuildPseudo {
        #[command(flatten)]
        config: ConfigArgs,
        /// Destination for the table text.
        #[arg(long)]
        output: PathBuf,
    },
    /// Parse a rating corpus, split it, and summarize the derived arms.
    Ingest {
        /// Rating corpus: user,item,rating[,genres] lines.
        #[arg(long)]
        ratings: PathBuf,
        /// Fraction of record mass routed to the training half.
        #[arg(long, default_value_t = 0.5)]
        split_fraction: f64,
        /// Arm derivation: top-n or genres.
        #[arg(long, default_value = "top-n")]
        arm_mode: String,
        /// Arm count for --arm-mode top-n.
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        /// Genre tie-break seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rating scale ceiling.
        #[arg(long, default_value_t = 5.0)]
        max_reward: f64,
    },
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)?;
    corrbandit::load_config(&text, &args.overrides)
}

fn cmd_run(args: &ConfigArgs) -> Result<()> {
    let cfg = load(args)?;
    let built = experiment::build_experiment(&cfg)?;
    let result = experiment::run_experiment(&cfg, &built)?;
    match &cfg.output {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            experiment::emit_csv(&result.curve, &mut file)?;
            file.flush()?;
            println!(
                "wrote {} rounds x {} policies over {} trials to {}",
                result.curve.rounds.len(),
                result.curve.policies.len(),
                result.trials,
                path.display()
            );
        }
        None => experiment::emit_csv(&result.curve, io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_oracle(args: &ConfigArgs) -> Result<()> {
    let cfg = load(args)?;
    let built = experiment::build_experiment(&cfg)?;
    let oracle = experiment::report_oracle(&cfg, &built)?;
    println!("{}", oracle.report);
    println!(
        "empirical |competitive set| at t = {}: {}",
        oracle.at_round, oracle.empirical_c
    );
    Ok(())
}

fn cmd_bounds(args: &ConfigArgs) -> Result<()> {
    let cfg = load(args)?;
    let built = experiment::build_experiment(&cfg)?;
    let report = experiment::classify_instance(&cfg, &built)?;
    println!("{report}");
    let arm_count = built.env.arm_count();
    let optimal_mean = report.arms[report.optimal_arm].mean;
    let gap_min = report
        .arms
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != report.optimal_arm)
        .map(|(_, a)| optimal_mean - a.mean)
        .fold(f64::INFINITY, f64::min);
    for (k, arm) in report.arms.iter().enumerate() {
        match arm.label {
            ArmLabel::Optimal => {}
            ArmLabel::Competitive => {
                let gap = optimal_mean - arm.mean;
                let pulls = corrbandit::bound_competitive_pulls(arm_count, cfg.horizon, gap, gap_min)?;
                println!(
                    "arm {}: competitive, expected pulls at T = {} bounded by {:.2}",
                    k + 1,
                    cfg.horizon,
                    pulls
                );
            }
            ArmLabel::NonCompetitive => {
                let t0 = t0_threshold(arm_count, gap_min, arm.pseudo_gap)?;
                let pulls = corrbandit::bound_noncompetitive_pulls(arm_count, cfg.horizon, t0);
                println!(
                    "arm {}: non-competitive, t0 = {}, expected pulls at T = {} bounded by {:.2}",
                    k + 1,
                    t0,
                    cfg.horizon,
                    pulls
                );
            }
        }
    }
    let total = corrbandit::bound_total_regret(&report, arm_count, cfg.horizon)?;
    println!("regret at T = {} bounded by {:.2}", cfg.horizon, total);
    Ok(())
}

fn cmd_build_pseudo(args: &ConfigArgs, output: &PathBuf) -> Result<()> {
    let cfg = load(args)?;
    let built = experiment::build_experiment(&cfg)?;
    let mut file = fs::File::create(output)?;
    built.table.write_text(&mut file)?;
    file.flush()?;
    println!(
        "wrote {}-arm pseudo-reward table (B = {}) to {}",
        built.table.arm_count(),
        built.table.max_reward(),
        output.display()
    );
    Ok(())
}

fn cmd_ingest(
    ratings: &PathBuf,
    split_fraction: f64,
    arm_mode: &str,
    top_n: usize,
    seed: u64,
    max_reward: f64,
) -> Result<()> {
    let file = fs::File::open(ratings)?;
    let records = ingest::parse_ratings(BufReader::new(file), max_reward)?;
    println!("records: {}", records.len());
    let (records, arms) = match arm_mode {
        "genres" => {
            let (assigned, stats) = ingest::derive_genre_arms(&records, seed);
            println!(
                "genre assignment: {} items, {} records skipped (no genre)",
                stats.assigned_items, stats.skipped_no_genre
            );
            let arms = ingest::genre_arms(&assigned);
            (assigned, arms)
        }
        "top-n" => {
            let arms = ingest::top_n_items(&records, top_n)?;
            (records, arms)
        }
        other => {
            return Err(Error::config(format!(
                "--arm-mode: unknown mode `{other}` (expected top-n or genres)"
            )))
        }
    };
    let (train, test) = ingest::split_by_activity(
        &records,
        &ingest::SplitSpec { train_fraction: split_fraction },
    )?;
    println!("split: {} train records, {} test records", train.len(), test.len());
    println!("arms: {}", arms.len());
    let pools = ingest::build_pools(&test, arms.len(), |rec| {
        let label = rec.genres.first().unwrap_or(&rec.item_id);
        arms.iter().position(|a| a == label || *a == rec.item_id)
    })?;
    for (k, (name, pool)) in arms.iter().zip(&pools).enumerate() {
        let mean = pool.iter().sum::<f64>() / pool.len() as f64;
        println!(
            "arm {}: {} ({} test ratings, mean {:.3})",
            k + 1,
            name,
            pool.len(),
            mean
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::BuildPseudo { config, output } => cmd_build_pseudo(config, output),
        Command::Ingest {
            ratings,
            split_fraction,
            arm_mode,
            top_n,
            seed,
            max_reward,
        } => cmd_ingest(ratings, *split_fraction, arm_mode, *top_n, *seed, *max_reward),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) => 2,
                Error::Io(_) => 3,
                Error::Domain(_) | Error::Ingest(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}
