//! Seeded experiment harness: environment/table instantiation from a
//! config, parallel trial execution with shared reward realizations,
//! mean/std aggregation, CSV emission, and the oracle report.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{classify_arms, CompetitivenessReport, RegretTrace};
use crate::builders;
use crate::config::{ArmMode, EnvSpec, ExperimentConfig, PolicySpec, PseudoSpec};
use crate::env::{EmpiricalEnvironment, Environment, LatentSourceEnvironment, TabularJointEnvironment};
use crate::error::{Error, Result};
use crate::ingest::{self, RatingRecord, SplitSpec};
use crate::model::{ArmEstimators, DomainKind, PseudoRewardTable, PullRecord, update_estimators};
use crate::policy::{compute_competitive_snapshot, Policy};

/// Environment variable capping trial parallelism.
pub const THREADS_ENV_VAR: &str = "CORRBANDIT_THREADS";

/// A fully instantiated experiment: environment, pseudo-reward table, and
/// display names for the arms.
#[derive(Debug, Clone)]
pub struct BuiltExperiment {
    pub env: Environment,
    pub table: PseudoRewardTable,
    pub arm_names: Vec<String>,
}

fn numbered_arm_names(arm_count: usize) -> Vec<String> {
    (1..=arm_count).map(|k| k.to_string()).collect()
}

fn arm_index_of(arms: &[String]) -> impl Fn(&RatingRecord) -> Option<usize> + '_ {
    move |rec: &RatingRecord| {
        let label = rec.genres.first().unwrap_or(&rec.item_id);
        arms.iter().position(|a| a == label || *a == rec.item_id)
    }
}

/// Runs the ingest pipeline: parse, optional genre derivation, activity
/// split, arm selection, and test-half rating pools.
fn build_ratings(
    spec: &crate::config::RatingsSpec,
) -> Result<(EmpiricalEnvironment, Vec<RatingRecord>, Vec<String>)> {
    let file = File::open(&spec.path)?;
    let records = ingest::parse_ratings(BufReader::new(file), spec.max_reward)?;
    let (records, arms) = match &spec.arm_mode {
        ArmMode::Genres => {
            let (assigned, _stats) = ingest::derive_genre_arms(&records, spec.seed);
            let arms = ingest::genre_arms(&assigned);
            if arms.len() < 2 {
                return Err(Error::ingest("need at least 2 genres for a genre-arm run"));
            }
            (assigned, arms)
        }
        ArmMode::TopNItems(n) => {
            let arms = ingest::top_n_items(&records, *n)?;
            (records, arms)
        }
    };
    let (train, test) = ingest::split_by_activity(
        &records,
        &SplitSpec { train_fraction: spec.split_fraction },
    )?;
    let pools = ingest::build_pools(&test, arms.len(), arm_index_of(&arms))?;
    let env = EmpiricalEnvironment::new(pools, spec.max_reward)?;
    Ok((env, train, arms))
}

/// Instantiates the environment and pseudo-reward table from a config.
pub fn build_experiment(cfg: &ExperimentConfig) -> Result<BuiltExperiment> {
    let (env, train, arm_names) = match &cfg.env {
        EnvSpec::TabularPath(path) => {
            let file = File::open(path)?;
            let env = TabularJointEnvironment::read_text(BufReader::new(file))?;
            let names = numbered_arm_names(env.arm_count());
            (Environment::Tabular(env), None, names)
        }
        EnvSpec::Latent { dist, arms } => {
            let env = LatentSourceEnvironment::new(dist.clone(), arms.clone())?;
            let names = numbered_arm_names(env.arm_count());
            (Environment::Latent(env), None, names)
        }
        EnvSpec::Ratings(spec) => {
            let (env, train, arms) = build_ratings(spec)?;
            (Environment::Empirical(env), Some(train), arms)
        }
    };

    let table = match (&cfg.pseudo, &env) {
        (PseudoSpec::Uninformative, env) => {
            let domains = (0..env.arm_count())
                .map(|k| env.reward_domain(k))
                .collect::<Result<_>>()?;
            PseudoRewardTable::uninformative(domains)?
        }
        (PseudoSpec::TablePath(path), _) => {
            let file = File::open(path)?;
            PseudoRewardTable::read_text(BufReader::new(file))?
        }
        (PseudoSpec::ExactFromJoint, Environment::Tabular(e)) => builders::from_joint_exact(e)?,
        (PseudoSpec::ExactFromJoint, _) => {
            return Err(Error::config(
                "pseudo.source: exact requires a tabular environment",
            ))
        }
        (PseudoSpec::LatentGrid { grid_n }, Environment::Latent(e)) => {
            builders::from_latent_bounds(e, *grid_n)?
        }
        (PseudoSpec::LatentGrid { .. }, _) => {
            return Err(Error::config(
                "pseudo.source: latent-grid requires a latent environment",
            ))
        }
        (PseudoSpec::Ratings { mode, pad_fraction, buffer }, Environment::Empirical(_)) => {
            let train = train
                .as_ref()
                .expect("ratings environment always carries a training half");
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed ^ 0x9e37_79b9_7f4a_7c15);
            builders::from_ratings(
                train,
                &arm_names,
                arm_index_of(&arm_names),
                *mode,
                *pad_fraction,
                *buffer,
                env.max_reward(),
                &mut rng,
            )?
        }
        (PseudoSpec::Ratings { .. }, _) => {
            return Err(Error::config(
                "pseudo.source: ratings requires a ratings environment",
            ))
        }
    };

    if table.arm_count() != env.arm_count() {
        return Err(Error::config(format!(
            "pseudo table has {} arms but the environment has {}",
            table.arm_count(),
            env.arm_count()
        )));
    }
    if cfg.horizon < env.arm_count() as u64 {
        return Err(Error::config(format!(
            "horizon: {} is below the arm count {}",
            cfg.horizon,
            env.arm_count()
        )));
    }
    for spec in &cfg.policies {
        if spec.base == crate::policy::BasePolicy::TsBeta && !env_is_binary(&env)? {
            return Err(Error::config(format!(
                "policies: {} requires binary {{0,1}} rewards",
                spec.name
            )));
        }
    }

    Ok(BuiltExperiment { env, table, arm_names })
}

fn env_is_binary(env: &Environment) -> Result<bool> {
    for k in 0..env.arm_count() {
        let domain = env.reward_domain(k)?;
        match &domain.kind {
            DomainKind::Discrete(values) => {
                if values
                    .iter()
                    .any(|&v| (v - 0.0).abs() > 1e-9 && (v - 1.0).abs() > 1e-9)
                {
                    return Ok(false);
                }
            }
            DomainKind::Continuous { .. } => return Ok(false),
        }
    }
    Ok(true)
}

/// One policy's run over one trial's reward stream.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    /// Arm pulled at round t (0-based arms, index t-1).
    pub arms: Vec<usize>,
    /// Observed reward per round.
    pub rewards: Vec<f64>,
    pub trace: RegretTrace,
}

/// Runs one policy against a fresh environment stream seeded with
/// `env_seed`. Two policies given the same `env_seed` face the same
/// realizations: every environment consumes a fixed number of rng draws
/// per round.
pub fn run_single_trial(
    env: &Environment,
    table: &PseudoRewardTable,
    spec: &PolicySpec,
    horizon: u64,
    env_seed: u64,
    policy_seed: u64,
    lower_bound_floor: Option<f64>,
) -> Result<TrialRecord> {
    let arm_count = env.arm_count();
    let mut policy = Policy::new(
        spec.base,
        spec.correlated,
        arm_count,
        env.max_reward(),
        ChaCha8Rng::seed_from_u64(policy_seed),
    )?;
    if let Some(floor) = lower_bound_floor {
        policy = policy.with_lower_bound_floor(floor);
    }
    let mut env_rng = ChaCha8Rng::seed_from_u64(env_seed);
    let mut trace = RegretTrace::new(env.true_means());
    let mut arms = Vec::with_capacity(horizon as usize);
    let mut rewards = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let arm = policy.select_arm(t)?;
        let reward = env.sample(arm, &mut env_rng);
        policy.observe(table, t, arm, reward)?;
        trace.record_pull(arm);
        arms.push(arm);
        rewards.push(reward);
    }
    Ok(TrialRecord { arms, rewards, trace })
}

/// Mean/std cumulative-regret curves at the sampled rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub rounds: Vec<u64>,
    pub policies: Vec<String>,
    /// `means[policy][round index]`.
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub curve: AggregateCurve,
    pub trials: usize,
    /// `mean_final_pulls[policy][arm]`.
    pub mean_final_pulls: Vec<Vec<f64>>,
    /// `final_regrets[policy][trial]`.
    pub final_regrets: Vec<Vec<f64>>,
}

/// Rounds retained in the output: multiples of `stride`, with the horizon
/// always included.
pub fn sample_rounds(horizon: u64, stride: u64) -> Vec<u64> {
    let stride = stride.max(1);
    let mut rounds: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if rounds.last() != Some(&horizon) {
        rounds.push(horizon);
    }
    rounds
}

fn policy_seed(base_seed: u64, policy_index: usize, trial: usize) -> u64 {
    base_seed
        ^ (policy_index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (trial as u64).wrapping_mul(0xd1b5_4a32_d192_ed03)
}

fn with_thread_cap<T: Send>(cap: Option<&str>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match cap {
        Some(raw) => {
            let n: usize = raw
                .parse()
                .map_err(|_| Error::config(format!("{THREADS_ENV_VAR}: bad thread count `{raw}`")))?;
            if n == 0 {
                return Err(Error::config(format!("{THREADS_ENV_VAR}: must be >= 1")));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs every configured policy over `trials` independent trials. Trial
/// `i`'s environment stream is seeded `base_seed + i` and shared across
/// policies; each policy draws its own randomness from an independent
/// stream. Trials run in parallel; aggregation merges in trial order.
pub fn run_experiment(cfg: &ExperimentConfig, built: &BuiltExperiment) -> Result<ExperimentResult> {
    let rounds = sample_rounds(cfg.horizon, cfg.effective_stride());
    let policy_count = cfg.policies.len();

    struct TrialSummary {
        /// `sampled[policy][round index]`: cumulative regret.
        sampled: Vec<Vec<f64>>,
        pulls: Vec<Vec<u64>>,
        finals: Vec<f64>,
    }

    let cap = std::env::var(THREADS_ENV_VAR).ok();
    let summaries: Vec<TrialSummary> = with_thread_cap(cap.as_deref(), || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let env_seed = cfg.base_seed.wrapping_add(trial as u64);
                let mut sampled = Vec::with_capacity(policy_count);
                let mut pulls = Vec::with_capacity(policy_count);
                let mut finals = Vec::with_capacity(policy_count);
                for (p, spec) in cfg.policies.iter().enumerate() {
                    let rec = run_single_trial(
                        &built.env,
                        &built.table,
                        spec,
                        cfg.horizon,
                        env_seed,
                        policy_seed(cfg.base_seed, p, trial),
                        cfg.lower_bound_floor,
                    )?;
                    sampled.push(
                        rounds
                            .iter()
                            .map(|&t| rec.trace.cumulative[(t - 1) as usize])
                            .collect(),
                    );
                    finals.push(rec.trace.final_regret());
                    pulls.push(rec.trace.pulls);
                }
                Ok(TrialSummary { sampled, pulls, finals })
            })
            .collect::<Result<_>>()
    })??;

    let n = cfg.trials as f64;
    let arm_count = built.env.arm_count();
    let mut means = vec![vec![0.0; rounds.len()]; policy_count];
    let mut stds = vec![vec![0.0; rounds.len()]; policy_count];
    let mut mean_final_pulls = vec![vec![0.0; arm_count]; policy_count];
    let mut final_regrets = vec![Vec::with_capacity(cfg.trials); policy_count];
    for p in 0..policy_count {
        for (i, _) in rounds.iter().enumerate() {
            let mean = summaries.iter().map(|s| s.sampled[p][i]).sum::<f64>() / n;
            let var = summaries
                .iter()
                .map(|s| (s.sampled[p][i] - mean).powi(2))
                .sum::<f64>()
                / n;
            means[p][i] = mean;
            stds[p][i] = var.max(0.0).sqrt();
        }
        for s in &summaries {
            final_regrets[p].push(s.finals[p]);
            for k in 0..arm_count {
                mean_final_pulls[p][k] += s.pulls[p][k] as f64 / n;
            }
        }
    }

    Ok(ExperimentResult {
        curve: AggregateCurve {
            rounds,
            policies: cfg.policies.iter().map(|s| s.name.clone()).collect(),
            means,
            stds,
        },
        trials: cfg.trials,
        mean_final_pulls,
        final_regrets,
    })
}

/// The competitiveness oracle plus the empirical competitive-set size
/// measured by always pulling the optimal arm.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub report: CompetitivenessReport,
    pub empirical_c: usize,
    pub at_round: u64,
}

/// Reward pmf of one arm as (value, probability) pairs; latent rewards are
/// discretized by seeded Monte-Carlo binning.
fn arm_pmf(env: &Environment, arm: usize, seed: u64) -> Vec<(f64, f64)> {
    match env {
        Environment::Tabular(e) => e.marginal_pmf(arm),
        Environment::Empirical(e) => {
            let pool = e.pool(arm);
            let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
            for &v in pool {
                *counts.entry((v * 2.0).round() as i64).or_insert(0) += 1;
            }
            counts
                .into_iter()
                .map(|(key, c)| (key as f64 / 2.0, c as f64 / pool.len() as f64))
                .collect()
        }
        Environment::Latent(e) => {
            let (lo, hi) = e.reward_range(arm);
            let bins = 1000usize;
            let samples = 200_000usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut counts = vec![0u64; bins];
            for _ in 0..samples {
                let r = e.sample(arm, &mut rng);
                let i = (((r - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
                counts[i] += 1;
            }
            counts
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c > 0)
                .map(|(i, c)| {
                    let center = lo + (hi - lo) * (i as f64 + 0.5) / bins as f64;
                    (center, c as f64 / samples as f64)
                })
                .collect()
        }
    }
}

/// The exact-oracle classification of the built instance.
pub fn classify_instance(cfg: &ExperimentConfig, built: &BuiltExperiment) -> Result<CompetitivenessReport> {
    let means = built.env.true_means();
    let mut k_star = 0;
    for k in 1..means.len() {
        if means[k] > means[k_star] {
            k_star = k;
        }
    }
    let pmf = arm_pmf(&built.env, k_star, cfg.base_seed);
    classify_arms(&means, &built.table, &pmf)
}

pub fn report_oracle(cfg: &ExperimentConfig, built: &BuiltExperiment) -> Result<OracleReport> {
    let report = classify_instance(cfg, built)?;
    let means = built.env.true_means();
    let mut k_star = 0;
    for k in 1..means.len() {
        if means[k] > means[k_star] {
            k_star = k;
        }
    }

    // Empirical C: always pull the optimal arm, then measure the size of
    // the candidate set the filter would hand to a base policy.
    let at_round = cfg.oracle_round();
    let mut est = ArmEstimators::new(built.env.arm_count());
    let mut env_rng = ChaCha8Rng::seed_from_u64(cfg.base_seed);
    for t in 1..=at_round {
        let reward = built.env.sample(k_star, &mut env_rng);
        update_estimators(&mut est, &built.table, PullRecord { t, arm: k_star, reward })?;
    }
    let snapshot = compute_competitive_snapshot(&est, at_round, built.env.arm_count());
    Ok(OracleReport {
        report,
        empirical_c: snapshot.candidates.len(),
        at_round,
    })
}

/// Writes `t,<policy>_mean,<policy>_std,...` rows. Floats use Rust's
/// shortest round-trippable formatting, so `parse_csv` recovers the curve
/// exactly.
pub fn emit_csv<W: Write>(curve: &AggregateCurve, mut w: W) -> Result<()> {
    let mut header = String::from("t");
    for name in &curve.policies {
        header.push_str(&format!(",{name}_mean,{name}_std"));
    }
    writeln!(w, "{header}")?;
    for (i, t) in curve.rounds.iter().enumerate() {
        let mut row = t.to_string();
        for p in 0..curve.policies.len() {
            row.push_str(&format!(",{},{}", curve.means[p][i], curve.stds[p][i]));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

pub fn parse_csv<R: BufRead>(r: R) -> Result<AggregateCurve> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::domain("empty CSV"))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 3 || cols.len() % 2 == 0 {
        return Err(Error::domain(format!("bad CSV header `{header}`")));
    }
    let mut policies = Vec::new();
    for pair in cols[1..].chunks(2) {
        let name = pair[0]
            .strip_suffix("_mean")
            .ok_or_else(|| Error::domain(format!("bad CSV column `{}`", pair[0])))?;
        if pair[1].strip_suffix("_std") != Some(name) {
            return Err(Error::domain(format!("bad CSV column `{}`", pair[1])));
        }
        policies.push(name.to_string());
    }
    let mut rounds = Vec::new();
    let mut means = vec![Vec::new(); policies.len()];
    let mut stds = vec![Vec::new(); policies.len()];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::domain(format!("bad CSV row `{line}`")));
        }
        rounds.push(
            fields[0]
                .parse()
                .map_err(|_| Error::domain(format!("bad round `{}`", fields[0])))?,
        );
        for p in 0..policies.len() {
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::domain(format!("bad value `{s}`")))
            };
            means[p].push(parse(fields[1 + 2 * p])?);
            stds[p].push(parse(fields[2 + 2 * p])?);
        }
    }
    Ok(AggregateCurve { rounds, policies, means, stds })
}
