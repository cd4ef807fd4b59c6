//! Correlated multi-armed bandits: pseudo-reward tables, the
//! competitive-set filter around UCB/Thompson-sampling base policies,
//! reward environments (tabular joints, latent random sources, empirical
//! rating pools), pseudo-reward builders, theoretical bound calculators,
//! a ratings ingestion pipeline, and a seeded experiment harness.

pub mod analysis;
pub mod builders;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod model;
pub mod policy;

pub use analysis::{
    bound_competitive_pulls, bound_noncompetitive_pulls, bound_total_regret, classify_arms,
    kl_bernoulli, kl_discrete, regret_lower_bound, t0_threshold, ArmLabel, ArmReport,
    CompetitivenessReport, RegretTrace,
};
pub use config::{load_config, ExperimentConfig, PolicySpec};
pub use env::{
    ArmBounds, BoundFn, EmpiricalEnvironment, Environment, LatentDist, LatentSourceEnvironment,
    TabularJointEnvironment,
};
pub use error::{Error, Result};
pub use experiment::{
    build_experiment, classify_instance, emit_csv, parse_csv, report_oracle, run_experiment,
    run_single_trial,
    AggregateCurve, BuiltExperiment, ExperimentResult, OracleReport,
};
pub use model::{ArmEstimators, PseudoRewardTable, PullRecord, RewardDomain};
pub use policy::{
    compute_competitive_snapshot, compute_competitive_snapshot_with_floor, BasePolicy,
    CompetitiveSetSnapshot, Policy,
};
