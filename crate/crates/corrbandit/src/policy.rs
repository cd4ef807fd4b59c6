//! Base bandit policies (UCB1, Gaussian and Beta Thompson sampling) and
//! the C-Bandit wrapper that filters arms through the empirically
//! competitive set before delegating to the base policy.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaSampler, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{significant_set, update_estimators, ArmEstimators, PseudoRewardTable, PullRecord};

/// The classical algorithm plugged into the last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasePolicy {
    Ucb,
    /// Gaussian posterior sample with variance `beta * B / (n + 1)`.
    TsGaussian { beta: f64 },
    /// Beta-prior Thompson sampling; requires binary {0, 1} rewards.
    TsBeta,
}

/// UCB1 index. `+inf` for an unpulled arm.
pub fn ucb_index(mu_hat: f64, n: u64, t: u64, max_reward: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    mu_hat + max_reward * (2.0 * (t as f64).ln() / n as f64).sqrt()
}

/// One draw from `Normal(mu_hat, beta * B / (n + 1))`.
pub fn ts_gaussian_sample(
    mu_hat: f64,
    n: u64,
    max_reward: f64,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::config(format!("TS variance scale beta must be positive, got {beta}")));
    }
    let sd = (beta * max_reward / (n as f64 + 1.0)).sqrt();
    let z: f64 = StandardNormal.sample(rng);
    Ok(mu_hat + sd * z)
}

/// One draw from `Beta(n * mu_hat + 1, n * (1 - mu_hat) + 1)`.
pub fn ts_beta_sample(mu_hat: f64, n: u64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let successes = n as f64 * mu_hat;
    if !(0.0..=n as f64 + 1e-9).contains(&successes) || (successes - successes.round()).abs() > 1e-6
    {
        return Err(Error::domain(
            "Beta Thompson sampling requires a binary {0,1} reward history",
        ));
    }
    let dist = BetaSampler::new(successes + 1.0, n as f64 - successes + 1.0)
        .map_err(|e| Error::domain(format!("invalid Beta posterior: {e}")))?;
    Ok(dist.sample(rng))
}

/// The competitive-set computation at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitiveSetSnapshot {
    pub t: u64,
    /// Arms with at least `t / K` pulls.
    pub significant: Vec<usize>,
    /// Highest empirical mean within the significant set (lowest index on
    /// ties).
    pub k_emp: usize,
    /// Empirically competitive arms.
    pub competitive: Vec<usize>,
    /// `competitive` united with `k_emp`: the arms the base policy sees.
    pub candidates: Vec<usize>,
}

/// Classifies every arm as empirically competitive or not against the
/// significant set. `lower_bound_floor` is the pseudo-lower-bound hook: the
/// competitiveness threshold is `max(mu_hat[k_emp], floor)`, and the
/// default `-inf` floor reduces to the published test.
pub fn compute_competitive_snapshot_with_floor(
    est: &ArmEstimators,
    t: u64,
    arm_count: usize,
    lower_bound_floor: f64,
) -> CompetitiveSetSnapshot {
    let significant = significant_set(est, t, arm_count);
    debug_assert!(!significant.is_empty(), "needs every arm initialized (t >= K)");
    let mut k_emp = significant[0];
    for &k in &significant[1..] {
        if est.mean(k) > est.mean(k_emp) {
            k_emp = k;
        }
    }
    let threshold = est.mean(k_emp).max(lower_bound_floor);
    let competitive: Vec<usize> = (0..arm_count)
        .filter(|&k| {
            let min_pseudo = significant
                .iter()
                .map(|&l| est.pseudo_mean(k, l))
                .fold(f64::INFINITY, f64::min);
            min_pseudo >= threshold
        })
        .collect();
    let mut candidates = competitive.clone();
    if !candidates.contains(&k_emp) {
        candidates.push(k_emp);
        candidates.sort_unstable();
    }
    CompetitiveSetSnapshot {
        t,
        significant,
        k_emp,
        competitive,
        candidates,
    }
}

pub fn compute_competitive_snapshot(
    est: &ArmEstimators,
    t: u64,
    arm_count: usize,
) -> CompetitiveSetSnapshot {
    compute_competitive_snapshot_with_floor(est, t, arm_count, f64::NEG_INFINITY)
}

/// A sequential arm-selection strategy: a base policy run either over all
/// arms or through the C-Bandit competitive-set filter.
#[derive(Debug, Clone)]
pub struct Policy {
    base: BasePolicy,
    /// Whether the competitive-set filter is applied.
    correlated: bool,
    max_reward: f64,
    lower_bound_floor: f64,
    est: ArmEstimators,
    rng: ChaCha8Rng,
}

impl Policy {
    pub fn new(
        base: BasePolicy,
        correlated: bool,
        arm_count: usize,
        max_reward: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if let BasePolicy::TsGaussian { beta } = base {
            if beta <= 0.0 {
                return Err(Error::config("TS variance scale beta must be positive"));
            }
        }
        Ok(Policy {
            base,
            correlated,
            max_reward,
            lower_bound_floor: f64::NEG_INFINITY,
            est: ArmEstimators::new(arm_count),
            rng,
        })
    }

    /// Installs a pseudo-lower-bound floor for the competitiveness test
    /// (see [`compute_competitive_snapshot_with_floor`]).
    pub fn with_lower_bound_floor(mut self, floor: f64) -> Self {
        self.lower_bound_floor = floor;
        self
    }

    pub fn estimators(&self) -> &ArmEstimators {
        &self.est
    }

    /// Chooses the arm for round `t` (1-based). Rounds `1..=K` are a
    /// forced round-robin so that every arm has a sample before the
    /// competitive-set filter is applied.
    pub fn select_arm(&mut self, t: u64) -> Result<usize> {
        let arm_count = self.est.arm_count();
        if t <= arm_count as u64 {
            return Ok((t - 1) as usize);
        }
        let candidates: Vec<usize> = if self.correlated {
            compute_competitive_snapshot_with_floor(
                &self.est,
                t - 1,
                arm_count,
                self.lower_bound_floor,
            )
            .candidates
        } else {
            (0..arm_count).collect()
        };
        debug_assert!(!candidates.is_empty());
        let mut best = candidates[0];
        let mut best_score = f64::NEG_INFINITY;
        for &k in &candidates {
            let score = match self.base {
                BasePolicy::Ucb => {
                    ucb_index(self.est.mean(k), self.est.pulls(k), t - 1, self.max_reward)
                }
                BasePolicy::TsGaussian { beta } => ts_gaussian_sample(
                    self.est.mean(k),
                    self.est.pulls(k),
                    self.max_reward,
                    beta,
                    &mut self.rng,
                )?,
                BasePolicy::TsBeta => {
                    ts_beta_sample(self.est.mean(k), self.est.pulls(k), &mut self.rng)?
                }
            };
            // Strict > keeps the lowest index on exact ties.
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        Ok(best)
    }

    /// Feeds the observed reward back into the estimators.
    pub fn observe(&mut self, table: &PseudoRewardTable, t: u64, arm: usize, reward: f64) -> Result<()> {
        update_estimators(&mut self.est, table, PullRecord { t, arm, reward })
    }
}
