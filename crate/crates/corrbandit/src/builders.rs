//! Pseudo-reward table construction: exact conditionals from a joint pmf,
//! latent-source bound maximization, empirical rating conditionals with
//! padding and safety buffers, and the soft-bound transforms.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::env::{LatentSourceEnvironment, TabularJointEnvironment};
use crate::error::{Error, Result};
use crate::ingest::RatingRecord;
use crate::model::{PseudoRewardTable, RewardDomain, TableEntry};

/// Tight pseudo-rewards from a fully known joint distribution:
/// `s[l][k](r) = E[R_l | R_k = r]`. Zero-probability conditioning cells
/// get the vacuous bound `B`.
pub fn from_joint_exact(env: &TabularJointEnvironment) -> Result<PseudoRewardTable> {
    let arm_count = env.arm_count();
    let b = env.max_reward();
    let mut domains = Vec::with_capacity(arm_count);
    for k in 0..arm_count {
        domains.push(RewardDomain::discrete(env.values(k).to_vec(), b)?);
    }
    let mut entries = Vec::with_capacity(arm_count * arm_count);
    for l in 0..arm_count {
        for k in 0..arm_count {
            if l == k {
                entries.push(TableEntry::Identity);
                continue;
            }
            let bounds: Vec<f64> = (0..env.values(k).len())
                .map(|i| env.conditional_mean(l, k, i).unwrap_or(b))
                .collect();
            entries.push(TableEntry::Tabulated(bounds));
        }
    }
    PseudoRewardTable::new(domains, entries)
}

/// Pseudo-rewards for the latent-source model:
/// `s[l][k](r) = max over {x : lower_k(x) <= r <= upper_k(x)} of upper_l(x)`,
/// computed on a uniform latent grid of `grid_n` points and tabulated on a
/// reward grid of the same resolution. An empty feasible set yields `B`.
pub fn from_latent_bounds(
    env: &LatentSourceEnvironment,
    grid_n: usize,
) -> Result<PseudoRewardTable> {
    if grid_n < 2 {
        return Err(Error::config("latent grid needs at least 2 points"));
    }
    let arm_count = env.arm_count();
    let b = env.max_reward();
    let (x_lo, x_hi) = env.latent().support();
    let xs: Vec<f64> = (0..grid_n)
        .map(|i| x_lo + (x_hi - x_lo) * i as f64 / (grid_n - 1) as f64)
        .collect();

    // Bound evaluations reused across every (l, k) pair.
    let lowers: Vec<Vec<f64>> = (0..arm_count)
        .map(|k| xs.iter().map(|&x| env.bounds(k).lower.eval(x)).collect())
        .collect();
    let uppers: Vec<Vec<f64>> = (0..arm_count)
        .map(|k| xs.iter().map(|&x| env.bounds(k).upper.eval(x)).collect())
        .collect();

    let mut domains = Vec::with_capacity(arm_count);
    for k in 0..arm_count {
        let (r_lo, r_hi) = env.reward_range(k);
        domains.push(RewardDomain::continuous(r_lo, r_hi, b)?);
    }

    let mut entries = Vec::with_capacity(arm_count * arm_count);
    for l in 0..arm_count {
        for k in 0..arm_count {
            if l == k {
                entries.push(TableEntry::Identity);
                continue;
            }
            let (r_lo, r_hi) = env.reward_range(k);
            let bounds: Vec<f64> = (0..grid_n)
                .map(|i| {
                    let r = r_lo + (r_hi - r_lo) * i as f64 / (grid_n - 1) as f64;
                    pseudo_reward_at(&xs, &lowers[k], &uppers[k], &uppers[l], r).unwrap_or(b)
                })
                .collect();
            entries.push(TableEntry::Grid { lo: r_lo, hi: r_hi, bounds });
        }
    }
    PseudoRewardTable::new(domains, entries)
}

/// Max of `upper_l` over the feasible latent grid points for reward `r`
/// from arm `k`; `None` when no grid point is feasible. Bound inequalities
/// are closed, with a small tolerance so grid-boundary rewards stay
/// feasible.
fn pseudo_reward_at(
    xs: &[f64],
    lower_k: &[f64],
    upper_k: &[f64],
    upper_l: &[f64],
    r: f64,
) -> Option<f64> {
    let eps = 1e-9;
    let mut best: Option<f64> = None;
    for i in 0..xs.len() {
        if lower_k[i] <= r + eps && r <= upper_k[i] + eps {
            best = Some(best.map_or(upper_l[i], |b: f64| b.max(upper_l[i])));
        }
    }
    best
}

/// Soft-bound correction for latent pseudo-rewards learned from bounds
/// that hold only with probability `1 - delta`:
/// `(1 - delta)^2 * m + (1 - (1 - delta)^2) * M`.
pub fn soften_latent(m: f64, delta: f64, max_reward: f64) -> f64 {
    let keep = (1.0 - delta) * (1.0 - delta);
    keep * m + (1.0 - keep) * max_reward
}

/// Translation of a soft upper bound `u` holding with probability
/// `1 - delta` into a pseudo-reward: `u * (1 - delta) + M * delta`.
pub fn soften_soft_upper(u: f64, delta: f64, max_reward: f64) -> f64 {
    u * (1.0 - delta) + max_reward * delta
}

/// How a conditional cell is estimated from training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatingsMode {
    /// Empirical conditional mean.
    Mean,
    /// Conditional mean plus one empirical standard deviation.
    MeanPlusStd,
}

fn half_round(v: f64) -> f64 {
    (v * 2.0).round() / 2.0
}

/// Rounds each user's per-arm ratings into a single half-point value.
/// Returns one map `arm -> (rounded value, raw mean)` per user.
fn user_arm_values(
    train: &[RatingRecord],
    arms: &[String],
    arm_of: impl Fn(&RatingRecord) -> Option<usize>,
) -> BTreeMap<String, BTreeMap<usize, (f64, f64)>> {
    let _ = arms;
    let mut sums: BTreeMap<String, BTreeMap<usize, (f64, u64)>> = BTreeMap::new();
    for rec in train {
        if let Some(arm) = arm_of(rec) {
            let cell = sums
                .entry(rec.user_id.clone())
                .or_default()
                .entry(arm)
                .or_insert((0.0, 0));
            cell.0 += rec.rating;
            cell.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(user, arms)| {
            let vals = arms
                .into_iter()
                .map(|(arm, (sum, n))| {
                    let mean = sum / n as f64;
                    (arm, (half_round(mean), mean))
                })
                .collect();
            (user, vals)
        })
        .collect()
}

/// Learns a pseudo-reward table from training ratings. The cell
/// `(l, k, r)` is the mean rating of arm `l` over the users whose rounded
/// value for arm `k` equals `r` (plus one standard deviation in
/// [`RatingsMode::MeanPlusStd`]), then the safety buffer `q` is added,
/// then a seeded uniformly random `pad_fraction` of the off-diagonal cells
/// is overwritten with `B`. Cells with no qualifying user are `B`.
pub fn from_ratings(
    train: &[RatingRecord],
    arms: &[String],
    arm_of: impl Fn(&RatingRecord) -> Option<usize>,
    mode: RatingsMode,
    pad_fraction: f64,
    buffer: f64,
    max_reward: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PseudoRewardTable> {
    if train.is_empty() {
        return Err(Error::ingest("empty training set"));
    }
    if !(0.0..=1.0).contains(&pad_fraction) {
        return Err(Error::config(format!("pad fraction {pad_fraction} outside [0, 1]")));
    }
    if buffer < 0.0 {
        return Err(Error::config(format!("safety buffer {buffer} must be >= 0")));
    }
    let arm_count = arms.len();
    let steps = (2.0 * max_reward).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * 0.5).collect();
    let per_user = user_arm_values(train, arms, arm_of);

    let domains: Vec<RewardDomain> = (0..arm_count)
        .map(|_| RewardDomain::discrete(grid.clone(), max_reward))
        .collect::<Result<_>>()?;

    // Conditional samples per (l, k, value index).
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); arm_count * arm_count * grid.len()];
    for values in per_user.values() {
        for (&k, &(rounded, _)) in values {
            let Some(ri) = grid.iter().position(|&g| (g - rounded).abs() < 1e-9) else {
                continue;
            };
            for (&l, &(_, raw_mean)) in values {
                if l == k {
                    continue;
                }
                samples[(l * arm_count + k) * grid.len() + ri].push(raw_mean);
            }
        }
    }

    let mut entries = Vec::with_capacity(arm_count * arm_count);
    for l in 0..arm_count {
        for k in 0..arm_count {
            if l == k {
                entries.push(TableEntry::Identity);
                continue;
            }
            let bounds: Vec<f64> = (0..grid.len())
                .map(|ri| {
                    let vals = &samples[(l * arm_count + k) * grid.len() + ri];
                    if vals.is_empty() {
                        return max_reward;
                    }
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let est = match mode {
                        RatingsMode::Mean => mean,
                        RatingsMode::MeanPlusStd => {
                            let var = vals
                                .iter()
                                .map(|v| (v - mean) * (v - mean))
                                .sum::<f64>()
                                / vals.len() as f64;
                            mean + var.sqrt()
                        }
                    };
                    // Buffer before padding, so padded cells are exactly B.
                    (est + buffer).min(max_reward)
                })
                .collect();
            entries.push(TableEntry::Tabulated(bounds));
        }
    }

    // Pad: overwrite a seeded random p-fraction of off-diagonal cells with B.
    let mut cell_ids: Vec<(usize, usize)> = (0..arm_count * arm_count)
        .filter(|idx| idx / arm_count != idx % arm_count)
        .flat_map(|idx| (0..grid.len()).map(move |ri| (idx, ri)))
        .collect();
    cell_ids.shuffle(rng);
    let n_pad = (pad_fraction * cell_ids.len() as f64).round() as usize;
    for &(idx, ri) in cell_ids.iter().take(n_pad) {
        if let TableEntry::Tabulated(bounds) = &mut entries[idx] {
            bounds[ri] = max_reward;
        }
    }

    PseudoRewardTable::new(domains, entries)
}
