//! Ground-truth oracles and theoretical calculators: pseudo-gaps and
//! competitiveness classification, regret accounting, the expected-pull
//! upper bounds for (non-)competitive arms, and a discrete KL helper for
//! the regret lower bound.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::PseudoRewardTable;

/// Competitiveness classification of one arm with respect to the optimal
/// arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmLabel {
    Optimal,
    Competitive,
    NonCompetitive,
}

impl fmt::Display for ArmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ArmLabel::Optimal => "optimal",
            ArmLabel::Competitive => "competitive",
            ArmLabel::NonCompetitive => "non-competitive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmReport {
    pub mean: f64,
    /// Expected pseudo-reward of this arm with respect to the optimal arm.
    pub phi: f64,
    /// `mu[k*] - phi`; positive means non-competitive.
    pub pseudo_gap: f64,
    pub label: ArmLabel,
}

/// Per-arm expected pseudo-rewards, pseudo-gaps and labels, plus the
/// competitive count `C` (which includes the optimal arm).
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitivenessReport {
    pub optimal_arm: usize,
    pub arms: Vec<ArmReport>,
    pub competitive_count: usize,
}

impl fmt::Display for CompetitivenessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "arm  mu        phi       pseudo_gap  label")?;
        for (k, a) in self.arms.iter().enumerate() {
            writeln!(
                f,
                "{:<4} {:<9.5} {:<9.5} {:<11.5} {}",
                k + 1,
                a.mean,
                a.phi,
                a.pseudo_gap,
                a.label
            )?;
        }
        write!(f, "C = {}", self.competitive_count)
    }
}

/// Labels every arm against the optimal one. `optimal_pmf` is the reward
/// pmf of the optimal arm as (value, probability) pairs; the expected
/// pseudo-reward of arm `k` is `sum_r P(R[k*] = r) * s[k][k*](r)`.
/// Boundary pseudo-gap 0 counts as competitive.
pub fn classify_arms(
    means: &[f64],
    table: &PseudoRewardTable,
    optimal_pmf: &[(f64, f64)],
) -> Result<CompetitivenessReport> {
    if means.is_empty() {
        return Err(Error::domain("no arms"));
    }
    let mut k_star = 0;
    for k in 1..means.len() {
        if means[k] > means[k_star] {
            k_star = k;
        }
    }
    if means
        .iter()
        .enumerate()
        .any(|(k, &m)| k != k_star && m == means[k_star])
    {
        return Err(Error::domain(
            "degenerate instance: the optimal arm is not unique",
        ));
    }
    let mass: f64 = optimal_pmf.iter().map(|(_, p)| p).sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("optimal-arm pmf sums to {mass}, not 1")));
    }

    let mut arms = Vec::with_capacity(means.len());
    let mut competitive_count = 0;
    for (k, &mean) in means.iter().enumerate() {
        let phi: f64 = optimal_pmf
            .iter()
            .map(|&(r, p)| p * table.evaluate(k, k_star, r))
            .sum();
        let pseudo_gap = means[k_star] - phi;
        let label = if k == k_star {
            ArmLabel::Optimal
        } else if pseudo_gap > 0.0 {
            ArmLabel::NonCompetitive
        } else {
            ArmLabel::Competitive
        };
        if label != ArmLabel::NonCompetitive {
            competitive_count += 1;
        }
        arms.push(ArmReport { mean, phi, pseudo_gap, label });
    }
    Ok(CompetitivenessReport {
        optimal_arm: k_star,
        arms,
        competitive_count,
    })
}

/// Per-round cumulative pseudo-regret and pull counts for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    means: Vec<f64>,
    optimal_mean: f64,
    /// Cumulative pseudo-regret after each round.
    pub cumulative: Vec<f64>,
    pub pulls: Vec<u64>,
}

impl RegretTrace {
    pub fn new(means: Vec<f64>) -> Self {
        let optimal_mean = means.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        RegretTrace {
            pulls: vec![0; means.len()],
            means,
            optimal_mean,
            cumulative: Vec::new(),
        }
    }

    pub fn record_pull(&mut self, arm: usize) {
        let gap = self.optimal_mean - self.means[arm];
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.push(prev + gap);
        self.pulls[arm] += 1;
    }

    pub fn rounds(&self) -> usize {
        self.cumulative.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// The identity `Reg(T) = sum_k n_k(T) * gap_k`, recomputed from the
    /// pull counts.
    pub fn regret_from_pulls(&self) -> f64 {
        self.pulls
            .iter()
            .zip(&self.means)
            .map(|(&n, &mu)| n as f64 * (self.optimal_mean - mu))
            .sum()
    }
}

/// Smallest integer `tau >= 2` with
/// `min(gap_min, pseudo_gap) >= 4 * sqrt(2 K ln(tau) / tau)`.
pub fn t0_threshold(arm_count: usize, gap_min: f64, pseudo_gap: f64) -> Result<u64> {
    if gap_min <= 0.0 || pseudo_gap <= 0.0 {
        return Err(Error::domain("t0 needs positive gaps"));
    }
    let g = gap_min.min(pseudo_gap);
    let holds = |tau: u64| g >= 4.0 * (2.0 * arm_count as f64 * (tau as f64).ln() / tau as f64).sqrt();
    if holds(2) {
        return Ok(2);
    }
    if holds(3) {
        return Ok(3);
    }
    // The right-hand side decreases monotonically for tau >= 3, so double
    // to bracket and then bisect.
    let mut hi = 4u64;
    while !holds(hi) {
        hi = hi.saturating_mul(2);
    }
    let mut lo = hi / 2; // condition fails at lo, holds at hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Upper bound on the expected pulls of a non-competitive arm:
/// `K t0 + sum_{t = K t0}^{T} 2 K^3 (t/K)^{-2} + sum_{t = 1}^{T} 3 t^{-3}`.
pub fn bound_noncompetitive_pulls(arm_count: usize, horizon: u64, t0: u64) -> f64 {
    let k = arm_count as f64;
    let mut total = k * t0 as f64;
    let start = arm_count as u64 * t0;
    let mut t = start;
    while t <= horizon {
        let tf = t as f64;
        total += 2.0 * k * k * k / ((tf / k) * (tf / k));
        t += 1;
    }
    for t in 1..=horizon {
        let tf = t as f64;
        total += 3.0 / (tf * tf * tf);
    }
    total
}

/// Upper bound on the expected pulls of a competitive arm:
/// `8 ln(T) / gap^2 + (1 + pi^2 / 3) + sum_t 2 K t exp(-t gap_min^2 / 2K)`.
pub fn bound_competitive_pulls(arm_count: usize, horizon: u64, gap: f64, gap_min: f64) -> Result<f64> {
    if gap <= 0.0 {
        return Err(Error::domain("competitive-pull bound needs a positive gap"));
    }
    let k = arm_count as f64;
    let mut total = 8.0 * (horizon as f64).ln() / (gap * gap)
        + 1.0
        + std::f64::consts::PI * std::f64::consts::PI / 3.0;
    let rate = gap_min * gap_min / (2.0 * k);
    for t in 1..=horizon {
        let term = 2.0 * k * t as f64 * (-(t as f64) * rate).exp();
        total += term;
        if term < 1e-16 && t as f64 * rate > 50.0 {
            break;
        }
    }
    Ok(total)
}

/// Combines the per-arm pull bounds into the regret upper bound
/// `sum_{competitive k != k*} gap_k U_c + sum_{non-competitive k} gap_k U_nc`,
/// with per-arm `t0` from each non-competitive arm's pseudo-gap.
pub fn bound_total_regret(
    report: &CompetitivenessReport,
    arm_count: usize,
    horizon: u64,
) -> Result<f64> {
    let optimal_mean = report.arms[report.optimal_arm].mean;
    let gap_min = report
        .arms
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != report.optimal_arm)
        .map(|(_, a)| optimal_mean - a.mean)
        .fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (k, arm) in report.arms.iter().enumerate() {
        if k == report.optimal_arm {
            continue;
        }
        let gap = optimal_mean - arm.mean;
        match arm.label {
            ArmLabel::Optimal => unreachable!(),
            ArmLabel::Competitive => {
                total += gap * bound_competitive_pulls(arm_count, horizon, gap, gap_min)?;
            }
            ArmLabel::NonCompetitive => {
                let t0 = t0_threshold(arm_count, gap_min, arm.pseudo_gap)?;
                total += gap * bound_noncompetitive_pulls(arm_count, horizon, t0);
            }
        }
    }
    Ok(total)
}

/// KL divergence between Bernoulli(p) and Bernoulli(q), in nats.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    kl_discrete(&[1.0 - p, p], &[1.0 - q, q])
}

/// KL divergence between finite discrete pmfs, cell-wise; `+inf` when
/// absolute continuity fails.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        total += pi * (pi / qi).ln();
    }
    total
}

/// Lower-bound value `max over competitive k != k* of gap_k / KL(f_k || f~_k)`
/// for a user-supplied alternate pmf per arm.
pub fn regret_lower_bound(
    report: &CompetitivenessReport,
    reward_pmfs: &[Vec<f64>],
    alternate_pmfs: &[Vec<f64>],
) -> f64 {
    if report.competitive_count <= 1 {
        return 0.0;
    }
    let optimal_mean = report.arms[report.optimal_arm].mean;
    report
        .arms
        .iter()
        .enumerate()
        .filter(|(k, a)| *k != report.optimal_arm && a.label == ArmLabel::Competitive)
        .map(|(k, a)| (optimal_mean - a.mean) / kl_discrete(&reward_pmfs[k], &alternate_pmfs[k]))
        .fold(0.0, f64::max)
}
