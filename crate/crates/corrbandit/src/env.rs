//! Sampleable reward models: exact tabular joints, latent-random-source
//! models with per-arm bound functions, and empirical rating pools.
//!
//! Environments are immutable after construction; sampling takes an
//! external rng stream so parallel trials each hold their own stream.
//! Every environment consumes a fixed number of rng draws per round
//! regardless of which arm is pulled, so two policies replaying the same
//! environment seed face the same reward realizations.

use std::io::BufRead;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta as BetaDist, Continuous};
use statrs::function::beta::inv_beta_reg;

use crate::error::{Error, Result};
use crate::model::RewardDomain;

/// Grid resolution used for latent-model mean integration.
pub const MEAN_GRID: usize = 10_001;

/// A joint pmf over reward tuples; the pulled arm's coordinate is the
/// round's observed reward.
#[derive(Debug, Clone)]
pub struct TabularJointEnvironment {
    /// Discrete reward values per arm.
    values: Vec<Vec<f64>>,
    /// (value index per arm, mass).
    outcomes: Vec<(Vec<usize>, f64)>,
    max_reward: f64,
}

impl TabularJointEnvironment {
    pub fn new(
        values: Vec<Vec<f64>>,
        outcomes: Vec<(Vec<usize>, f64)>,
        max_reward: f64,
    ) -> Result<Self> {
        let arm_count = values.len();
        if arm_count == 0 {
            return Err(Error::domain("need at least one arm"));
        }
        let mut total = 0.0;
        for (idx, mass) in &outcomes {
            if idx.len() != arm_count {
                return Err(Error::domain("outcome tuple arity mismatch"));
            }
            for (k, &i) in idx.iter().enumerate() {
                if i >= values[k].len() {
                    return Err(Error::domain("outcome value index out of range"));
                }
            }
            if *mass < 0.0 {
                return Err(Error::domain("negative probability mass"));
            }
            total += mass;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("joint masses sum to {total}, not 1")));
        }
        for vs in &values {
            for &v in vs {
                if v < 0.0 || v > max_reward {
                    return Err(Error::domain(format!("value {v} outside [0, {max_reward}]")));
                }
            }
        }
        Ok(TabularJointEnvironment {
            values,
            outcomes,
            max_reward,
        })
    }

    pub fn arm_count(&self) -> usize {
        self.values.len()
    }

    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn values(&self, arm: usize) -> &[f64] {
        &self.values[arm]
    }

    /// Draws a full reward tuple from the joint pmf.
    pub fn sample_joint(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = &self.outcomes[self.outcomes.len() - 1].0;
        for (idx, mass) in &self.outcomes {
            acc += mass;
            if u < acc {
                chosen = idx;
                break;
            }
        }
        chosen
            .iter()
            .enumerate()
            .map(|(k, &i)| self.values[k][i])
            .collect()
    }

    /// Marginal pmf of one arm as (value, probability) pairs.
    pub fn marginal_pmf(&self, arm: usize) -> Vec<(f64, f64)> {
        let mut probs = vec![0.0; self.values[arm].len()];
        for (idx, mass) in &self.outcomes {
            probs[idx[arm]] += mass;
        }
        self.values[arm]
            .iter()
            .copied()
            .zip(probs)
            .collect()
    }

    pub fn true_means(&self) -> Vec<f64> {
        (0..self.arm_count())
            .map(|k| {
                self.marginal_pmf(k)
                    .iter()
                    .map(|(v, p)| v * p)
                    .sum()
            })
            .collect()
    }

    /// Exact conditional expectation `E[R_l | R_k = values[k][i]]`, or
    /// `None` when the conditioning event has zero probability.
    pub fn conditional_mean(&self, l: usize, k: usize, i: usize) -> Option<f64> {
        let mut prob = 0.0;
        let mut acc = 0.0;
        for (idx, mass) in &self.outcomes {
            if idx[k] == i {
                prob += mass;
                acc += mass * self.values[l][idx[l]];
            }
        }
        if prob > 0.0 {
            Some(acc / prob)
        } else {
            None
        }
    }

    /// Fixture text format: `K B` header, `values ...` line per arm, then
    /// `mass r1 ... rK p` lines using reward values.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::config("empty environment fixture"))??;
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                break trimmed.to_string();
            }
        };
        let mut parts = header.split_whitespace();
        let arm_count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("bad env header: expected `K B`"))?;
        let max_reward: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("bad env header: expected `K B`"))?;

        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut outcomes: Vec<(Vec<usize>, f64)> = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            match fields.next() {
                Some("values") => {
                    let vs: Vec<f64> = fields
                        .map(|s| {
                            s.parse()
                                .map_err(|_| Error::config(format!("bad value in `{line}`")))
                        })
                        .collect::<Result<_>>()?;
                    values.push(vs);
                }
                Some("mass") => {
                    let nums: Vec<f64> = fields
                        .map(|s| {
                            s.parse()
                                .map_err(|_| Error::config(format!("bad number in `{line}`")))
                        })
                        .collect::<Result<_>>()?;
                    if nums.len() != arm_count + 1 {
                        return Err(Error::config(format!(
                            "mass line needs {arm_count} rewards and a probability: `{line}`"
                        )));
                    }
                    if values.len() != arm_count {
                        return Err(Error::config("mass lines must follow all values lines"));
                    }
                    let idx: Vec<usize> = nums[..arm_count]
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| {
                            values[k]
                                .iter()
                                .position(|&w| (w - v).abs() <= 1e-9)
                                .ok_or_else(|| {
                                    Error::config(format!("reward {v} not in arm {} values", k + 1))
                                })
                        })
                        .collect::<Result<_>>()?;
                    outcomes.push((idx, nums[arm_count]));
                }
                _ => return Err(Error::config(format!("bad fixture line: `{line}`"))),
            }
        }
        if values.len() != arm_count {
            return Err(Error::config(format!(
                "expected {arm_count} values lines, got {}",
                values.len()
            )));
        }
        TabularJointEnvironment::new(values, outcomes, max_reward)
    }
}

/// Distribution of the hidden variable `X`.
#[derive(Debug, Clone)]
pub enum LatentDist {
    /// `Beta(alpha, beta)` affinely scaled from `(0, 1)` onto `[lo, hi]`.
    ScaledBeta { alpha: f64, beta: f64, lo: f64, hi: f64 },
    /// A discrete pmf on grid points.
    GridPmf { points: Vec<f64>, probs: Vec<f64> },
}

impl LatentDist {
    pub fn support(&self) -> (f64, f64) {
        match self {
            LatentDist::ScaledBeta { lo, hi, .. } => (*lo, *hi),
            LatentDist::GridPmf { points, .. } => (points[0], points[points.len() - 1]),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        // One uniform draw per round, mapped through the inverse cdf, so
        // rng consumption never depends on the realization.
        let u: f64 = rng.gen();
        match self {
            LatentDist::ScaledBeta { alpha, beta, lo, hi } => {
                let b = inv_beta_reg(*alpha, *beta, u.clamp(1e-15, 1.0 - 1e-15));
                lo + b * (hi - lo)
            }
            LatentDist::GridPmf { points, probs } => {
                let mut acc = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                points[points.len() - 1]
            }
        }
    }
}

/// A per-arm bound function of the latent variable.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundFn {
    /// `slope * x + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `(shift - x)^2 + offset`.
    QuadShift { shift: f64, offset: f64 },
    /// Piecewise-linear through `(x, y)` knots sorted by `x`.
    PiecewiseLinear { xs: Vec<f64>, ys: Vec<f64> },
}

impl BoundFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BoundFn::Affine { slope, intercept } => slope * x + intercept,
            BoundFn::QuadShift { shift, offset } => (shift - x) * (shift - x) + offset,
            BoundFn::PiecewiseLinear { xs, ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let i = xs.partition_point(|&v| v <= x).min(xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let frac = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
                ys[i - 1] * (1.0 - frac) + ys[i] * frac
            }
        }
    }

    /// Exact range of the function over `[lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self {
            BoundFn::Affine { .. } => {
                let (a, b) = (self.eval(lo), self.eval(hi));
                (a.min(b), a.max(b))
            }
            BoundFn::QuadShift { shift, .. } => {
                let mut min = self.eval(lo).min(self.eval(hi));
                let mut max = self.eval(lo).max(self.eval(hi));
                if *shift > lo && *shift < hi {
                    min = min.min(self.eval(*shift));
                    max = max.max(self.eval(*shift));
                }
                (min, max)
            }
            BoundFn::PiecewiseLinear { xs, .. } => {
                let mut min = self.eval(lo).min(self.eval(hi));
                let mut max = self.eval(lo).max(self.eval(hi));
                for &x in xs {
                    if x > lo && x < hi {
                        min = min.min(self.eval(x));
                        max = max.max(self.eval(x));
                    }
                }
                (min, max)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArmBounds {
    pub lower: BoundFn,
    pub upper: BoundFn,
}

/// Rewards `Y_k(X)` driven by a hidden i.i.d. variable `X` with known
/// per-arm bound functions; the conditional reward is uniform between the
/// bounds (deterministic when they coincide).
#[derive(Debug, Clone)]
pub struct LatentSourceEnvironment {
    latent: LatentDist,
    arms: Vec<ArmBounds>,
    max_reward: f64,
}

impl LatentSourceEnvironment {
    pub fn new(latent: LatentDist, arms: Vec<ArmBounds>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::domain("need at least one arm"));
        }
        let (lo, hi) = latent.support();
        if !(lo < hi) {
            return Err(Error::domain("latent support must be a proper interval"));
        }
        let grid = 1024;
        let mut max_reward = f64::NEG_INFINITY;
        for (k, a) in arms.iter().enumerate() {
            for i in 0..=grid {
                let x = lo + (hi - lo) * i as f64 / grid as f64;
                if a.lower.eval(x) > a.upper.eval(x) + 1e-9 {
                    return Err(Error::domain(format!(
                        "arm {k}: lower bound exceeds upper bound at x = {x}"
                    )));
                }
            }
            max_reward = max_reward.max(a.upper.range(lo, hi).1);
        }
        Ok(LatentSourceEnvironment {
            latent,
            arms,
            max_reward,
        })
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn latent(&self) -> &LatentDist {
        &self.latent
    }

    pub fn bounds(&self, arm: usize) -> &ArmBounds {
        &self.arms[arm]
    }

    /// Exact reward range of an arm over the latent support.
    pub fn reward_range(&self, arm: usize) -> (f64, f64) {
        let (lo, hi) = self.latent.support();
        let min = self.arms[arm].lower.range(lo, hi).0;
        let max = self.arms[arm].upper.range(lo, hi).1;
        (min, max)
    }

    /// Draws `x` from the latent distribution, then a reward uniform
    /// between the arm's bounds at `x`.
    pub fn sample(&self, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
        let x = self.latent.sample(rng);
        let u: f64 = rng.gen();
        let lo = self.arms[arm].lower.eval(x);
        let hi = self.arms[arm].upper.eval(x);
        let r = lo + u * (hi - lo);
        debug_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
        r
    }

    /// Conditional mean reward at a latent realization: midpoint of the
    /// bounds under the uniform conditional.
    pub fn conditional_mean_at(&self, arm: usize, x: f64) -> f64 {
        0.5 * (self.arms[arm].lower.eval(x) + self.arms[arm].upper.eval(x))
    }

    /// Marginal means by deterministic grid integration over the latent
    /// density (trapezoid weights; ~1e-6 on smooth fixtures).
    pub fn true_means(&self) -> Vec<f64> {
        match &self.latent {
            LatentDist::GridPmf { points, probs } => (0..self.arm_count())
                .map(|k| {
                    points
                        .iter()
                        .zip(probs)
                        .map(|(&x, &p)| p * self.conditional_mean_at(k, x))
                        .sum()
                })
                .collect(),
            LatentDist::ScaledBeta { alpha, beta, lo, hi } => {
                let dist = BetaDist::new(*alpha, *beta).expect("validated parameters");
                let scale = hi - lo;
                let n = MEAN_GRID;
                (0..self.arm_count())
                    .map(|k| {
                        let mut acc = 0.0;
                        for i in 0..=n {
                            // Integrate on the unit interval; clip the open
                            // endpoints where the density can diverge.
                            let b = (i as f64 / n as f64).clamp(1e-9, 1.0 - 1e-9);
                            let x = lo + b * scale;
                            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                            acc += w * dist.pdf(b) * self.conditional_mean_at(k, x);
                        }
                        acc / n as f64
                    })
                    .collect()
            }
        }
    }
}

/// Per-arm pools of observed ratings; sampling is uniform with
/// replacement from the pulled arm's pool.
#[derive(Debug, Clone)]
pub struct EmpiricalEnvironment {
    pools: Vec<Vec<f64>>,
    max_reward: f64,
}

impl EmpiricalEnvironment {
    pub fn new(pools: Vec<Vec<f64>>, max_reward: f64) -> Result<Self> {
        if pools.is_empty() {
            return Err(Error::domain("need at least one arm"));
        }
        for (k, pool) in pools.iter().enumerate() {
            if pool.is_empty() {
                return Err(Error::domain(format!("arm {k} has an empty rating pool")));
            }
            for &r in pool {
                if r < 0.0 || r > max_reward {
                    return Err(Error::domain(format!(
                        "rating {r} outside [0, {max_reward}]"
                    )));
                }
            }
        }
        Ok(EmpiricalEnvironment { pools, max_reward })
    }

    pub fn arm_count(&self) -> usize {
        self.pools.len()
    }

    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn pool(&self, arm: usize) -> &[f64] {
        &self.pools[arm]
    }

    pub fn sample(&self, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen();
        let pool = &self.pools[arm];
        let i = ((u * pool.len() as f64) as usize).min(pool.len() - 1);
        pool[i]
    }

    pub fn true_means(&self) -> Vec<f64> {
        self.pools
            .iter()
            .map(|p| p.iter().sum::<f64>() / p.len() as f64)
            .collect()
    }
}

/// Any of the supported reward models behind one sampling surface.
#[derive(Debug, Clone)]
pub enum Environment {
    Tabular(TabularJointEnvironment),
    Latent(LatentSourceEnvironment),
    Empirical(EmpiricalEnvironment),
}

impl Environment {
    pub fn arm_count(&self) -> usize {
        match self {
            Environment::Tabular(e) => e.arm_count(),
            Environment::Latent(e) => e.arm_count(),
            Environment::Empirical(e) => e.arm_count(),
        }
    }

    pub fn max_reward(&self) -> f64 {
        match self {
            Environment::Tabular(e) => e.max_reward,
            Environment::Latent(e) => e.max_reward(),
            Environment::Empirical(e) => e.max_reward(),
        }
    }

    /// Observed reward for pulling `arm` this round. Consumes the same
    /// number of rng draws whatever the arm.
    pub fn sample(&self, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Environment::Tabular(e) => e.sample_joint(rng)[arm],
            Environment::Latent(e) => e.sample(arm, rng),
            Environment::Empirical(e) => e.sample(arm, rng),
        }
    }

    pub fn true_means(&self) -> Vec<f64> {
        match self {
            Environment::Tabular(e) => e.true_means(),
            Environment::Latent(e) => e.true_means(),
            Environment::Empirical(e) => e.true_means(),
        }
    }

    /// The reward domain of one arm, as used for estimator validation and
    /// pseudo-reward table construction.
    pub fn reward_domain(&self, arm: usize) -> Result<RewardDomain> {
        match self {
            Environment::Tabular(e) => {
                RewardDomain::discrete(e.values[arm].clone(), e.max_reward)
            }
            Environment::Latent(e) => {
                let (lo, hi) = e.reward_range(arm);
                RewardDomain::continuous(lo, hi, e.max_reward())
            }
            Environment::Empirical(e) => {
                // Ratings live on the half-point grid 0, 0.5, ..., B.
                let steps = (2.0 * e.max_reward()).round() as usize;
                let values = (0..=steps).map(|i| i as f64 * 0.5).collect();
                RewardDomain::discrete(values, e.max_reward())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    pub(crate) fn binary_a() -> TabularJointEnvironment {
        TabularJointEnvironment::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![
                (vec![0, 0], 0.2),
                (vec![1, 0], 0.4),
                (vec![0, 1], 0.2),
                (vec![1, 1], 0.2),
            ],
            1.0,
        )
        .unwrap()
    }

    pub(crate) fn binary_b() -> TabularJointEnvironment {
        TabularJointEnvironment::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![
                (vec![0, 0], 0.2),
                (vec![1, 0], 0.3),
                (vec![0, 1], 0.4),
                (vec![1, 1], 0.1),
            ],
            1.0,
        )
        .unwrap()
    }

    /// The two-armed latent fixture: Y1 in [2x-1, 2x+1], Y2 in
    /// [(3-x)^2 - 1, (3-x)^2 + 1].
    pub(crate) fn latent_fixture(alpha: f64, beta: f64) -> LatentSourceEnvironment {
        LatentSourceEnvironment::new(
            LatentDist::ScaledBeta { alpha, beta, lo: 0.0, hi: 6.0 },
            vec![
                ArmBounds {
                    lower: BoundFn::Affine { slope: 2.0, intercept: -1.0 },
                    upper: BoundFn::Affine { slope: 2.0, intercept: 1.0 },
                },
                ArmBounds {
                    lower: BoundFn::QuadShift { shift: 3.0, offset: -1.0 },
                    upper: BoundFn::QuadShift { shift: 3.0, offset: 1.0 },
                },
            ],
        )
        .unwrap()
    }

    pub(crate) fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} !~ {want:?}");
        }
    }

    #[test]
    fn binary_pair_means() {
        assert_close(&binary_a().true_means(), &[0.6, 0.4], 1e-12);
        assert_close(&binary_b().true_means(), &[0.4, 0.5], 1e-12);
    }

    #[test]
    fn joint_sampling_matches_marginals() {
        let env = binary_a();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut ones = 0u64;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let tuple = env.sample_joint(&mut rng);
            if tuple[0] == 1.0 {
                ones += 1;
            }
            sum2 += tuple[1];
        }
        assert!((ones as f64 / n as f64 - 0.6).abs() < 0.01);
        assert!((sum2 / n as f64 - 0.4).abs() < 0.01);
    }

    #[test]
    fn binary_b_marginal_mean() {
        let env = binary_b();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean2: f64 = (0..n).map(|_| env.sample_joint(&mut rng)[1]).sum::<f64>() / n as f64;
        assert!((mean2 - 0.5).abs() < 0.01);
    }

    #[test]
    fn degenerate_pmf_is_deterministic() {
        let env = TabularJointEnvironment::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![(vec![1, 0], 1.0)],
            1.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(env.sample_joint(&mut rng), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn latent_uniform_means_match_analytics() {
        // X ~ 6*Beta(1,1): E[Y1] = 2*E[X] = 6, E[Y2] = E[(3-X)^2] = Var X = 3.
        let env = latent_fixture(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut sums = [0.0; 2];
        for _ in 0..n {
            sums[0] += env.sample(0, &mut rng);
            sums[1] += env.sample(1, &mut rng);
        }
        assert!((sums[0] / n as f64 - 6.0).abs() < 0.05);
        assert!((sums[1] / n as f64 - 3.0).abs() < 0.05);
    }

    #[test]
    fn latent_skewed_beta_flips_the_optimal_arm() {
        // X ~ 6*Beta(1.5,5): E[Y1] ~= 2.769 < E[Y2] ~= 3.461.
        let env = latent_fixture(1.5, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut sums = [0.0; 2];
        for _ in 0..n {
            sums[0] += env.sample(0, &mut rng);
            sums[1] += env.sample(1, &mut rng);
        }
        assert!((sums[0] / n as f64 - 2.7692).abs() < 0.05);
        assert!((sums[1] / n as f64 - 3.4615).abs() < 0.05);
    }

    #[test]
    fn latent_true_means_by_quadrature() {
        let means = latent_fixture(1.0, 1.0).true_means();
        assert!((means[0] - 6.0).abs() < 1e-3);
        assert!((means[1] - 3.0).abs() < 1e-3);
        let means = latent_fixture(1.5, 5.0).true_means();
        assert!((means[0] - 2.769_23).abs() < 1e-3);
        assert!((means[1] - 3.461_54).abs() < 1e-3);
    }

    #[test]
    fn latent_rewards_stay_within_bounds() {
        let env = latent_fixture(1.5, 5.0);
        let (lo0, hi0) = env.reward_range(0);
        let (lo1, hi1) = env.reward_range(1);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let r0 = env.sample(0, &mut rng);
            let r1 = env.sample(1, &mut rng);
            assert!(r0 >= lo0 && r0 <= hi0);
            assert!(r1 >= lo1 && r1 <= hi1);
        }
    }

    #[test]
    fn empirical_pool_means() {
        let env = EmpiricalEnvironment::new(vec![vec![1.0, 1.0, 1.0]], 5.0).unwrap();
        assert_eq!(env.true_means(), vec![1.0]);
    }

    #[test]
    fn fixture_text_parses() {
        let text = "2 1\nvalues 0 1\nvalues 0 1\n\
                    mass 0 0 0.2\nmass 1 0 0.4\nmass 0 1 0.2\nmass 1 1 0.2\n";
        let env = TabularJointEnvironment::read_text(text.as_bytes()).unwrap();
        assert_close(&env.true_means(), &[0.6, 0.4], 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let env = latent_fixture(1.5, 5.0);
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            assert_eq!(env.sample(1, &mut a), env.sample(1, &mut b));
        }
    }
}
