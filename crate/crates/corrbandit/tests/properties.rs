//! Cross-module invariants checked over randomized instances.

use proptest::prelude::*;

use corrbandit::builders::{from_joint_exact, from_latent_bounds};
use corrbandit::config::PolicySpec;
use corrbandit::experiment::{emit_csv, parse_csv, run_single_trial, AggregateCurve};
use corrbandit::model::{update_estimators, ArmEstimators};
use corrbandit::policy::compute_competitive_snapshot;
use corrbandit::{
    ArmBounds, BoundFn, Environment, LatentDist, LatentSourceEnvironment, PseudoRewardTable,
    PullRecord, RewardDomain, TabularJointEnvironment,
};

/// Random binary-reward joint over `k` arms from unnormalized weights.
fn joint_env(k: usize, weights: &[f64]) -> TabularJointEnvironment {
    assert_eq!(weights.len(), 1 << k);
    let total: f64 = weights.iter().sum();
    let outcomes = weights
        .iter()
        .enumerate()
        .map(|(bits, w)| {
            let idx = (0..k).map(|a| (bits >> a) & 1).collect();
            (idx, w / total)
        })
        .collect();
    TabularJointEnvironment::new(vec![vec![0.0, 1.0]; k], outcomes, 1.0).unwrap()
}

fn arb_joint() -> impl Strategy<Value = TabularJointEnvironment> {
    (2..=3usize)
        .prop_flat_map(|k| proptest::collection::vec(0.01..1.0f64, 1 << k).prop_map(move |w| (k, w)))
        .prop_map(|(k, w)| joint_env(k, &w))
}

fn arb_policy() -> impl Strategy<Value = PolicySpec> {
    prop_oneof![Just("ucb"), Just("c-ucb"), Just("ts"), Just("c-ts")]
        .prop_map(|name| PolicySpec::parse(name, 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pulls_are_conserved_and_regret_identity_holds(
        env in arb_joint(),
        spec in arb_policy(),
        horizon in 10..200u64,
        seed in any::<u64>(),
    ) {
        let table = from_joint_exact(&env).unwrap();
        let env = Environment::Tabular(env);
        let rec = run_single_trial(&env, &table, &spec, horizon, seed, seed ^ 0xabcd, None).unwrap();
        prop_assert_eq!(rec.arms.len(), horizon as usize);
        prop_assert_eq!(rec.trace.pulls.iter().sum::<u64>(), horizon);
        prop_assert!((rec.trace.final_regret() - rec.trace.regret_from_pulls()).abs() < 1e-9);
        for w in rec.trace.cumulative.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn streaming_mean_matches_batch_mean(
        rewards in proptest::collection::vec(0.0..=1.0f64, 1..300),
    ) {
        let domain = RewardDomain::continuous(0.0, 1.0, 1.0).unwrap();
        let table = PseudoRewardTable::uninformative(vec![domain]).unwrap();
        let mut est = ArmEstimators::new(1);
        for (i, &r) in rewards.iter().enumerate() {
            update_estimators(&mut est, &table, PullRecord { t: i as u64 + 1, arm: 0, reward: r })
                .unwrap();
        }
        let batch = rewards.iter().sum::<f64>() / rewards.len() as f64;
        prop_assert!((est.mean(0) - batch).abs() < 1e-12);
    }

    #[test]
    fn identity_diagonal_mirrors_the_mean(
        env in arb_joint(),
        pulls in proptest::collection::vec((0..3usize, 0..=1u32), 1..200),
    ) {
        let table = from_joint_exact(&env).unwrap();
        let k = table.arm_count();
        let mut est = ArmEstimators::new(k);
        for (t, &(arm, bit)) in pulls.iter().enumerate() {
            let arm = arm % k;
            let reward = bit as f64;
            update_estimators(&mut est, &table, PullRecord { t: t as u64 + 1, arm, reward })
                .unwrap();
        }
        for arm in 0..k {
            prop_assert!((est.pseudo_mean(arm, arm) - est.mean(arm)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_pseudo_rewards_dominate_the_mean(env in arb_joint()) {
        // For tight conditionals, sum_r P(R_k = r) s_{l,k}(r) equals mu_l
        // exactly; padded (zero-probability) cells only push it up.
        let table = from_joint_exact(&env).unwrap();
        let means = env.true_means();
        for l in 0..env.arm_count() {
            for k in 0..env.arm_count() {
                let phi: f64 = env
                    .marginal_pmf(k)
                    .iter()
                    .map(|&(r, p)| p * table.evaluate(l, k, r))
                    .sum();
                prop_assert!(phi >= means[l] - 1e-9, "phi({l},{k}) = {phi} < {}", means[l]);
            }
        }
    }

    #[test]
    fn trials_are_deterministic(
        env in arb_joint(),
        spec in arb_policy(),
        seed in any::<u64>(),
    ) {
        let table = from_joint_exact(&env).unwrap();
        let env = Environment::Tabular(env);
        let a = run_single_trial(&env, &table, &spec, 150, seed, seed ^ 1, None).unwrap();
        let b = run_single_trial(&env, &table, &spec, 150, seed, seed ^ 1, None).unwrap();
        prop_assert_eq!(a.arms, b.arms);
        prop_assert_eq!(a.rewards, b.rewards);
    }

    #[test]
    fn snapshot_candidates_are_well_formed(
        env in arb_joint(),
        seed in any::<u64>(),
    ) {
        let table = from_joint_exact(&env).unwrap();
        let k = env.arm_count();
        let spec = PolicySpec::parse("c-ucb", 1.0).unwrap();
        let env = Environment::Tabular(env);
        let horizon = 100u64;
        let rec = run_single_trial(&env, &table, &spec, horizon, seed, seed, None).unwrap();
        // Rebuild the final estimator state by replaying the pulls.
        let mut est = ArmEstimators::new(k);
        for (t, (&arm, &reward)) in rec.arms.iter().zip(&rec.rewards).enumerate() {
            update_estimators(&mut est, &table, PullRecord { t: t as u64 + 1, arm, reward })
                .unwrap();
        }
        let snap = compute_competitive_snapshot(&est, horizon, k);
        prop_assert!(snap.significant.contains(&snap.k_emp));
        prop_assert!(snap.candidates.contains(&snap.k_emp));
        for c in &snap.competitive {
            prop_assert!(snap.candidates.contains(c));
        }
        let mut sorted = snap.candidates.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted, snap.candidates);
    }

    #[test]
    fn csv_round_trips_exactly(
        policy_count in 1..4usize,
        rows in 1..30usize,
        cells in proptest::collection::vec((0.0..1e6f64, 0.0..1e3f64), 1..120),
    ) {
        prop_assume!(cells.len() >= policy_count * rows);
        let curve = AggregateCurve {
            rounds: (1..=rows as u64).collect(),
            policies: (0..policy_count).map(|p| format!("p{p}")).collect(),
            means: (0..policy_count)
                .map(|p| (0..rows).map(|r| cells[p * rows + r].0).collect())
                .collect(),
            stds: (0..policy_count)
                .map(|p| (0..rows).map(|r| cells[p * rows + r].1).collect())
                .collect(),
        };
        let mut buf = Vec::new();
        emit_csv(&curve, &mut buf).unwrap();
        prop_assert_eq!(parse_csv(buf.as_slice()).unwrap(), curve);
    }
}

fn latent_fixture() -> LatentSourceEnvironment {
    LatentSourceEnvironment::new(
        LatentDist::ScaledBeta { alpha: 1.0, beta: 1.0, lo: 0.0, hi: 6.0 },
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

#[test]
fn latent_builder_is_stable_under_grid_refinement() {
    let env = latent_fixture();
    let coarse = from_latent_bounds(&env, 501).unwrap();
    let fine = from_latent_bounds(&env, 5001).unwrap();
    for (l, k) in [(0usize, 1usize), (1, 0)] {
        let (lo, hi) = env.reward_range(k);
        for i in 0..=50 {
            let r = lo + (hi - lo) * i as f64 / 50.0;
            let a = coarse.evaluate(l, k, r);
            let b = fine.evaluate(l, k, r);
            assert!((a - b).abs() < 0.05, "s[{l}][{k}]({r}): coarse {a} vs fine {b}");
        }
    }
}
