//! Shared domain types: reward domains, pseudo-reward tables and per-arm
//! running statistics.
//!
//! The pseudo-reward table holds the K x K family of functions
//! `s[l][k](r)`: upper bounds on the conditional expected reward of arm `l`
//! given that arm `k` returned `r`. The diagonal is the identity,
//! `s[k][k](r) = r`, and a cell whose value is unknown is represented by
//! the explicit value `B` (the maximum possible reward), never by absence.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Tolerance used when matching a reward against a discrete domain value.
const VALUE_EPS: f64 = 1e-9;

/// The support of an arm's reward distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// An ordered list of attainable reward values.
    Discrete(Vec<f64>),
    /// Rewards fall anywhere in `[lo, hi]`.
    Continuous { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardDomain {
    pub kind: DomainKind,
    /// Maximum possible reward `B` across the instance.
    pub max_reward: f64,
}

impl RewardDomain {
    pub fn discrete(values: Vec<f64>, max_reward: f64) -> Result<Self> {
        if max_reward <= 0.0 {
            return Err(Error::domain("max reward B must be positive"));
        }
        if values.is_empty() {
            return Err(Error::domain("discrete domain needs at least one value"));
        }
        for &v in &values {
            if v < 0.0 || v > max_reward + VALUE_EPS {
                return Err(Error::domain(format!(
                    "discrete value {v} outside [0, {max_reward}]"
                )));
            }
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        if sorted != values {
            return Err(Error::domain("discrete values must be ordered"));
        }
        Ok(RewardDomain {
            kind: DomainKind::Discrete(values),
            max_reward,
        })
    }

    pub fn continuous(lo: f64, hi: f64, max_reward: f64) -> Result<Self> {
        if max_reward <= 0.0 {
            return Err(Error::domain("max reward B must be positive"));
        }
        if !(lo < hi) {
            return Err(Error::domain(format!("continuous bounds need lo < hi, got [{lo}, {hi}]")));
        }
        if hi > max_reward + VALUE_EPS {
            return Err(Error::domain(format!("upper bound {hi} exceeds B = {max_reward}")));
        }
        Ok(RewardDomain {
            kind: DomainKind::Continuous { lo, hi },
            max_reward,
        })
    }

    /// Whether `r` is an attainable reward for this domain.
    pub fn contains(&self, r: f64) -> bool {
        match &self.kind {
            DomainKind::Discrete(values) => values.iter().any(|&v| (v - r).abs() <= VALUE_EPS),
            DomainKind::Continuous { lo, hi } => {
                r >= lo - VALUE_EPS && r <= hi + VALUE_EPS
            }
        }
    }

    /// Index of `r` within a discrete domain.
    pub fn value_index(&self, r: f64) -> Option<usize> {
        match &self.kind {
            DomainKind::Discrete(values) => {
                values.iter().position(|&v| (v - r).abs() <= VALUE_EPS)
            }
            DomainKind::Continuous { .. } => None,
        }
    }
}

/// One pseudo-reward function `s[l][k](.)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TableEntry {
    /// Diagonal convention `s[k][k](r) = r`.
    Identity,
    /// A cell with no information, or a genuinely constant bound.
    Constant(f64),
    /// One bound per value of arm `k`'s discrete domain.
    Tabulated(Vec<f64>),
    /// Bounds on a uniform reward grid over `[lo, hi]`, queried with
    /// linear interpolation (continuous domains).
    Grid { lo: f64, hi: f64, bounds: Vec<f64> },
}

/// The K x K family of pseudo-reward functions, plus the per-arm reward
/// domains they are defined over. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRewardTable {
    arm_count: usize,
    max_reward: f64,
    domains: Vec<RewardDomain>,
    /// Row-major: `entries[l * K + k]` is `s[l][k]`.
    entries: Vec<TableEntry>,
}

impl PseudoRewardTable {
    /// Builds a table, fixing the diagonal to the identity and clamping
    /// every stored bound to `B` (a pseudo-reward above the maximum
    /// possible reward carries no information).
    pub fn new(domains: Vec<RewardDomain>, mut entries: Vec<TableEntry>) -> Result<Self> {
        let arm_count = domains.len();
        if arm_count == 0 {
            return Err(Error::domain("need at least one arm"));
        }
        if entries.len() != arm_count * arm_count {
            return Err(Error::domain(format!(
                "expected {} entries, got {}",
                arm_count * arm_count,
                entries.len()
            )));
        }
        let max_reward = domains[0].max_reward;
        if domains.iter().any(|d| d.max_reward != max_reward) {
            return Err(Error::domain("all arm domains must share the same B"));
        }
        for (idx, entry) in entries.iter_mut().enumerate() {
            let (l, k) = (idx / arm_count, idx % arm_count);
            if l == k {
                *entry = TableEntry::Identity;
                continue;
            }
            match entry {
                TableEntry::Identity => {
                    return Err(Error::domain("identity entry off the diagonal"))
                }
                TableEntry::Constant(v) => *v = v.min(max_reward),
                TableEntry::Tabulated(bounds) => {
                    let n = match &domains[k].kind {
                        DomainKind::Discrete(values) => values.len(),
                        DomainKind::Continuous { .. } => {
                            return Err(Error::domain(
                                "tabulated entry over a continuous domain",
                            ))
                        }
                    };
                    if bounds.len() != n {
                        return Err(Error::domain(format!(
                            "entry ({l},{k}) has {} bounds for {n} domain values",
                            bounds.len()
                        )));
                    }
                    for b in bounds.iter_mut() {
                        *b = b.min(max_reward);
                    }
                }
                TableEntry::Grid { lo, hi, bounds } => {
                    if !(*lo < *hi) || bounds.len() < 2 {
                        return Err(Error::domain("grid entry needs lo < hi and >= 2 points"));
                    }
                    for b in bounds.iter_mut() {
                        *b = b.min(max_reward);
                    }
                }
            }
        }
        Ok(PseudoRewardTable {
            arm_count,
            max_reward,
            domains,
            entries,
        })
    }

    /// Table with every cell equal to `B` — including the diagonal: no
    /// correlation knowledge at all. Every empirical pseudo-reward then
    /// sits at the ceiling, the competitive-set filter never removes an
    /// arm, and C-Bandit behaves exactly like the underlying classical
    /// bandit.
    pub fn uninformative(domains: Vec<RewardDomain>) -> Result<Self> {
        let arm_count = domains.len();
        if arm_count == 0 {
            return Err(Error::domain("need at least one arm"));
        }
        let max_reward = domains[0].max_reward;
        if domains.iter().any(|d| d.max_reward != max_reward) {
            return Err(Error::domain("all arm domains must share the same B"));
        }
        let entries = vec![TableEntry::Constant(max_reward); arm_count * arm_count];
        Ok(PseudoRewardTable { arm_count, max_reward, domains, entries })
    }

    pub fn arm_count(&self) -> usize {
        self.arm_count
    }

    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    pub fn domain(&self, arm: usize) -> &RewardDomain {
        &self.domains[arm]
    }

    pub fn entry(&self, l: usize, k: usize) -> &TableEntry {
        &self.entries[l * self.arm_count + k]
    }

    /// Evaluates `s[l][k](r)`.
    pub fn evaluate(&self, l: usize, k: usize, r: f64) -> f64 {
        match self.entry(l, k) {
            TableEntry::Identity => r,
            TableEntry::Constant(v) => *v,
            TableEntry::Tabulated(bounds) => {
                // Nearest domain value; rewards are validated against the
                // domain before they reach here.
                let values = match &self.domains[k].kind {
                    DomainKind::Discrete(v) => v,
                    DomainKind::Continuous { .. } => unreachable!(),
                };
                let mut best = 0;
                let mut best_dist = f64::INFINITY;
                for (i, &v) in values.iter().enumerate() {
                    let d = (v - r).abs();
                    if d < best_dist {
                        best = i;
                        best_dist = d;
                    }
                }
                bounds[best]
            }
            TableEntry::Grid { lo, hi, bounds } => {
                let x = r.clamp(*lo, *hi);
                let step = (hi - lo) / (bounds.len() - 1) as f64;
                let pos = (x - lo) / step;
                let i = (pos.floor() as usize).min(bounds.len() - 2);
                let frac = pos - i as f64;
                bounds[i] * (1.0 - frac) + bounds[i + 1] * frac
            }
        }
    }

    /// Plain-text serialization for discrete-domain tables: a `K B` header
    /// followed by one `l k r s` line per cell value.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.arm_count, self.max_reward)?;
        for l in 0..self.arm_count {
            for k in 0..self.arm_count {
                if l == k {
                    continue;
                }
                let values = match &self.domains[k].kind {
                    DomainKind::Discrete(v) => v.clone(),
                    DomainKind::Continuous { .. } => {
                        return Err(Error::domain(
                            "text format only covers discrete domains",
                        ))
                    }
                };
                for &r in &values {
                    writeln!(w, "{} {} {} {}", l + 1, k + 1, r, self.evaluate(l, k, r))?;
                }
            }
        }
        Ok(())
    }

    /// Parses the text format written by [`write_text`]. Cells absent from
    /// the file default to `B`.
    ///
    /// [`write_text`]: PseudoRewardTable::write_text
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::config("empty pseudo-reward table"))??;
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                break trimmed.to_string();
            }
        };
        let mut parts = header.split_whitespace();
        let arm_count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("bad table header: expected `K B`"))?;
        let max_reward: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("bad table header: expected `K B`"))?;
        if arm_count == 0 || max_reward <= 0.0 {
            return Err(Error::config("table header needs K >= 1 and B > 0"));
        }

        // (l, k) -> list of (r, s) pairs in file order.
        let mut cells: Vec<Vec<(f64, f64)>> = vec![Vec::new(); arm_count * arm_count];
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::config(format!("bad table line: `{line}`")));
            }
            let l: usize = fields[0]
                .parse()
                .map_err(|_| Error::config(format!("bad arm index in `{line}`")))?;
            let k: usize = fields[1]
                .parse()
                .map_err(|_| Error::config(format!("bad arm index in `{line}`")))?;
            if l == 0 || k == 0 || l > arm_count || k > arm_count {
                return Err(Error::config(format!("arm index out of range in `{line}`")));
            }
            let r: f64 = fields[2]
                .parse()
                .map_err(|_| Error::config(format!("bad reward in `{line}`")))?;
            let s: f64 = fields[3]
                .parse()
                .map_err(|_| Error::config(format!("bad pseudo-reward in `{line}`")))?;
            cells[(l - 1) * arm_count + (k - 1)].push((r, s));
        }

        // Reconstruct each arm's discrete domain from the union of reward
        // values seen while conditioning on it.
        let mut domains = Vec::with_capacity(arm_count);
        for k in 0..arm_count {
            let mut values: Vec<f64> = Vec::new();
            for l in 0..arm_count {
                for &(r, _) in &cells[l * arm_count + k] {
                    if !values.iter().any(|&v| (v - r).abs() <= VALUE_EPS) {
                        values.push(r);
                    }
                }
            }
            if values.is_empty() {
                return Err(Error::config(format!(
                    "no pseudo-reward lines condition on arm {}",
                    k + 1
                )));
            }
            values.sort_by(|a, b| a.total_cmp(b));
            domains.push(RewardDomain::discrete(values, max_reward)?);
        }

        let mut entries = Vec::with_capacity(arm_count * arm_count);
        for l in 0..arm_count {
            for k in 0..arm_count {
                if l == k {
                    entries.push(TableEntry::Identity);
                    continue;
                }
                let pairs = &cells[l * arm_count + k];
                let values = match &domains[k].kind {
                    DomainKind::Discrete(v) => v,
                    DomainKind::Continuous { .. } => unreachable!(),
                };
                let bounds: Vec<f64> = values
                    .iter()
                    .map(|&v| {
                        pairs
                            .iter()
                            .find(|(r, _)| (r - v).abs() <= VALUE_EPS)
                            .map(|&(_, s)| s)
                            .unwrap_or(max_reward)
                    })
                    .collect();
                entries.push(TableEntry::Tabulated(bounds));
            }
        }
        PseudoRewardTable::new(domains, entries)
    }
}

/// One pull of an arm: round index (1-based), arm, observed reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullRecord {
    pub t: u64,
    pub arm: usize,
    pub reward: f64,
}

/// Per-arm pull counts, empirical means, and empirical pseudo-reward
/// accumulators. One instance per trial; not shared across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmEstimators {
    counts: Vec<u64>,
    means: Vec<f64>,
    /// Row-major: `pseudo[l * K + k]` is the running mean of `s[l][k](r)`
    /// over the rewards observed from arm `k`. The diagonal mirrors `means`.
    pseudo: Vec<f64>,
}

impl ArmEstimators {
    pub fn new(arm_count: usize) -> Self {
        ArmEstimators {
            counts: vec![0; arm_count],
            means: vec![0.0; arm_count],
            pseudo: vec![0.0; arm_count * arm_count],
        }
    }

    pub fn arm_count(&self) -> usize {
        self.counts.len()
    }

    pub fn pulls(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn total_pulls(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    /// Empirical pseudo-reward of arm `l` with respect to arm `k`.
    pub fn pseudo_mean(&self, l: usize, k: usize) -> f64 {
        self.pseudo[l * self.counts.len() + k]
    }

    /// Assembles a state directly; test fixtures only.
    #[cfg(test)]
    pub(crate) fn from_raw(counts: Vec<u64>, means: Vec<f64>, pseudo: Vec<f64>) -> Self {
        let k = counts.len();
        assert_eq!(means.len(), k);
        assert_eq!(pseudo.len(), k * k);
        ArmEstimators { counts, means, pseudo }
    }
}

/// Folds one pull into the estimators: increments the pulled arm's count,
/// updates its empirical mean, and updates the empirical pseudo-reward of
/// every other arm with respect to the pulled arm.
pub fn update_estimators(
    est: &mut ArmEstimators,
    table: &PseudoRewardTable,
    rec: PullRecord,
) -> Result<()> {
    let arm_count = est.arm_count();
    if rec.arm >= arm_count {
        return Err(Error::domain(format!("arm {} out of range", rec.arm)));
    }
    if !table.domain(rec.arm).contains(rec.reward) {
        return Err(Error::domain(format!(
            "reward {} outside the domain of arm {}",
            rec.reward, rec.arm
        )));
    }
    est.counts[rec.arm] += 1;
    let n = est.counts[rec.arm] as f64;
    // Streaming mean: m <- m + (x - m) / n. Stable for long horizons.
    est.means[rec.arm] += (rec.reward - est.means[rec.arm]) / n;
    for l in 0..arm_count {
        // The diagonal goes through the table too: an identity diagonal
        // mirrors the mean, an all-B table keeps even the self cell at B.
        let s = table.evaluate(l, rec.arm, rec.reward);
        let cell = &mut est.pseudo[l * arm_count + rec.arm];
        *cell += (s - *cell) / n;
    }
    Ok(())
}

/// The significant set `S_t`: arms with at least `t / K` pulls (and at
/// least one pull). The comparison is done in integer arithmetic as
/// `n_k * K >= t`.
pub fn significant_set(est: &ArmEstimators, t: u64, arm_count: usize) -> Vec<usize> {
    (0..arm_count)
        .filter(|&k| est.counts[k] >= 1 && est.counts[k] * arm_count as u64 >= t)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_pair_domains() -> Vec<RewardDomain> {
        vec![
            RewardDomain::discrete(vec![0.0, 1.0], 1.0).unwrap(),
            RewardDomain::discrete(vec![0.0, 1.0], 1.0).unwrap(),
        ]
    }

    /// Published pseudo-rewards from the two-armed binary example.
    pub(crate) fn binary_pair_pseudo() -> PseudoRewardTable {
        PseudoRewardTable::new(
            binary_pair_domains(),
            vec![
                TableEntry::Identity,
                TableEntry::Tabulated(vec![0.8, 0.5]), // s[1][2]
                TableEntry::Tabulated(vec![0.7, 0.4]), // s[2][1]
                TableEntry::Identity,
            ],
        )
        .unwrap()
    }

    #[test]
    fn first_pull_updates_mean_and_pseudo() {
        let table = binary_pair_pseudo();
        let mut est = ArmEstimators::new(2);
        update_estimators(&mut est, &table, PullRecord { t: 1, arm: 0, reward: 0.0 }).unwrap();
        assert_eq!(est.mean(0), 0.0);
        assert_eq!(est.pseudo_mean(1, 0), 0.7);
    }

    #[test]
    fn second_pull_takes_running_mean() {
        let table = binary_pair_pseudo();
        let mut est = ArmEstimators::new(2);
        update_estimators(&mut est, &table, PullRecord { t: 1, arm: 0, reward: 0.0 }).unwrap();
        update_estimators(&mut est, &table, PullRecord { t: 2, arm: 0, reward: 1.0 }).unwrap();
        assert!((est.mean(0) - 0.5).abs() < 1e-15);
        assert!((est.pseudo_mean(1, 0) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn diagonal_tracks_empirical_mean() {
        let table = binary_pair_pseudo();
        let mut est = ArmEstimators::new(2);
        for (t, &(arm, r)) in [(0, 1.0), (1, 0.0), (0, 0.0), (1, 1.0), (1, 1.0)]
            .iter()
            .enumerate()
        {
            update_estimators(&mut est, &table, PullRecord { t: t as u64 + 1, arm, reward: r })
                .unwrap();
            for k in 0..2 {
                assert_eq!(est.pseudo_mean(k, k), est.mean(k));
            }
        }
    }

    #[test]
    fn reward_outside_domain_is_rejected() {
        let table = binary_pair_pseudo();
        let mut est = ArmEstimators::new(2);
        let err = update_estimators(&mut est, &table, PullRecord { t: 1, arm: 0, reward: 0.5 });
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn significant_set_examples() {
        let mut est = ArmEstimators::new(2);
        est.counts = vec![3, 1];
        assert_eq!(significant_set(&est, 4, 2), vec![0]);
        est.counts = vec![2, 2];
        assert_eq!(significant_set(&est, 4, 2), vec![0, 1]);
        let mut est3 = ArmEstimators::new(3);
        est3.counts = vec![1, 1, 1];
        assert_eq!(significant_set(&est3, 3, 3), vec![0, 1, 2]);
    }

    #[test]
    fn zero_pull_arms_are_never_significant() {
        let mut est = ArmEstimators::new(3);
        est.counts = vec![0, 0, 0];
        assert!(significant_set(&est, 0, 3).is_empty());
    }

    #[test]
    fn table_clamps_bounds_to_b() {
        let table = PseudoRewardTable::new(
            binary_pair_domains(),
            vec![
                TableEntry::Identity,
                TableEntry::Tabulated(vec![3.0, 0.5]),
                TableEntry::Constant(9.0),
                TableEntry::Identity,
            ],
        )
        .unwrap();
        assert_eq!(table.evaluate(0, 1, 0.0), 1.0);
        assert_eq!(table.evaluate(1, 0, 1.0), 1.0);
    }

    #[test]
    fn text_round_trip() {
        let table = binary_pair_pseudo();
        let mut buf = Vec::new();
        table.write_text(&mut buf).unwrap();
        let parsed = PseudoRewardTable::read_text(buf.as_slice()).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn missing_cells_read_as_b() {
        // Arm 1's domain is {0, 1} (seen via s[2][1]) but s[3][1] is only
        // given at r = 0; the r = 1 cell defaults to B = 2.
        let text = "3 2\n\
                    2 1 0 0.7\n2 1 1 0.4\n\
                    3 1 0 1.5\n\
                    1 2 0 0.8\n1 2 1 0.5\n\
                    3 2 0 1.0\n3 2 1 1.0\n\
                    1 3 0 0.9\n2 3 0 0.9\n";
        let table = PseudoRewardTable::read_text(text.as_bytes()).unwrap();
        assert_eq!(table.evaluate(2, 0, 0.0), 1.5);
        assert_eq!(table.evaluate(2, 0, 1.0), 2.0);
        assert_eq!(table.evaluate(1, 0, 0.0), 0.7);
    }
}
