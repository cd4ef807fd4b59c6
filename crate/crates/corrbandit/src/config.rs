//! Flat key-value experiment configuration with CLI-style overrides.
//!
//! ```text
//! env.kind = tabular
//! env.path = fixtures/binary_a.env
//! policies = ucb, c-ucb
//! horizon = 20000
//! trials = 100
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::builders::RatingsMode;
use crate::env::{ArmBounds, BoundFn, LatentDist};
use crate::error::{Error, Result};
use crate::policy::BasePolicy;

/// One named strategy in the comparison set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub name: String,
    pub base: BasePolicy,
    /// Whether the competitive-set filter wraps the base policy.
    pub correlated: bool,
}

impl PolicySpec {
    pub fn parse(name: &str, ts_beta: f64) -> Result<Self> {
        let (correlated, base_name) = match name.strip_prefix("c-") {
            Some(rest) => (true, rest),
            None => (false, name),
        };
        let base = match base_name {
            "ucb" => BasePolicy::Ucb,
            "ts" => BasePolicy::TsGaussian { beta: ts_beta },
            "ts-beta" => BasePolicy::TsBeta,
            _ => {
                return Err(Error::config(format!(
                    "policies: unknown policy `{name}` (expected ucb, ts, ts-beta, c-ucb, c-ts, c-ts-beta)"
                )))
            }
        };
        Ok(PolicySpec { name: name.to_string(), base, correlated })
    }
}

/// How arm identities are derived from a rating corpus.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmMode {
    TopNItems(usize),
    Genres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingsSpec {
    pub path: PathBuf,
    pub split_fraction: f64,
    pub arm_mode: ArmMode,
    /// Genre tie-break seed.
    pub seed: u64,
    pub max_reward: f64,
}

#[derive(Debug, Clone)]
pub enum EnvSpec {
    TabularPath(PathBuf),
    Latent { dist: LatentDist, arms: Vec<ArmBounds> },
    Ratings(RatingsSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PseudoSpec {
    /// All-B table: reduces every C-policy to its base policy.
    Uninformative,
    TablePath(PathBuf),
    ExactFromJoint,
    LatentGrid { grid_n: usize },
    Ratings { mode: RatingsMode, pad_fraction: f64, buffer: f64 },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub pseudo: PseudoSpec,
    pub policies: Vec<PolicySpec>,
    pub horizon: u64,
    pub trials: usize,
    pub base_seed: u64,
    /// Output thinning; 0 means auto (`max(1, horizon / 1000)`).
    pub stride: u64,
    pub output: Option<PathBuf>,
    pub ts_beta: f64,
    pub lower_bound_floor: Option<f64>,
    /// Round at which the oracle subcommand reports the empirical
    /// competitive-set size; 0 means the horizon.
    pub oracle_round: u64,
}

impl ExperimentConfig {
    pub fn effective_stride(&self) -> u64 {
        if self.stride > 0 {
            self.stride
        } else {
            (self.horizon / 1000).max(1)
        }
    }

    pub fn oracle_round(&self) -> u64 {
        if self.oracle_round > 0 {
            self.oracle_round
        } else {
            self.horizon
        }
    }
}

/// Parses `key = value` lines; `#` comments and blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!(
                "config line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Applies `key=value` override strings on top of a parsed config.
pub fn apply_overrides(map: &mut BTreeMap<String, String>, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let Some((key, value)) = o.split_once('=') else {
            return Err(Error::config(format!("override `{o}` is not key=value")));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{key}: cannot parse `{raw}`"))),
    }
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(format!("{key}: missing required field")))
}

fn parse_bound_fn(key: &str, raw: &str) -> Result<BoundFn> {
    let (kind, args) = raw
        .split_once(':')
        .ok_or_else(|| Error::config(format!("{key}: expected `kind:args`, got `{raw}`")))?;
    let nums = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("{key}: bad number `{v}`")))
            })
            .collect()
    };
    match kind.trim() {
        "affine" => {
            let v = nums(args)?;
            if v.len() != 2 {
                return Err(Error::config(format!("{key}: affine needs slope,intercept")));
            }
            Ok(BoundFn::Affine { slope: v[0], intercept: v[1] })
        }
        "quad" => {
            let v = nums(args)?;
            if v.len() != 2 {
                return Err(Error::config(format!("{key}: quad needs shift,offset")));
            }
            Ok(BoundFn::QuadShift { shift: v[0], offset: v[1] })
        }
        "pwl" => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for knot in args.split(';') {
                let v = nums(knot)?;
                if v.len() != 2 {
                    return Err(Error::config(format!("{key}: pwl knot needs x,y")));
                }
                xs.push(v[0]);
                ys.push(v[1]);
            }
            if xs.len() < 2 || xs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(format!(
                    "{key}: pwl needs >= 2 knots with strictly increasing x"
                )));
            }
            Ok(BoundFn::PiecewiseLinear { xs, ys })
        }
        other => Err(Error::config(format!("{key}: unknown bound kind `{other}`"))),
    }
}

fn parse_latent(map: &BTreeMap<String, String>) -> Result<(LatentDist, Vec<ArmBounds>)> {
    let dist = match map.get("latent.dist").map(String::as_str) {
        Some("beta") => LatentDist::ScaledBeta {
            alpha: require(parse_field(map, "latent.alpha")?, "latent.alpha")?,
            beta: require(parse_field(map, "latent.beta")?, "latent.beta")?,
            lo: parse_field(map, "latent.lo")?.unwrap_or(0.0),
            hi: require(parse_field(map, "latent.hi")?, "latent.hi")?,
        },
        Some("grid") => {
            let points: Vec<f64> = require(map.get("latent.points"), "latent.points")?
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Error::config("latent.points: bad number")))
                .collect::<Result<_>>()?;
            let probs: Vec<f64> = require(map.get("latent.probs"), "latent.probs")?
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Error::config("latent.probs: bad number")))
                .collect::<Result<_>>()?;
            if points.len() != probs.len() {
                return Err(Error::config("latent.points and latent.probs differ in length"));
            }
            LatentDist::GridPmf { points, probs }
        }
        Some(other) => {
            return Err(Error::config(format!("latent.dist: unknown kind `{other}`")))
        }
        None => return Err(Error::config("latent.dist: missing required field")),
    };
    let mut arms = Vec::new();
    for k in 1.. {
        let lo_key = format!("arm.{k}.lower");
        let hi_key = format!("arm.{k}.upper");
        match (map.get(&lo_key), map.get(&hi_key)) {
            (Some(lo), Some(hi)) => arms.push(ArmBounds {
                lower: parse_bound_fn(&lo_key, lo)?,
                upper: parse_bound_fn(&hi_key, hi)?,
            }),
            (None, None) => break,
            _ => {
                return Err(Error::config(format!(
                    "arm.{k}: both lower and upper bounds are required"
                )))
            }
        }
    }
    if arms.len() < 2 {
        return Err(Error::config("latent environment needs at least arm.1 and arm.2"));
    }
    Ok((dist, arms))
}

const KNOWN_KEYS: &[&str] = &[
    "env.kind",
    "env.path",
    "latent.dist",
    "latent.alpha",
    "latent.beta",
    "latent.lo",
    "latent.hi",
    "latent.points",
    "latent.probs",
    "ratings.path",
    "ratings.split_fraction",
    "ratings.arm_mode",
    "ratings.top_n",
    "ratings.seed",
    "ratings.max_reward",
    "pseudo.source",
    "pseudo.path",
    "pseudo.grid_n",
    "pseudo.mode",
    "pseudo.pad_fraction",
    "pseudo.buffer",
    "policies",
    "ts.beta",
    "lower_bound_floor",
    "horizon",
    "trials",
    "seed",
    "stride",
    "output",
    "oracle.round",
];

fn check_keys(map: &BTreeMap<String, String>) -> Result<()> {
    for key in map.keys() {
        let known = KNOWN_KEYS.contains(&key.as_str())
            || (key.starts_with("arm.")
                && (key.ends_with(".lower") || key.ends_with(".upper")));
        if !known {
            return Err(Error::config(format!("unknown config key `{key}`")));
        }
    }
    Ok(())
}

pub fn build_config(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    check_keys(map)?;

    let env = match require(map.get("env.kind"), "env.kind")?.as_str() {
        "tabular" => EnvSpec::TabularPath(PathBuf::from(require(map.get("env.path"), "env.path")?)),
        "latent" => {
            let (dist, arms) = parse_latent(map)?;
            EnvSpec::Latent { dist, arms }
        }
        "ratings" => {
            let arm_mode = match require(map.get("ratings.arm_mode"), "ratings.arm_mode")?.as_str() {
                "top-n" => ArmMode::TopNItems(require(
                    parse_field(map, "ratings.top_n")?,
                    "ratings.top_n",
                )?),
                "genres" => ArmMode::Genres,
                other => {
                    return Err(Error::config(format!(
                        "ratings.arm_mode: unknown mode `{other}` (expected top-n or genres)"
                    )))
                }
            };
            EnvSpec::Ratings(RatingsSpec {
                path: PathBuf::from(require(map.get("ratings.path"), "ratings.path")?),
                split_fraction: parse_field(map, "ratings.split_fraction")?.unwrap_or(0.5),
                arm_mode,
                seed: parse_field(map, "ratings.seed")?.unwrap_or(0),
                max_reward: parse_field(map, "ratings.max_reward")?.unwrap_or(5.0),
            })
        }
        other => {
            return Err(Error::config(format!(
                "env.kind: unknown kind `{other}` (expected tabular, latent, ratings)"
            )))
        }
    };

    let default_pseudo = match &env {
        EnvSpec::TabularPath(_) => "exact",
        EnvSpec::Latent { .. } => "latent-grid",
        EnvSpec::Ratings(_) => "ratings",
    };
    let pseudo = match map
        .get("pseudo.source")
        .map(String::as_str)
        .unwrap_or(default_pseudo)
    {
        "uninformative" => PseudoSpec::Uninformative,
        "table" => PseudoSpec::TablePath(PathBuf::from(require(
            map.get("pseudo.path"),
            "pseudo.path",
        )?)),
        "exact" => PseudoSpec::ExactFromJoint,
        "latent-grid" => PseudoSpec::LatentGrid {
            grid_n: parse_field(map, "pseudo.grid_n")?.unwrap_or(1001),
        },
        "ratings" => {
            let mode = match map.get("pseudo.mode").map(String::as_str).unwrap_or("mean") {
                "mean" => RatingsMode::Mean,
                "mean-std" => RatingsMode::MeanPlusStd,
                other => {
                    return Err(Error::config(format!("pseudo.mode: unknown mode `{other}`")))
                }
            };
            PseudoSpec::Ratings {
                mode,
                pad_fraction: parse_field(map, "pseudo.pad_fraction")?.unwrap_or(0.0),
                buffer: parse_field(map, "pseudo.buffer")?.unwrap_or(0.0),
            }
        }
        other => {
            return Err(Error::config(format!("pseudo.source: unknown source `{other}`")))
        }
    };

    let ts_beta: f64 = parse_field(map, "ts.beta")?.unwrap_or(1.0);
    if ts_beta <= 0.0 {
        return Err(Error::config(format!("ts.beta: must be positive, got {ts_beta}")));
    }
    let policies = map
        .get("policies")
        .map(String::as_str)
        .unwrap_or("ucb, c-ucb")
        .split(',')
        .map(|s| PolicySpec::parse(s.trim(), ts_beta))
        .collect::<Result<Vec<_>>>()?;
    if policies.is_empty() {
        return Err(Error::config("policies: empty list"));
    }

    let horizon: u64 = require(parse_field(map, "horizon")?, "horizon")?;
    if horizon == 0 {
        return Err(Error::config("horizon: must be >= 1"));
    }
    let trials: usize = parse_field(map, "trials")?.unwrap_or(100);
    if trials == 0 {
        return Err(Error::config("trials: must be >= 1"));
    }

    Ok(ExperimentConfig {
        env,
        pseudo,
        policies,
        horizon,
        trials,
        base_seed: parse_field(map, "seed")?.unwrap_or(0),
        stride: parse_field(map, "stride")?.unwrap_or(0),
        output: map.get("output").map(PathBuf::from),
        ts_beta,
        lower_bound_floor: parse_field(map, "lower_bound_floor")?,
        oracle_round: parse_field(map, "oracle.round")?.unwrap_or(0),
    })
}

/// Parses config text plus overrides into an [`ExperimentConfig`].
pub fn load_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut map = parse_key_values(text)?;
    apply_overrides(&mut map, overrides)?;
    build_config(&map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABULAR: &str = "env.kind = tabular\nenv.path = fixtures/binary_a.env\nhorizon = 100\n";

    #[test]
    fn minimal_tabular_config() {
        let cfg = load_config(TABULAR, &[]).unwrap();
        assert!(matches!(cfg.env, EnvSpec::TabularPath(_)));
        assert_eq!(cfg.pseudo, PseudoSpec::ExactFromJoint);
        assert_eq!(cfg.horizon, 100);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.policies.len(), 2);
        assert_eq!(cfg.policies[1].name, "c-ucb");
        assert!(cfg.policies[1].correlated);
        assert_eq!(cfg.effective_stride(), 1);
    }

    #[test]
    fn overrides_win() {
        let cfg = load_config(TABULAR, &["horizon=5000".into(), "trials=3".into()]).unwrap();
        assert_eq!(cfg.horizon, 5000);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.effective_stride(), 5);
    }

    #[test]
    fn missing_required_field_names_the_key() {
        let err = load_config("env.kind = tabular\nhorizon = 10\n", &[]).unwrap_err();
        assert!(err.to_string().contains("env.path"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = load_config(&format!("{TABULAR}horizons = 5\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("horizons"));
    }

    #[test]
    fn latent_config_parses_bounds() {
        let text = "env.kind = latent\nlatent.dist = beta\nlatent.alpha = 1\nlatent.beta = 1\n\
                    latent.hi = 6\narm.1.lower = affine:2,-1\narm.1.upper = affine:2,1\n\
                    arm.2.lower = quad:3,-1\narm.2.upper = quad:3,1\nhorizon = 10\n";
        let cfg = load_config(text, &[]).unwrap();
        let EnvSpec::Latent { dist, arms } = &cfg.env else {
            panic!("expected latent env");
        };
        assert!(matches!(dist, LatentDist::ScaledBeta { .. }));
        assert_eq!(arms.len(), 2);
        assert_eq!(arms[0].upper, BoundFn::Affine { slope: 2.0, intercept: 1.0 });
        assert_eq!(arms[1].lower, BoundFn::QuadShift { shift: 3.0, offset: -1.0 });
        assert_eq!(cfg.pseudo, PseudoSpec::LatentGrid { grid_n: 1001 });
    }

    #[test]
    fn pwl_bound_parses() {
        let f = parse_bound_fn("arm.1.lower", "pwl:0,1;3,2;6,0").unwrap();
        assert_eq!(
            f,
            BoundFn::PiecewiseLinear { xs: vec![0.0, 3.0, 6.0], ys: vec![1.0, 2.0, 0.0] }
        );
        assert!(parse_bound_fn("arm.1.lower", "pwl:0,1").is_err());
        assert!(parse_bound_fn("arm.1.lower", "cubic:1,2").is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        let p = PolicySpec::parse("c-ts", 2.0).unwrap();
        assert!(p.correlated);
        assert_eq!(p.base, BasePolicy::TsGaussian { beta: 2.0 });
        assert!(PolicySpec::parse("ucb2", 1.0).is_err());
    }

    #[test]
    fn bad_values_name_their_field() {
        let err = load_config(&format!("{TABULAR}trials = many\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("trials"));
        let err = load_config(&format!("{TABULAR}ts.beta = -1\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("ts.beta"));
    }
}
