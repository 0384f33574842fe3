//! Run configuration: flat key-value config files with flag overrides.
//!
//! Schema (one `key = value` per line, `#` comments):
//!
//! ```text
//! n           = 16                 # nodes per graph
//! set_size    = 100                # graphs in the final set
//! kind        = gcd                # gcd | portrait-div | netlsd-heat | netlsd-wave
//! measure     = energy             # energy | average | ... | num-circles
//! gamma       = 1.0                # energy exponent
//! epsilon     = 1e-5               # reciprocal stabilizer
//! threshold   = 0.0                # num-circles threshold
//! plan        = greedy[100000]->genetic[100000,K=1000,alpha=0.1]->local_opt[100000,K=1000]
//! seed        = 1                  # master seed
//! out_dir     = runs/example       # default: $DIVGRAPH_OUT or ./divgraph-out
//! pool        = pool.jsonl         # optional external pool file
//! er_mix_grid = false              # ER-mix draws p from the 7-value grid
//! ```
//!
//! Flags override file keys; unknown keys are hard errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use divgraph::diversity::Measure;
use divgraph::{DescriptorKind, MeasureConfig64, StagePlan};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "DIVGRAPH_OUT";
pub const DEFAULT_OUT_DIR: &str = "divgraph-out";

const VALID_KEYS: [&str; 12] = [
    "n",
    "set_size",
    "kind",
    "measure",
    "gamma",
    "epsilon",
    "threshold",
    "plan",
    "seed",
    "out_dir",
    "pool",
    "er_mix_grid",
];

/// Fully validated pipeline run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n: usize,
    pub set_size: usize,
    pub kind: DescriptorKind,
    pub measure: MeasureConfig64,
    pub plan: StagePlan,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub pool: Option<PathBuf>,
    pub er_mix_grid: bool,
    pub force: bool,
}

/// Unresolved flag overrides (everything optional).
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub set_size: Option<usize>,
    pub kind: Option<String>,
    pub measure: Option<String>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub threshold: Option<f64>,
    pub plan: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub er_mix_grid: Option<bool>,
    pub force: bool,
}

fn bad_key(key: &str, expected: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config key {key:?}: expected {expected}: {err}"))
}

/// Parse the flat key-value file format.
fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "config line {}: expected `key = value`, got {raw:?}",
                idx + 1
            )));
        };
        let key = key.trim().to_string();
        if !VALID_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "config line {}: unknown key {key:?}; valid keys: {}",
                idx + 1,
                VALID_KEYS.join(", ")
            )));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "config line {}: duplicate key {key:?}",
                idx + 1
            )));
        }
    }
    Ok(map)
}

/// Build a validated [`RunConfig`] from an optional config file plus flag
/// overrides.
pub fn parse_config(file: Option<&Path>, flags: &Overrides) -> Result<RunConfig, CliError> {
    let mut keys = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_file(&text)?
        }
        None => BTreeMap::new(),
    };

    let mut take = |key: &str| keys.remove(key);

    let n = match flags.n {
        Some(v) => v,
        None => match take("n") {
            Some(v) => v
                .parse()
                .map_err(|e| bad_key("n", "a positive integer", e))?,
            None => return Err(CliError::Config("missing required key `n`".into())),
        },
    };
    if n == 0 {
        return Err(bad_key("n", "a positive integer", "got 0"));
    }

    let set_size = match flags.set_size {
        Some(v) => v,
        None => match take("set_size") {
            Some(v) => v
                .parse()
                .map_err(|e| bad_key("set_size", "an integer >= 2", e))?,
            None => return Err(CliError::Config("missing required key `set_size`".into())),
        },
    };
    if set_size < 2 {
        return Err(bad_key(
            "set_size",
            "an integer >= 2",
            format!("got {set_size}"),
        ));
    }

    let kind_text = flags
        .kind
        .clone()
        .or_else(|| take("kind"))
        .ok_or_else(|| CliError::Config("missing required key `kind`".into()))?;
    let kind: DescriptorKind = kind_text
        .parse()
        .map_err(|e| bad_key("kind", "a descriptor kind", e))?;

    let measure_text = flags
        .measure
        .clone()
        .or_else(|| take("measure"))
        .unwrap_or_else(|| "energy".to_string());
    let measure_tag: Measure = measure_text
        .parse()
        .map_err(|e| bad_key("measure", "a diversity measure", e))?;
    let mut measure = MeasureConfig64::new(measure_tag);

    if let Some(gamma) = flags.gamma {
        measure = measure.with_gamma(gamma);
    } else if let Some(v) = take("gamma") {
        let gamma: f64 = v.parse().map_err(|e| bad_key("gamma", "a real", e))?;
        measure = measure.with_gamma(gamma);
    }
    if measure.gamma <= 0.0 {
        return Err(bad_key(
            "gamma",
            "a positive real",
            format!("got {}", measure.gamma),
        ));
    }

    if let Some(epsilon) = flags.epsilon {
        measure = measure.with_epsilon(epsilon);
    } else if let Some(v) = take("epsilon") {
        let epsilon: f64 = v.parse().map_err(|e| bad_key("epsilon", "a real", e))?;
        measure = measure.with_epsilon(epsilon);
    }
    if measure.epsilon <= 0.0 {
        return Err(bad_key(
            "epsilon",
            "a positive real",
            format!("got {}", measure.epsilon),
        ));
    }

    if let Some(threshold) = flags.threshold {
        measure = measure.with_threshold(threshold);
    } else if let Some(v) = take("threshold") {
        let threshold: f64 = v.parse().map_err(|e| bad_key("threshold", "a real", e))?;
        measure = measure.with_threshold(threshold);
    }

    let plan_text = flags
        .plan
        .clone()
        .or_else(|| take("plan"))
        .ok_or_else(|| CliError::Config("missing required key `plan`".into()))?;
    let plan: StagePlan = plan_text
        .parse()
        .map_err(|e| bad_key("plan", "a stage plan", e))?;

    let seed = match flags.seed {
        Some(v) => v,
        None => match take("seed") {
            Some(v) => v
                .parse()
                .map_err(|e| bad_key("seed", "an unsigned 64-bit integer", e))?,
            None => 0,
        },
    };

    let out_dir = flags
        .out_dir
        .clone()
        .or_else(|| take("out_dir").map(PathBuf::from))
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    let pool = flags
        .pool
        .clone()
        .or_else(|| take("pool").map(PathBuf::from));
    if let Some(pool_path) = &pool {
        if !pool_path.is_file() {
            return Err(bad_key(
                "pool",
                "a readable graph set file",
                format!("{} not found", pool_path.display()),
            ));
        }
    }

    let er_mix_grid = match flags.er_mix_grid {
        Some(v) => v,
        None => match take("er_mix_grid") {
            Some(v) => v
                .parse()
                .map_err(|e| bad_key("er_mix_grid", "true or false", e))?,
            None => false,
        },
    };

    Ok(RunConfig {
        n,
        set_size,
        kind,
        measure,
        plan,
        seed,
        out_dir,
        pool,
        er_mix_grid,
        force: flags.force,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Overrides {
        Overrides::default()
    }

    fn parse_text(text: &str) -> Result<RunConfig, CliError> {
        let dir = std::env::temp_dir().join(format!("divgraph-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("cfg-{:x}.conf", {
            use std::hash::{Hash, Hasher};
            let mut h = std::collections::hash_map::DefaultHasher::new();
            text.hash(&mut h);
            h.finish()
        }));
        std::fs::write(&path, text).unwrap();
        parse_config(Some(&path), &flags())
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_text("n = 16\nset_size = 100\nkind = gcd\nplan = greedy[10000]\n").unwrap();
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.set_size, 100);
        assert_eq!(cfg.kind, DescriptorKind::Gcd);
        assert_eq!(cfg.measure.measure, Measure::Energy);
        assert_eq!(cfg.measure.epsilon, 1e-5);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn zero_budget_plan_rejected() {
        let err = parse_text("n=16\nset_size=100\nkind=gcd\nplan=greedy[0]\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{err:?}");
    }

    #[test]
    fn unknown_measure_lists_valid_tags() {
        let err = parse_text("n=16\nset_size=100\nkind=gcd\nmeasure=entropy\nplan=greedy[10]\n")
            .unwrap_err();
        let CliError::Config(msg) = err else {
            panic!("wrong class")
        };
        assert!(msg.contains("bottleneck"), "{msg}");
    }

    #[test]
    fn unknown_key_is_a_hard_error() {
        let err =
            parse_text("n=16\nset_size=100\nkind=gcd\nplan=greedy[10]\nwarp=9\n").unwrap_err();
        let CliError::Config(msg) = err else {
            panic!("wrong class")
        };
        assert!(msg.contains("warp"), "{msg}");
    }

    #[test]
    fn flags_override_file_keys() {
        let dir = std::env::temp_dir().join(format!("divgraph-cfg2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("o.conf");
        std::fs::write(
            &path,
            "n=16\nset_size=100\nkind=gcd\nplan=greedy[10]\nseed=1\n",
        )
        .unwrap();
        let mut o = flags();
        o.seed = Some(42);
        o.kind = Some("portrait-div".into());
        let cfg = parse_config(Some(&path), &o).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.kind, DescriptorKind::PortraitDiv);
    }

    #[test]
    fn set_size_must_admit_pairs() {
        let err = parse_text("n=16\nset_size=1\nkind=gcd\nplan=greedy[10]\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }
}
