//! Run configuration: file schema, defaults, validation, and hashing.
//!
//! Configs are TOML. Unset fields take the documented defaults, so an empty
//! file is a valid desk-scale configuration. Relative paths (the character
//! pool) resolve against the config file's directory. The run manifest
//! records a SHA-256 of the canonical JSON form of the fully resolved
//! config; together with the master seed it pins every output byte of a
//! deterministic run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::pool::{load_pool, PoolError};
use crate::game::{CharacterSpec, Level};
use crate::league::LeagueConfig;
use crate::matchup::MatchupConfig;
use crate::persist::sha256_hex;
use crate::policy::LearnerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("config field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("config field pool_file: {0}")]
    Pool(#[from] PoolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Match length cap in frames.
    pub horizon: u32,
    /// Concurrent matches per league member.
    pub envs_per_member: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { horizon: 1800, envs_per_member: 8 }
    }
}

/// Training-subset sizes per level tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsetCounts {
    pub s: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Default for SubsetCounts {
    fn default() -> Self {
        // Desk-scale split over the default 12-character pool.
        Self { s: 2, a: 2, b: 1, c: 1 }
    }
}

impl SubsetCounts {
    pub fn total(&self) -> usize {
        self.s + self.a + self.b + self.c
    }

    pub fn for_level(&self, level: Level) -> usize {
        match level {
            Level::S => self.s,
            Level::A => self.a,
            Level::B => self.b,
            Level::C => self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Matches per agent pair in evaluation commands.
    pub n_matches: usize,
    /// Run a small anchor evaluation every k main-agent iterations (0 = off).
    pub eval_every: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n_matches: 100, eval_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub master_seed: u64,
    /// Single-threaded, fully reproducible execution.
    pub deterministic: bool,
    /// Rollout worker threads (ignored in deterministic mode).
    pub workers: usize,
    pub env: EnvConfig,
    pub learner: LearnerConfig,
    pub league: LeagueConfig,
    pub matchup: MatchupConfig,
    /// JSON Lines character pool, relative to the config file.
    pub pool_file: String,
    pub subset: SubsetCounts,
    pub eval: EvalConfig,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            deterministic: true,
            workers: 1,
            env: EnvConfig::default(),
            learner: LearnerConfig::default(),
            league: LeagueConfig::default(),
            matchup: MatchupConfig::default(),
            pool_file: "pool.jsonl".into(),
            subset: SubsetCounts::default(),
            eval: EvalConfig::default(),
            out_dir: "runs/out".into(),
        }
    }
}

/// A config plus everything it references, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub config_hash: String,
    pub pool: Vec<CharacterSpec>,
    /// Training subset (familiar characters).
    pub subset: Vec<CharacterSpec>,
    /// Held-out characters (pool minus subset).
    pub held_out: Vec<CharacterSpec>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Parse, default-fill, validate, and resolve referenced files.
    pub fn load(path: &Path) -> Result<ResolvedRun, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve(base)
    }

    /// Validate and attach the pool; `base` anchors relative paths.
    pub fn resolve(self, base: &Path) -> Result<ResolvedRun, ConfigError> {
        self.learner
            .validate()
            .map_err(|reason| ConfigError::Invalid { field: "learner", reason })?;
        self.league
            .validate()
            .map_err(|reason| ConfigError::Invalid { field: "league", reason })?;
        self.matchup
            .validate()
            .map_err(|reason| ConfigError::Invalid { field: "matchup", reason })?;
        if self.env.horizon == 0 {
            return Err(ConfigError::Invalid {
                field: "env.horizon",
                reason: "must be positive".into(),
            });
        }
        if self.env.envs_per_member == 0 {
            return Err(ConfigError::Invalid {
                field: "env.envs_per_member",
                reason: "must be positive".into(),
            });
        }
        if self.subset.total() == 0 {
            return Err(ConfigError::Invalid {
                field: "subset",
                reason: "training subset must not be empty".into(),
            });
        }

        let pool_path = resolve_path(base, &self.pool_file);
        let pool = load_pool(&pool_path)?;
        let subset = select_subset(&pool, &self.subset).map_err(|reason| {
            ConfigError::Invalid { field: "subset", reason }
        })?;
        let subset_ids: std::collections::BTreeSet<u32> =
            subset.iter().map(|c| c.char_id).collect();
        let held_out: Vec<CharacterSpec> =
            pool.iter().filter(|c| !subset_ids.contains(&c.char_id)).cloned().collect();

        let out_dir = resolve_path(base, &self.out_dir);
        let config_hash = self.hash();
        Ok(ResolvedRun { config: self, config_hash, pool, subset, held_out, out_dir })
    }

    /// Canonical serialization for dumping back to disk.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        sha256_hex(&json)
    }
}

fn resolve_path(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Deterministic subset selection: per level, take the lowest char_ids.
pub fn select_subset(
    pool: &[CharacterSpec],
    counts: &SubsetCounts,
) -> Result<Vec<CharacterSpec>, String> {
    let mut by_level: BTreeMap<Level, Vec<&CharacterSpec>> = BTreeMap::new();
    for spec in pool {
        by_level.entry(spec.level).or_default().push(spec);
    }
    let mut subset = Vec::new();
    for level in Level::ALL {
        let want = counts.for_level(level);
        let mut have: Vec<&CharacterSpec> =
            by_level.get(&level).cloned().unwrap_or_default();
        have.sort_by_key(|c| c.char_id);
        if have.len() < want {
            return Err(format!(
                "level {} needs {} characters but the pool has {}",
                level.as_str(),
                want,
                have.len()
            ));
        }
        subset.extend(have.into_iter().take(want).cloned());
    }
    subset.sort_by_key(|c| c.char_id);
    Ok(subset)
}
