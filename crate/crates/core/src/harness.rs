//! Run execution, persistence layout, and report generation.
//!
//! A league run writes, atomically, into its output directory:
//!
//! * `run_manifest.json` — config, config hash, seed, snapshot index,
//!   win-rate table, events, and final ratings (everything needed for exact
//!   replay and post-hoc tooling);
//! * `metrics.csv` — one row per closed iteration per member;
//! * `matches.jsonl` — one line per finished training match;
//! * `matchup_*.csv` — the selector's win-rate/regret/weight matrices;
//! * `checkpoints/` — every pool snapshot plus the final live members.
//!
//! The output directory can be overridden with the `KUMITE_OUT_DIR`
//! environment variable (and nothing else is read from the environment).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{ActionPolicy, NetworkPolicy, RandomPolicy, ScriptedAggressive};
use crate::config::{ConfigError, ResolvedRun, RunConfig};
use crate::encoders::{encode, EncoderMode, IdTables};
use crate::eval::{
    behavior_scores, cdf_report, evaluate_pool, BehaviorScores, EvalAgent, EvalError,
};
use crate::game::pool::{load_pool, PoolError};
use crate::game::{new_match, CharacterSpec, Outcome, Side, Style, StyleReward, style_reward};
use crate::league::{
    run_league, LeagueEvent, LeagueRunArtifacts, OpponentId, Role, RunnerError,
};
use crate::persist::{
    atomic_write, load_checkpoint, save_checkpoint, PersistError, SnapshotMeta,
};
use crate::policy::{
    forward, gae, sample_action, train_on_samples, Adam, LearnerConfig, NetConfig, PolicyParams,
    Sample, Trajectory,
};
use crate::rng::{derive_rng, derive_seed};

pub const OUT_DIR_ENV: &str = "KUMITE_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotInfo {
    pub id: u64,
    pub role: Role,
    pub generation: u32,
    pub creation_step: u64,
    pub encoder_mode: EncoderMode,
    /// Checkpoint stem under `checkpoints/`.
    pub stem: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WinRateRow {
    pub member: Role,
    pub opponent: String,
    pub ema: f64,
    pub matches: u64,
}

/// Everything a finished run pins down, for replay and tooling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub config_hash: String,
    pub master_seed: u64,
    pub total_steps: u64,
    pub snapshots: Vec<SnapshotInfo>,
    pub live_members: Vec<SnapshotInfo>,
    pub winrates: Vec<WinRateRow>,
    pub events: Vec<LeagueEvent>,
    pub final_elo: Vec<(String, f64)>,
}

pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub metrics_rows: usize,
}

fn out_dir_override(configured: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

/// Run a full league training and write every artifact.
pub fn execute_run(run: &ResolvedRun) -> Result<RunSummary, HarnessError> {
    let artifacts = run_league(run)?;
    write_run_outputs(run, &artifacts)
}

fn write_run_outputs(
    run: &ResolvedRun,
    artifacts: &LeagueRunArtifacts,
) -> Result<RunSummary, HarnessError> {
    let out_dir = out_dir_override(&run.out_dir);
    let ckpt_dir = out_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).map_err(io_at(&ckpt_dir))?;

    let mut snapshots = Vec::new();
    for snap in artifacts.engine.pool() {
        let stem = format!("snap_{:04}", snap.id);
        let meta = SnapshotMeta {
            snapshot_id: snap.id,
            source_role: snap.source_role.as_str().into(),
            generation: snap.generation,
            creation_step: snap.creation_step,
            encoder_mode: snap.encoder_mode,
            config_hash: run.config_hash.clone(),
        };
        save_checkpoint(&ckpt_dir, &stem, &snap.params, &meta)?;
        snapshots.push(SnapshotInfo {
            id: snap.id,
            role: snap.source_role,
            generation: snap.generation,
            creation_step: snap.creation_step,
            encoder_mode: snap.encoder_mode,
            stem,
        });
    }

    let mut live_members = Vec::new();
    for role in Role::ALL {
        let m = artifacts.engine.member(role);
        let stem = format!("member_{}", role.as_str());
        let meta = SnapshotMeta {
            snapshot_id: u64::MAX,
            source_role: role.as_str().into(),
            generation: m.generation,
            creation_step: m.total_steps,
            encoder_mode: m.encoder_mode,
            config_hash: run.config_hash.clone(),
        };
        save_checkpoint(&ckpt_dir, &stem, &m.params, &meta)?;
        live_members.push(SnapshotInfo {
            id: u64::MAX,
            role,
            generation: m.generation,
            creation_step: m.total_steps,
            encoder_mode: m.encoder_mode,
            stem,
        });
    }

    let winrates = artifacts
        .engine
        .table
        .iter()
        .map(|(&(member, opp), e)| WinRateRow {
            member,
            opponent: opp.label(),
            ema: e.ema,
            matches: e.matches,
        })
        .collect();

    let manifest = RunManifest {
        config: run.config.clone(),
        config_hash: run.config_hash.clone(),
        master_seed: run.config.master_seed,
        total_steps: artifacts.total_steps,
        snapshots,
        live_members,
        winrates,
        events: artifacts.engine.events().to_vec(),
        final_elo: artifacts.elo.iter().map(|(k, v)| (k.clone(), *v)).collect(),
    };

    let manifest_path = out_dir.join("run_manifest.json");
    atomic_write(
        &manifest_path,
        &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(io_at(&manifest_path))?;

    let metrics_path = out_dir.join("metrics.csv");
    atomic_write(&metrics_path, artifacts.metrics_csv().as_bytes()).map_err(io_at(&metrics_path))?;

    let matches_path = out_dir.join("matches.jsonl");
    atomic_write(&matches_path, artifacts.matches_jsonl().as_bytes())
        .map_err(io_at(&matches_path))?;

    for kind in ["wr_ema", "regret", "weights"] {
        let p = out_dir.join(format!("matchup_{kind}.csv"));
        atomic_write(&p, artifacts.matchup.matrix_csv(kind).as_bytes()).map_err(io_at(&p))?;
    }

    Ok(RunSummary { out_dir, manifest, metrics_rows: artifacts.metrics.len() })
}

/// A finished run reloaded from disk.
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub pool: Vec<CharacterSpec>,
    pub subset: Vec<CharacterSpec>,
    pub held_out: Vec<CharacterSpec>,
    pub tables: Arc<IdTables>,
}

impl LoadedRun {
    pub fn open(dir: &Path) -> Result<Self, HarnessError> {
        let manifest_path = dir.join("run_manifest.json");
        let bytes = std::fs::read(&manifest_path).map_err(io_at(&manifest_path))?;
        let manifest: RunManifest = serde_json::from_slice(&bytes)
            .map_err(|e| HarnessError::Invalid(format!("run manifest: {e}")))?;
        // The pool path in the stored config may be relative to the original
        // config location; try the run dir first, then as-is.
        let pool_path = if dir.join(&manifest.config.pool_file).exists() {
            dir.join(&manifest.config.pool_file)
        } else {
            PathBuf::from(&manifest.config.pool_file)
        };
        let pool = load_pool(&pool_path)?;
        let subset = crate::config::select_subset(&pool, &manifest.config.subset)
            .map_err(HarnessError::Invalid)?;
        let ids: std::collections::BTreeSet<u32> = subset.iter().map(|c| c.char_id).collect();
        let held_out = pool.iter().filter(|c| !ids.contains(&c.char_id)).cloned().collect();
        let tables = Arc::new(IdTables::from_pool(&pool));
        Ok(Self { dir: dir.to_path_buf(), manifest, pool, subset, held_out, tables })
    }

    /// Load the final live parameters for a role.
    pub fn member_params(&self, role: Role) -> Result<(Arc<PolicyParams>, EncoderMode), HarnessError> {
        let info = self
            .manifest
            .live_members
            .iter()
            .find(|m| m.role == role)
            .ok_or_else(|| HarnessError::Invalid(format!("no live member {}", role.as_str())))?;
        let path = self.dir.join("checkpoints").join(format!("{}.manifest.json", info.stem));
        let (params, meta) = load_checkpoint(&path)?;
        Ok((Arc::new(params), meta.encoder_mode))
    }

    pub fn network_agent(&self, role: Role) -> Result<NetworkPolicy, HarnessError> {
        let (params, mode) = self.member_params(role)?;
        Ok(NetworkPolicy::new(params, mode, Arc::clone(&self.tables)))
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), HarnessError> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    atomic_write(path, text.as_bytes()).map_err(io_at(path))
}

/// Round-robin Elo among the final live members plus scripted/random
/// anchors; writes `elo.csv` into the run dir and returns (agent, rating).
pub fn eval_elo(run: &LoadedRun, n_matches: usize, seed: u64) -> Result<Vec<(String, f64)>, HarnessError> {
    let mut agents: Vec<EvalAgent> = Vec::new();
    for role in Role::ALL {
        agents.push(EvalAgent::new(role.as_str(), Box::new(run.network_agent(role)?)));
    }
    agents.push(EvalAgent::new("scripted_aggressive", Box::new(ScriptedAggressive::default())));
    agents.push(EvalAgent::new("random", Box::new(RandomPolicy)));

    let horizon = run.manifest.config.env.horizon;
    let report = evaluate_pool(&mut agents, &run.subset, n_matches, horizon, seed, false)?;
    let ratings: Vec<(String, f64)> =
        report.elo.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let rows: Vec<String> =
        ratings.iter().map(|(k, v)| format!("{k},{v:.3}")).collect();
    write_csv(&run.dir.join("elo.csv"), "agent,elo", &rows)?;
    Ok(ratings)
}

/// Per-match behavior scores for the main agent and anchors; writes
/// `behavior_scores.csv` plus one CDF CSV per metric and population.
pub fn eval_behavior(
    run: &LoadedRun,
    n_matches: usize,
    seed: u64,
) -> Result<BTreeMap<String, Vec<BehaviorScores>>, HarnessError> {
    let mut agents: Vec<EvalAgent> = vec![
        EvalAgent::new("main", Box::new(run.network_agent(Role::Main)?)),
        EvalAgent::new("scripted_aggressive", Box::new(ScriptedAggressive::default())),
        EvalAgent::new("random", Box::new(RandomPolicy)),
    ];
    let horizon = run.manifest.config.env.horizon;
    let report = evaluate_pool(&mut agents, &run.subset, n_matches, horizon, seed, true)?;

    let mut populations: BTreeMap<String, Vec<BehaviorScores>> = BTreeMap::new();
    for (agent, side, log) in &report.logs {
        populations.entry(agent.clone()).or_default().push(behavior_scores(log, *side));
    }

    let mut rows = Vec::new();
    for (agent, scores) in &populations {
        for s in scores {
            rows.push(format!(
                "{agent},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                s.substitution, s.special, s.blitz, s.counter, s.attack, s.error_rate
            ));
        }
    }
    write_csv(
        &run.dir.join("behavior_scores.csv"),
        "agent,substitution,special,blitz,counter,attack,error_rate",
        &rows,
    )?;
    write_behavior_cdfs(&run.dir, &populations)?;
    Ok(populations)
}

pub fn write_behavior_cdfs(
    dir: &Path,
    populations: &BTreeMap<String, Vec<BehaviorScores>>,
) -> Result<(), HarnessError> {
    for (agent, scores) in populations {
        if scores.is_empty() {
            continue;
        }
        for (metric_idx, metric) in
            ["substitution", "special", "blitz", "counter", "attack", "error_rate"]
                .iter()
                .enumerate()
        {
            let values: Vec<f64> =
                scores.iter().map(|s| s.as_array()[metric_idx].1).collect();
            let cdf = cdf_report(&values);
            let rows: Vec<String> =
                cdf.iter().map(|p| format!("{:.6},{:.6}", p.score, p.cumulative)).collect();
            write_csv(
                &dir.join(format!("cdf_{metric}_{agent}.csv")),
                "score,cumulative",
                &rows,
            )?;
        }
    }
    Ok(())
}

/// Elo of one agent on familiar vs held-out characters, against fixed
/// anchors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub agent: String,
    pub familiar_elo: f64,
    pub unfamiliar_elo: f64,
    pub drop: f64,
    pub familiar_win_rate: f64,
    pub unfamiliar_win_rate: f64,
}

/// Evaluate a policy's rating on the training subset and on held-out
/// characters using the same anchor opponents.
pub fn generalization_eval(
    agent_label: &str,
    params: Arc<PolicyParams>,
    mode: EncoderMode,
    tables: Arc<IdTables>,
    familiar: &[CharacterSpec],
    held_out: &[CharacterSpec],
    n_matches: usize,
    horizon: u32,
    seed: u64,
) -> Result<GeneralizationReport, HarnessError> {
    if held_out.is_empty() {
        return Err(HarnessError::Invalid(
            "generalization evaluation needs held-out characters (subset equals the pool)".into(),
        ));
    }
    let mut run_split = |split: &[CharacterSpec], tag: u64| -> Result<(f64, f64), HarnessError> {
        let mut agents = vec![
            EvalAgent::new(
                agent_label,
                Box::new(NetworkPolicy::new(Arc::clone(&params), mode, Arc::clone(&tables))),
            ),
            EvalAgent::new("scripted_aggressive", Box::new(ScriptedAggressive::default())),
            EvalAgent::new("random", Box::new(RandomPolicy)),
        ];
        let report =
            evaluate_pool(&mut agents, split, n_matches, horizon, derive_seed(seed, &[tag]), false)?;
        let wr = (report.win_rate[0][1] + report.win_rate[0][2]) / 2.0;
        Ok((report.elo.rating(agent_label), wr))
    };
    let (familiar_elo, familiar_win_rate) = run_split(familiar, 1)?;
    let (unfamiliar_elo, unfamiliar_win_rate) = run_split(held_out, 2)?;
    Ok(GeneralizationReport {
        agent: agent_label.to_string(),
        familiar_elo,
        unfamiliar_elo,
        drop: familiar_elo - unfamiliar_elo,
        familiar_win_rate,
        unfamiliar_win_rate,
    })
}

/// `eval generalization` over a finished run's main agent; writes
/// `generalization.csv`.
pub fn eval_generalization(
    run: &LoadedRun,
    n_matches: usize,
    seed: u64,
) -> Result<GeneralizationReport, HarnessError> {
    let (params, mode) = run.member_params(Role::Main)?;
    let report = generalization_eval(
        "main",
        params,
        mode,
        Arc::clone(&run.tables),
        &run.subset,
        &run.held_out,
        n_matches,
        run.manifest.config.env.horizon,
        seed,
    )?;
    let rows = vec![format!(
        "{},{:.3},{:.3},{:.3},{:.6},{:.6}",
        report.agent,
        report.familiar_elo,
        report.unfamiliar_elo,
        report.drop,
        report.familiar_win_rate,
        report.unfamiliar_win_rate
    )];
    write_csv(
        &run.dir.join("generalization.csv"),
        "agent,familiar_elo,unfamiliar_elo,drop,familiar_win_rate,unfamiliar_win_rate",
        &rows,
    )?;
    Ok(report)
}

/// `report`: behavior CDFs (reusing stored scores when present) plus a text
/// summary of the run.
pub fn report(run: &LoadedRun, n_matches: usize, seed: u64) -> Result<PathBuf, HarnessError> {
    let scores_path = run.dir.join("behavior_scores.csv");
    let populations = if scores_path.exists() {
        read_behavior_scores(&scores_path)?
    } else {
        eval_behavior(run, n_matches, seed)?
    };
    write_behavior_cdfs(&run.dir, &populations)?;

    let mut summary = String::new();
    summary.push_str(&format!("config_hash: {}\n", run.manifest.config_hash));
    summary.push_str(&format!("master_seed: {}\n", run.manifest.master_seed));
    summary.push_str(&format!("total_steps: {}\n", run.manifest.total_steps));
    summary.push_str(&format!("pool_snapshots: {}\n", run.manifest.snapshots.len()));
    summary.push_str("final_elo:\n");
    for (agent, rating) in &run.manifest.final_elo {
        summary.push_str(&format!("  {agent}: {rating:.1}\n"));
    }
    summary.push_str("behavior_populations:\n");
    for (agent, scores) in &populations {
        summary.push_str(&format!("  {agent}: {} matches scored\n", scores.len()));
    }
    let path = run.dir.join("summary.txt");
    atomic_write(&path, summary.as_bytes()).map_err(io_at(&path))?;
    Ok(path)
}

fn read_behavior_scores(
    path: &Path,
) -> Result<BTreeMap<String, Vec<BehaviorScores>>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    let mut populations: BTreeMap<String, Vec<BehaviorScores>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(HarnessError::Invalid(format!("bad behavior score row: {line}")));
        }
        let f = |i: usize| -> Result<f64, HarnessError> {
            cols[i]
                .parse()
                .map_err(|e| HarnessError::Invalid(format!("bad number in {line}: {e}")))
        };
        populations.entry(cols[0].to_string()).or_default().push(BehaviorScores {
            substitution: f(1)?,
            special: f(2)?,
            blitz: f(3)?,
            counter: f(4)?,
            attack: f(5)?,
            error_rate: f(6)?,
        });
    }
    Ok(populations)
}

/// Train a single policy against a fixed scripted opponent with a given
/// reward style. A lightweight trainer for style and ablation studies: same
/// learner, no league machinery.
#[allow(clippy::too_many_arguments)]
pub fn train_vs_scripted(
    mode: EncoderMode,
    tables: &IdTables,
    subset: &[CharacterSpec],
    learner: &LearnerConfig,
    style: Style,
    horizon: u32,
    total_steps: u64,
    n_envs: usize,
    seed: u64,
) -> Result<PolicyParams, HarnessError> {
    let net = NetConfig {
        mode,
        char_rows: tables.char_rows(),
        skill_rows: tables.skill_rows(),
        embed_width: learner.embed_width,
        hidden: learner.hidden,
    };
    let mut params = PolicyParams::init(net, derive_seed(seed, &[0xd0e1]));
    let mut opt = Adam::new(params.flat_len());
    let style = StyleReward::preset(style);

    struct DuelEnv {
        state: crate::game::GameState,
        opponent: ScriptedAggressive,
        chars: (usize, usize),
        matches: u64,
        env_idx: u64,
    }
    let mut char_rng = derive_rng(seed, &[0xc4a5]);
    let mut pick = |rng: &mut rand_chacha::ChaCha8Rng| {
        use rand::Rng;
        (rng.gen_range(0..subset.len()), rng.gen_range(0..subset.len()))
    };
    let mut envs: Vec<DuelEnv> = (0..n_envs)
        .map(|i| {
            let chars = pick(&mut char_rng);
            DuelEnv {
                state: new_match(
                    subset[chars.0].clone(),
                    subset[chars.1].clone(),
                    horizon,
                    derive_seed(seed, &[0xd3e1, i as u64, 0]),
                )
                .expect("validated specs"),
                opponent: ScriptedAggressive::default(),
                chars,
                matches: 0,
                env_idx: i as u64,
            }
        })
        .collect();

    let mut buffer: Vec<Sample> = Vec::new();
    let mut steps_done = 0u64;
    while steps_done < total_steps {
        for env in envs.iter_mut() {
            let mut traj = Trajectory::default();
            let mut trajectories = Vec::new();
            for _ in 0..learner.n_steps {
                if env.state.is_terminal() {
                    env.matches += 1;
                    env.chars = pick(&mut char_rng);
                    env.state = new_match(
                        subset[env.chars.0].clone(),
                        subset[env.chars.1].clone(),
                        horizon,
                        derive_seed(seed, &[0xd3e1, env.env_idx, env.matches]),
                    )
                    .expect("validated specs");
                }
                // Learner always sits on side A in duels.
                let masks = env.state.legal_action_mask(Side::A).expect("live state");
                let obs = encode(&env.state, Side::A, mode, tables);
                let (dists, value) = forward(&params, &obs, &masks)?;
                let masks_b = env.state.legal_action_mask(Side::B).expect("live state");
                let opp_state = env.state.clone();
                let rng = env.state.rng_mut();
                let (act_a, logp, idx) = sample_action(&dists, rng);
                let act_b = env.opponent.act(&opp_state, Side::B, &masks_b, rng);
                let info = env.state.step(&act_a, &act_b).expect("masked actions are legal");
                let max_hp = (env.state.specs[0].max_hp, env.state.specs[1].max_hp);
                let reward = style_reward(
                    info.hp_loss[0],
                    info.hp_loss[1],
                    max_hp,
                    info.terminal,
                    &style,
                );
                traj.push(obs, masks, idx, logp, reward, value, info.terminal);
                steps_done += 1;
                if info.terminal {
                    traj.bootstrap_value = 0.0;
                    trajectories.push(std::mem::take(&mut traj));
                }
            }
            if !traj.is_empty() {
                let masks = env.state.legal_action_mask(Side::A).expect("live state");
                let obs = encode(&env.state, Side::A, mode, tables);
                let (_, bootstrap) = forward(&params, &obs, &masks)?;
                traj.bootstrap_value = bootstrap;
                trajectories.push(traj);
            }
            for t in &trajectories {
                let (advantages, returns) = gae(t, learner.gamma, learner.lam);
                for k in 0..t.len() {
                    buffer.push(Sample {
                        obs: t.observations[k].clone(),
                        masks: t.masks[k].clone(),
                        action: t.actions[k],
                        old_logp: t.old_logp[k],
                        advantage: advantages[k],
                        ret: returns[k],
                    });
                }
            }
        }
        if buffer.len() >= learner.batch_size {
            train_on_samples(&mut params, &mut opt, &buffer, learner)?;
            buffer.clear();
        }
    }
    Ok(params)
}

/// Win rate (draws count half) of `agent` against `opponent` over `n`
/// matches with uniform character sampling; also returns episode lengths.
pub fn head_to_head(
    agent: &mut dyn ActionPolicy,
    opponent: &mut dyn ActionPolicy,
    split: &[CharacterSpec],
    n: usize,
    horizon: u32,
    seed: u64,
) -> Result<(f64, Vec<u32>), HarnessError> {
    let mut rng = derive_rng(seed, &[0x42d]);
    let mut score = 0.0;
    let mut lengths = Vec::with_capacity(n);
    for m in 0..n {
        let (ca, cb) = crate::eval::sample_matchup(split, &mut rng);
        // Alternate sides so spawn position does not bias the result.
        let agent_side = if m % 2 == 0 { Side::A } else { Side::B };
        let (outcome, frames, _) = match agent_side {
            Side::A => crate::eval::play_match(
                agent,
                opponent,
                ca,
                cb,
                horizon,
                derive_seed(seed, &[0x42e, m as u64]),
                &mut rng,
            )?,
            Side::B => crate::eval::play_match(
                opponent,
                agent,
                ca,
                cb,
                horizon,
                derive_seed(seed, &[0x42e, m as u64]),
                &mut rng,
            )?,
        };
        score += match (outcome, agent_side) {
            (Outcome::AWins, Side::A) | (Outcome::BWins, Side::B) => 1.0,
            (Outcome::Draw, _) => 0.5,
            _ => 0.0,
        };
        lengths.push(frames);
    }
    Ok((score / n as f64, lengths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EnvConfig, SubsetCounts};
    use crate::game::pool::{generate_pool, save_pool};
    use crate::league::LeagueConfig;

    fn tiny_resolved(dir: &Path, seed: u64) -> ResolvedRun {
        save_pool(&generate_pool(8, 3), &dir.join("pool.jsonl")).unwrap();
        let cfg = RunConfig {
            master_seed: seed,
            out_dir: dir.join("out").to_string_lossy().into_owned(),
            env: EnvConfig { horizon: 100, envs_per_member: 2 },
            learner: LearnerConfig {
                n_steps: 30,
                batch_size: 60,
                hidden: 12,
                embed_width: 3,
                ..LearnerConfig::default()
            },
            league: LeagueConfig {
                total_iterations: 1,
                iteration_timeout_steps: 120,
                ..LeagueConfig::default()
            },
            subset: SubsetCounts { s: 1, a: 1, b: 1, c: 1 },
            ..RunConfig::default()
        };
        cfg.resolve(dir).unwrap()
    }

    #[test]
    fn execute_and_reload_a_run() {
        let dir = tempfile::tempdir().unwrap();
        let run = tiny_resolved(dir.path(), 5);
        let summary = execute_run(&run).unwrap();
        assert!(summary.out_dir.join("run_manifest.json").exists());
        assert!(summary.out_dir.join("metrics.csv").exists());
        assert!(summary.out_dir.join("matches.jsonl").exists());
        assert!(summary.out_dir.join("matchup_weights.csv").exists());

        let loaded = LoadedRun::open(&summary.out_dir).unwrap();
        assert_eq!(loaded.manifest.config_hash, run.config_hash);
        assert_eq!(loaded.subset.len(), 4);
        let (params, mode) = loaded.member_params(Role::Main).unwrap();
        assert_eq!(mode, EncoderMode::Qs);
        assert!(params.all_finite());
    }

    #[test]
    fn generalization_requires_held_out_characters() {
        let dir = tempfile::tempdir().unwrap();
        save_pool(&generate_pool(4, 3), &dir.path().join("pool.jsonl")).unwrap();
        let cfg = RunConfig {
            out_dir: dir.path().join("out").to_string_lossy().into_owned(),
            subset: SubsetCounts { s: 1, a: 1, b: 1, c: 1 },
            env: EnvConfig { horizon: 60, envs_per_member: 1 },
            learner: LearnerConfig {
                n_steps: 20,
                batch_size: 40,
                hidden: 8,
                embed_width: 2,
                ..LearnerConfig::default()
            },
            league: LeagueConfig {
                total_iterations: 0,
                iteration_timeout_steps: 40,
                ..LeagueConfig::default()
            },
            ..RunConfig::default()
        };
        let resolved = cfg.resolve(dir.path()).unwrap();
        assert!(resolved.held_out.is_empty());
        let summary = execute_run(&resolved).unwrap();
        let loaded = LoadedRun::open(&summary.out_dir).unwrap();
        let err = eval_generalization(&loaded, 4, 1).unwrap_err();
        assert!(err.to_string().contains("held-out"), "{err}");
    }

    #[test]
    fn scripted_duel_training_runs_and_stays_finite() {
        let subset = generate_pool(4, 3);
        let tables = IdTables::from_pool(&subset);
        let learner = LearnerConfig {
            n_steps: 25,
            batch_size: 50,
            hidden: 12,
            embed_width: 3,
            ..LearnerConfig::default()
        };
        let params = train_vs_scripted(
            EncoderMode::Qs,
            &tables,
            &subset,
            &learner,
            Style::Aggressive,
            150,
            400,
            2,
            11,
        )
        .unwrap();
        assert!(params.all_finite());
    }
}
