//! The full training loop: rollouts, learner updates, snapshot events, and
//! per-iteration metrics.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ResolvedRun;
use crate::encoders::IdTables;
use crate::eval::{EloTable, MatchScore, DEFAULT_K};
use crate::game::StyleReward;
use crate::matchup::{MatchupError, MatchupState};
use crate::policy::{gae, train_on_samples, Adam, NetConfig, PolicyError, Sample};
use crate::rng::derive_rng;

use super::rollout::{collect_fragment, EnvSlot, FragmentCtx, FragmentResult, MatchAssignment};
use super::rules::{LeagueEngine, LeagueError, OpponentId, Role};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    League(#[from] LeagueError),
    #[error(transparent)]
    Matchup(#[from] MatchupError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// One metrics line, emitted when a member closes an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: u32,
    pub member: Role,
    pub elo: f64,
    pub min_win_rate: f64,
    pub resets: u32,
    pub member_steps: u64,
    pub pool_size: usize,
    pub by_timeout: bool,
}

/// One line per finished training match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMatchRow {
    pub member: Role,
    pub opponent: String,
    pub learner_char: u32,
    pub opp_char: u32,
    pub learner_won: bool,
    pub draw: bool,
    pub frames: u32,
}

pub struct LeagueRunArtifacts {
    pub engine: LeagueEngine,
    pub metrics: Vec<MetricsRow>,
    pub matches: Vec<TrainingMatchRow>,
    pub elo: EloTable,
    pub matchup: MatchupState,
    pub tables: IdTables,
    pub total_steps: u64,
}

impl LeagueRunArtifacts {
    /// Metrics CSV with a stable header and fixed float formatting, so two
    /// deterministic runs produce byte-identical files.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "iteration,member,elo,min_win_rate,resets,member_steps,pool_size,by_timeout\n",
        );
        for r in &self.metrics {
            out.push_str(&format!(
                "{},{},{:.3},{:.6},{},{},{},{}\n",
                r.iteration,
                r.member.as_str(),
                r.elo,
                r.min_win_rate,
                r.resets,
                r.member_steps,
                r.pool_size,
                r.by_timeout
            ));
        }
        out
    }

    pub fn matches_jsonl(&self) -> String {
        let mut out = String::new();
        for m in &self.matches {
            out.push_str(&serde_json::to_string(m).expect("row serializes"));
            out.push('\n');
        }
        out
    }
}

fn sample_assignment(
    engine: &LeagueEngine,
    matchup: &MatchupState,
    role: Role,
    rng: &mut ChaCha8Rng,
) -> Result<MatchAssignment, RunnerError> {
    let opponent = engine.sample_opponent(role, rng)?;
    let (opp_params, opp_mode) = engine.opponent_view(opponent)?;
    let (opp_char, learner_char) = matchup.sample_pair(rng);
    Ok(MatchAssignment { opponent, opp_params, opp_mode, opp_char, learner_char })
}

/// Collect fragments for all of a member's env slots, in slot order.
///
/// With more than one worker the slots are processed in parallel; results
/// are still applied in slot order, so worker count does not change the
/// outcome of a run, only its wall clock.
fn collect_all(
    params: &crate::policy::PolicyParams,
    mode: crate::encoders::EncoderMode,
    envs: &mut [EnvSlot],
    ctx: &FragmentCtx<'_>,
    workers: usize,
) -> Vec<FragmentResult> {
    if workers <= 1 || envs.len() <= 1 {
        return envs.iter_mut().map(|e| collect_fragment(params, mode, e, ctx)).collect();
    }
    let chunk = envs.len().div_ceil(workers);
    let mut out: Vec<(usize, FragmentResult)> = Vec::with_capacity(envs.len());
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (ci, slots) in envs.chunks_mut(chunk).enumerate() {
            let handle = scope.spawn(move || {
                slots
                    .iter_mut()
                    .enumerate()
                    .map(|(k, e)| (ci * chunk + k, collect_fragment(params, mode, e, ctx)))
                    .collect::<Vec<_>>()
            });
            handles.push(handle);
        }
        for h in handles {
            out.extend(h.join().expect("rollout worker panicked"));
        }
    });
    out.sort_by_key(|(idx, _)| *idx);
    out.into_iter().map(|(_, r)| r).collect()
}

/// Execute a full league run from a resolved configuration.
pub fn run_league(run: &ResolvedRun) -> Result<LeagueRunArtifacts, RunnerError> {
    let cfg = &run.config;
    let tables = IdTables::from_pool(&run.pool);
    let base_net = NetConfig {
        mode: cfg.league.main_mode,
        char_rows: tables.char_rows(),
        skill_rows: tables.skill_rows(),
        embed_width: cfg.learner.embed_width,
        hidden: cfg.learner.hidden,
    };
    let mut engine = LeagueEngine::new(cfg.league.clone(), base_net, cfg.master_seed)?;
    let mut matchup = MatchupState::new(run.subset.len(), cfg.matchup)?;
    let mut elo = EloTable::new(DEFAULT_K);
    let mut league_rng = derive_rng(cfg.master_seed, &[0x1ea6]);
    let mut sample_rng = derive_rng(cfg.master_seed, &[0x0553]);

    let workers = if cfg.deterministic { 1 } else { cfg.workers.max(1) };
    let mut optimizers: BTreeMap<Role, Adam> = Role::ALL
        .iter()
        .map(|&r| (r, Adam::new(engine.member(r).params.flat_len())))
        .collect();
    let mut buffers: BTreeMap<Role, Vec<Sample>> =
        Role::ALL.iter().map(|&r| (r, Vec::new())).collect();

    let mut envs: BTreeMap<Role, Vec<EnvSlot>> = BTreeMap::new();
    for (ri, &role) in Role::ALL.iter().enumerate() {
        let mut slots = Vec::with_capacity(cfg.env.envs_per_member);
        for env_idx in 0..cfg.env.envs_per_member {
            let assignment = sample_assignment(&engine, &matchup, role, &mut sample_rng)?;
            slots.push(EnvSlot::new(
                env_idx,
                ri as u64,
                cfg.master_seed,
                assignment,
                &run.subset,
                cfg.env.horizon,
            ));
        }
        envs.insert(role, slots);
    }

    let mut metrics = Vec::new();
    let mut matches = Vec::new();
    let mut total_steps = 0u64;

    while !engine.all_done() {
        for &role in Role::ALL.iter() {
            if engine.is_done(role) {
                continue;
            }
            let style = StyleReward::preset(cfg.league.styles.for_role(role));
            let slots = envs.get_mut(&role).expect("slots exist per role");
            for slot in slots.iter_mut() {
                let next = vec![
                    sample_assignment(&engine, &matchup, role, &mut sample_rng)?,
                    sample_assignment(&engine, &matchup, role, &mut sample_rng)?,
                ];
                slot.refill_queue(next);
            }

            let ctx = FragmentCtx {
                subset: &run.subset,
                tables: &tables,
                horizon: cfg.env.horizon,
                style,
                n_steps: cfg.learner.n_steps,
            };
            let member = engine.member(role);
            let results = collect_all(&member.params, member.encoder_mode, slots, &ctx, workers);

            let mut steps = 0u64;
            let buffer = buffers.get_mut(&role).expect("buffer per role");
            for result in results {
                steps += result.steps;
                for outcome in &result.outcomes {
                    engine.record_match(role, outcome.opponent, outcome.learner_won);
                    matchup.record_result(
                        outcome.opp_char,
                        outcome.learner_char,
                        outcome.learner_won,
                    )?;
                    matchup.update_regret_and_weights();
                    let score = if outcome.learner_won {
                        MatchScore::AWins
                    } else if outcome.draw {
                        MatchScore::Draw
                    } else {
                        MatchScore::BWins
                    };
                    let opp_label = match outcome.opponent {
                        OpponentId::Live(r) => r.as_str().to_string(),
                        s => s.label(),
                    };
                    elo.record(role.as_str(), &opp_label, score);
                    matches.push(TrainingMatchRow {
                        member: role,
                        opponent: opp_label,
                        learner_char: run.subset[outcome.learner_char].char_id,
                        opp_char: run.subset[outcome.opp_char].char_id,
                        learner_won: outcome.learner_won,
                        draw: outcome.draw,
                        frames: outcome.frames,
                    });
                }
                for traj in &result.trajectories {
                    debug_assert!(traj.validate().is_ok());
                    let (advantages, returns) = gae(traj, cfg.learner.gamma, cfg.learner.lam);
                    for t in 0..traj.len() {
                        buffer.push(Sample {
                            obs: traj.observations[t].clone(),
                            masks: traj.masks[t].clone(),
                            action: traj.actions[t],
                            old_logp: traj.old_logp[t],
                            advantage: advantages[t],
                            ret: returns[t],
                        });
                    }
                }
            }
            engine.add_steps(role, steps);
            total_steps += steps;

            if buffer.len() >= cfg.learner.batch_size {
                let opt = optimizers.get_mut(&role).expect("optimizer per role");
                let params = &mut engine.member_mut(role).params;
                train_on_samples(params, opt, buffer, &cfg.learner)?;
                buffer.clear();
            }

            if engine.should_snapshot(role) {
                let m = engine.member(role);
                metrics.push(MetricsRow {
                    iteration: m.generation,
                    member: role,
                    elo: elo.rating(role.as_str()),
                    min_win_rate: engine.min_candidate_winrate(role),
                    resets: m.resets,
                    member_steps: m.total_steps,
                    pool_size: engine.pool().len(),
                    by_timeout: m.steps_in_iteration >= cfg.league.iteration_timeout_steps,
                });
                engine.snapshot_and_maybe_reset(role, &mut league_rng);
            }
        }
    }

    Ok(LeagueRunArtifacts { engine, metrics, matches, elo, matchup, tables, total_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::game::pool::{generate_pool, save_pool};
    use crate::league::LeagueConfig;
    use crate::policy::LearnerConfig;

    fn small_run(dir: &std::path::Path, total_iterations: u32, seed: u64) -> ResolvedRun {
        save_pool(&generate_pool(8, 3), &dir.join("pool.jsonl")).unwrap();
        let cfg = RunConfig {
            master_seed: seed,
            env: crate::config::EnvConfig { horizon: 120, envs_per_member: 2 },
            learner: LearnerConfig {
                n_steps: 40,
                batch_size: 80,
                hidden: 16,
                embed_width: 4,
                ..LearnerConfig::default()
            },
            league: LeagueConfig {
                total_iterations,
                iteration_timeout_steps: 200,
                ..LeagueConfig::default()
            },
            subset: crate::config::SubsetCounts { s: 1, a: 1, b: 1, c: 1 },
            ..RunConfig::default()
        };
        cfg.resolve(dir).unwrap()
    }

    #[test]
    fn zero_iterations_touch_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let run = small_run(dir.path(), 0, 1);
        let artifacts = run_league(&run).unwrap();
        assert_eq!(artifacts.engine.pool().len(), 3, "bootstrap only");
        assert_eq!(artifacts.total_steps, 0);
        assert!(artifacts.metrics.is_empty());
    }

    #[test]
    fn two_iterations_produce_snapshots_and_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let run = small_run(dir.path(), 2, 2);
        let artifacts = run_league(&run).unwrap();
        // 3 bootstrap + 2 per member.
        assert_eq!(artifacts.engine.pool().len(), 3 + 6);
        assert_eq!(artifacts.metrics.len(), 6);
        assert!(artifacts.total_steps >= 3 * 2 * 200);
        assert!(!artifacts.matches.is_empty());
        for row in &artifacts.metrics {
            assert!(row.by_timeout, "tiny runs close iterations by timeout");
        }
    }

    #[test]
    fn identical_seeds_give_identical_artifacts() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let a = run_league(&small_run(dir1.path(), 1, 7)).unwrap();
        let b = run_league(&small_run(dir2.path(), 1, 7)).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.matches, b.matches);
        assert_eq!(a.metrics_csv(), b.metrics_csv());
        assert_eq!(
            a.engine.member(Role::Main).params.flatten(),
            b.engine.member(Role::Main).params.flatten()
        );
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let mut r1 = small_run(dir1.path(), 1, 9);
        let mut r2 = small_run(dir2.path(), 1, 9);
        r1.config.deterministic = true;
        r2.config.deterministic = false;
        r2.config.workers = 2;
        // Hash differences are fine; the trained outcome must match.
        let a = run_league(&r1).unwrap();
        let b = run_league(&r2).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(
            a.engine.member(Role::Main).params.flatten(),
            b.engine.member(Role::Main).params.flatten()
        );
    }
}
