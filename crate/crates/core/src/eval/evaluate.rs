//! Evaluation matches: round-robin pools, character splits, and match
//! records for post-hoc scoring.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::ActionPolicy;
use crate::game::{new_match, CharacterSpec, GameError, Outcome, Side};
use crate::rng::{derive_rng, derive_seed};

use super::behavior::{BehaviorLog, BehaviorLogBuilder};
use super::elo::{EloTable, MatchScore, DEFAULT_K};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("character split `{0}` is empty")]
    EmptySplit(&'static str),
    #[error("game error during evaluation: {0}")]
    Game(#[from] GameError),
}

/// A named participant in an evaluation.
pub struct EvalAgent {
    pub id: String,
    pub policy: Box<dyn ActionPolicy>,
}

impl EvalAgent {
    pub fn new(id: impl Into<String>, policy: Box<dyn ActionPolicy>) -> Self {
        Self { id: id.into(), policy }
    }
}

/// Summary of one evaluation match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchRecord {
    pub agent_a: String,
    pub agent_b: String,
    pub char_a: u32,
    pub char_b: u32,
    pub outcome: Outcome,
    pub frames: u32,
}

/// Play one match between two policies, returning the outcome and the
/// behavior log of both sides.
pub fn play_match(
    a: &mut dyn ActionPolicy,
    b: &mut dyn ActionPolicy,
    spec_a: &CharacterSpec,
    spec_b: &CharacterSpec,
    horizon: u32,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(Outcome, u32, BehaviorLog), EvalError> {
    let mut state = new_match(spec_a.clone(), spec_b.clone(), horizon, seed)?;
    let mut log =
        BehaviorLogBuilder::new([spec_a.highest_damage_slot(), spec_b.highest_damage_slot()]);
    loop {
        let mask_a = state.legal_action_mask(Side::A)?;
        let mask_b = state.legal_action_mask(Side::B)?;
        let act_a = a.act(&state, Side::A, &mask_a, rng);
        let act_b = b.act(&state, Side::B, &mask_b, rng);
        let hp_energy = [
            (state.fighter(Side::A).hp, state.fighter(Side::A).energy),
            (state.fighter(Side::B).hp, state.fighter(Side::B).energy),
        ];
        let frame = state.frame;
        let info = state.step(&act_a, &act_b)?;
        log.observe(frame, &info, hp_energy);
        if info.terminal {
            return Ok((info.outcome, state.frame, log.finish()));
        }
    }
}

/// Draw one character per side, uniformly from the split.
pub fn sample_matchup<'a>(
    split: &'a [CharacterSpec],
    rng: &mut ChaCha8Rng,
) -> (&'a CharacterSpec, &'a CharacterSpec) {
    use rand::Rng;
    let a = &split[rng.gen_range(0..split.len())];
    let b = &split[rng.gen_range(0..split.len())];
    (a, b)
}

/// Evaluation output: pairwise win rates, ratings, and per-match records.
pub struct EvalReport {
    /// `win_rate[i][j]` = wins (draws half) of agent i over agent j.
    pub win_rate: Vec<Vec<f64>>,
    pub elo: EloTable,
    pub records: Vec<MatchRecord>,
    pub logs: Vec<(String, Side, BehaviorLog)>,
}

/// Round-robin evaluation with uniform character sampling from `split`.
///
/// Each unordered agent pair plays `n_matches` matches, alternating sides.
/// Deterministic for a fixed seed.
pub fn evaluate_pool(
    agents: &mut [EvalAgent],
    split: &[CharacterSpec],
    n_matches: usize,
    horizon: u32,
    seed: u64,
    keep_logs: bool,
) -> Result<EvalReport, EvalError> {
    if agents.len() < 2 {
        return Err(EvalError::TooFewAgents(agents.len()));
    }
    if split.is_empty() {
        return Err(EvalError::EmptySplit("evaluation"));
    }
    let n = agents.len();
    let mut wins = vec![vec![0.0f64; n]; n];
    let mut played = vec![vec![0usize; n]; n];
    let mut elo = EloTable::new(DEFAULT_K);
    let mut records = Vec::new();
    let mut logs = Vec::new();

    for i in 0..n {
        for j in (i + 1)..n {
            let mut pair_rng = derive_rng(seed, &[0xe7a1, i as u64, j as u64]);
            for m in 0..n_matches {
                // Alternate which agent sits on side A.
                let (ai, bi) = if m % 2 == 0 { (i, j) } else { (j, i) };
                let (spec_a, spec_b) = sample_matchup(split, &mut pair_rng);
                let match_seed = derive_seed(seed, &[0x9a7c, i as u64, j as u64, m as u64]);
                let (first, second) = split_pair(agents, ai, bi);
                let (outcome, frames, log) = play_match(
                    first.policy.as_mut(),
                    second.policy.as_mut(),
                    spec_a,
                    spec_b,
                    horizon,
                    match_seed,
                    &mut pair_rng,
                )?;
                let (score_ai, score_bi) = match outcome {
                    Outcome::AWins => (1.0, 0.0),
                    Outcome::BWins => (0.0, 1.0),
                    _ => (0.5, 0.5),
                };
                wins[ai][bi] += score_ai;
                wins[bi][ai] += score_bi;
                played[ai][bi] += 1;
                played[bi][ai] += 1;
                let elo_outcome = match outcome {
                    Outcome::AWins => MatchScore::AWins,
                    Outcome::BWins => MatchScore::BWins,
                    _ => MatchScore::Draw,
                };
                let (id_a, id_b) = (agents[ai].id.clone(), agents[bi].id.clone());
                elo.record(&id_a, &id_b, elo_outcome);
                records.push(MatchRecord {
                    agent_a: id_a.clone(),
                    agent_b: id_b.clone(),
                    char_a: spec_a.char_id,
                    char_b: spec_b.char_id,
                    outcome,
                    frames,
                });
                if keep_logs {
                    logs.push((id_a, Side::A, log.clone()));
                    logs.push((id_b, Side::B, log));
                }
            }
        }
    }

    let win_rate = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if played[i][j] == 0 { 0.0 } else { wins[i][j] / played[i][j] as f64 })
                .collect()
        })
        .collect();
    Ok(EvalReport { win_rate, elo, records, logs })
}

/// Two disjoint mutable references into the agent slice.
fn split_pair(agents: &mut [EvalAgent], a: usize, b: usize) -> (&mut EvalAgent, &mut EvalAgent) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = agents.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = agents.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}
