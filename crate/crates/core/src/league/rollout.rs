//! Rollout fragment collection for league training.
//!
//! Each live member owns a set of environment slots. A slot runs one match
//! at a time between the member (learner side) and an assigned frozen
//! opponent; when a match ends the slot starts the next one from a queue of
//! pre-sampled assignments. Fragments are `n_steps` long per slot and are
//! cut at match boundaries so every trajectory ends at most once.

use std::sync::Arc;

use crate::encoders::{encode, EncoderMode, IdTables};
use crate::game::{
    new_match, CharacterSpec, GameState, Outcome, Side, StyleReward, style_reward,
};
use crate::policy::{forward, sample_action, PolicyParams, Trajectory};
use crate::rng::derive_seed;

use super::rules::OpponentId;

/// One pre-sampled match assignment: who to fight and with which characters.
#[derive(Debug, Clone)]
pub struct MatchAssignment {
    pub opponent: OpponentId,
    pub opp_params: Arc<PolicyParams>,
    pub opp_mode: EncoderMode,
    /// Index of the opponent's character within the training subset.
    pub opp_char: usize,
    /// Index of the learner's character within the training subset.
    pub learner_char: usize,
}

/// A finished match as seen by the learner side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcomeRecord {
    pub opponent: OpponentId,
    pub opp_char: usize,
    pub learner_char: usize,
    pub learner_won: bool,
    pub draw: bool,
    pub frames: u32,
}

/// One environment slot owned by a member.
pub struct EnvSlot {
    pub env_idx: usize,
    pub state: GameState,
    pub learner_side: Side,
    pub assignment: MatchAssignment,
    pub queued: Vec<MatchAssignment>,
    match_counter: u64,
    member_tag: u64,
    master_seed: u64,
}

impl EnvSlot {
    pub fn new(
        env_idx: usize,
        member_tag: u64,
        master_seed: u64,
        assignment: MatchAssignment,
        subset: &[CharacterSpec],
        horizon: u32,
    ) -> Self {
        let learner_side = if env_idx % 2 == 0 { Side::A } else { Side::B };
        let state = start_match(
            &assignment,
            learner_side,
            subset,
            horizon,
            derive_seed(master_seed, &[0x9a9e, member_tag, env_idx as u64, 0]),
        );
        Self {
            env_idx,
            state,
            learner_side,
            assignment,
            queued: Vec::new(),
            match_counter: 0,
            member_tag,
            master_seed,
        }
    }

    /// Queue assignments for upcoming matches (latest sampling wins).
    pub fn refill_queue(&mut self, assignments: Vec<MatchAssignment>) {
        self.queued = assignments;
    }

    fn next_match(&mut self, subset: &[CharacterSpec], horizon: u32) {
        if let Some(next) = self.queued.pop() {
            self.assignment = next;
        }
        self.match_counter += 1;
        let seed = derive_seed(
            self.master_seed,
            &[0x9a9e, self.member_tag, self.env_idx as u64, self.match_counter],
        );
        self.state = start_match(&self.assignment, self.learner_side, subset, horizon, seed);
    }
}

fn start_match(
    assignment: &MatchAssignment,
    learner_side: Side,
    subset: &[CharacterSpec],
    horizon: u32,
    seed: u64,
) -> GameState {
    let learner_spec = subset[assignment.learner_char].clone();
    let opp_spec = subset[assignment.opp_char].clone();
    let (spec_a, spec_b) = match learner_side {
        Side::A => (learner_spec, opp_spec),
        Side::B => (opp_spec, learner_spec),
    };
    new_match(spec_a, spec_b, horizon, seed).expect("pool specs are validated at load")
}

/// Everything a fragment needs besides the learner parameters.
pub struct FragmentCtx<'a> {
    pub subset: &'a [CharacterSpec],
    pub tables: &'a IdTables,
    pub horizon: u32,
    pub style: StyleReward,
    pub n_steps: usize,
}

#[derive(Default)]
pub struct FragmentResult {
    pub trajectories: Vec<Trajectory>,
    pub outcomes: Vec<MatchOutcomeRecord>,
    pub steps: u64,
}

/// Advance one slot by `n_steps` frames, collecting learner trajectories and
/// finished-match records. Starts replacement matches as needed.
pub fn collect_fragment(
    params: &PolicyParams,
    mode: EncoderMode,
    env: &mut EnvSlot,
    ctx: &FragmentCtx<'_>,
) -> FragmentResult {
    let mut result = FragmentResult::default();
    let mut traj = Trajectory::default();

    for _ in 0..ctx.n_steps {
        if env.state.is_terminal() {
            env.next_match(ctx.subset, ctx.horizon);
        }
        let learner = env.learner_side;
        let opp_side = learner.other();

        let masks_l = env.state.legal_action_mask(learner).expect("state is live");
        let obs_l = encode(&env.state, learner, mode, ctx.tables);
        let (dists, value) =
            forward(params, &obs_l, &masks_l).expect("mask always has a legal entry");

        let masks_o = env.state.legal_action_mask(opp_side).expect("state is live");
        let obs_o = encode(&env.state, opp_side, env.assignment.opp_mode, ctx.tables);
        let (dists_o, _) = forward(&env.assignment.opp_params, &obs_o, &masks_o)
            .expect("mask always has a legal entry");

        let rng = env.state.rng_mut();
        let (act_l, logp, idx) = sample_action(&dists, rng);
        let (act_o, _, _) = sample_action(&dists_o, rng);

        let (act_a, act_b) = match learner {
            Side::A => (act_l, act_o),
            Side::B => (act_o, act_l),
        };
        let info = env.state.step(&act_a, &act_b).expect("sampled actions are legal");

        let li = learner.index();
        let oi = opp_side.index();
        let max_hp = (env.state.specs[li].max_hp, env.state.specs[oi].max_hp);
        let reward = style_reward(
            info.hp_loss[li],
            info.hp_loss[oi],
            max_hp,
            info.terminal,
            &ctx.style,
        );

        traj.push(obs_l, masks_l, idx, logp, reward, value, info.terminal);
        result.steps += 1;

        if info.terminal {
            let learner_won = match (info.outcome, learner) {
                (Outcome::AWins, Side::A) | (Outcome::BWins, Side::B) => true,
                _ => false,
            };
            result.outcomes.push(MatchOutcomeRecord {
                opponent: env.assignment.opponent,
                opp_char: env.assignment.opp_char,
                learner_char: env.assignment.learner_char,
                learner_won,
                draw: info.outcome == Outcome::Draw,
                frames: env.state.frame,
            });
            traj.bootstrap_value = 0.0;
            result.trajectories.push(std::mem::take(&mut traj));
        }
    }

    if !traj.is_empty() {
        let masks = env.state.legal_action_mask(env.learner_side).expect("state is live");
        let obs = encode(&env.state, env.learner_side, mode, ctx.tables);
        let (_, bootstrap) = forward(params, &obs, &masks).expect("mask has a legal entry");
        traj.bootstrap_value = bootstrap;
        result.trajectories.push(traj);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::IdTables;
    use crate::game::pool::generate_pool;
    use crate::policy::NetConfig;

    #[test]
    fn fragment_has_valid_trajectories_and_counts_steps() {
        let subset = generate_pool(4, 3);
        let tables = IdTables::from_pool(&subset);
        let net = NetConfig {
            mode: EncoderMode::Qs,
            char_rows: tables.char_rows(),
            skill_rows: tables.skill_rows(),
            embed_width: 4,
            hidden: 16,
        };
        let params = PolicyParams::init(net, 1);
        let opp = Arc::new(PolicyParams::init(net, 2));
        let assignment = MatchAssignment {
            opponent: OpponentId::Snapshot(0),
            opp_params: opp,
            opp_mode: EncoderMode::Qs,
            opp_char: 0,
            learner_char: 1,
        };
        let mut env = EnvSlot::new(0, 0, 9, assignment, &subset, 60);
        let ctx = FragmentCtx {
            subset: &subset,
            tables: &tables,
            horizon: 60,
            style: StyleReward::balanced(),
            n_steps: 150,
        };
        let result = collect_fragment(&params, EncoderMode::Qs, &mut env, &ctx);
        assert_eq!(result.steps, 150);
        // Horizon 60 forces at least two finished matches inside 150 steps.
        assert!(result.outcomes.len() >= 2);
        let total: usize = result.trajectories.iter().map(|t| t.len()).sum();
        assert_eq!(total, 150);
        for t in &result.trajectories {
            t.validate().unwrap();
        }
    }

    #[test]
    fn fragments_are_reproducible() {
        let subset = generate_pool(2, 5);
        let tables = IdTables::from_pool(&subset);
        let net = NetConfig {
            mode: EncoderMode::Fqs,
            char_rows: tables.char_rows(),
            skill_rows: tables.skill_rows(),
            embed_width: 4,
            hidden: 8,
        };
        let params = PolicyParams::init(net, 4);
        let opp = Arc::new(PolicyParams::init(net, 5));
        let mk_env = || {
            EnvSlot::new(
                1,
                7,
                11,
                MatchAssignment {
                    opponent: OpponentId::Snapshot(0),
                    opp_params: Arc::clone(&opp),
                    opp_mode: EncoderMode::Fqs,
                    opp_char: 1,
                    learner_char: 0,
                },
                &subset,
                100,
            )
        };
        let ctx = FragmentCtx {
            subset: &subset,
            tables: &tables,
            horizon: 100,
            style: StyleReward::balanced(),
            n_steps: 80,
        };
        let mut e1 = mk_env();
        let mut e2 = mk_env();
        let r1 = collect_fragment(&params, EncoderMode::Fqs, &mut e1, &ctx);
        let r2 = collect_fragment(&params, EncoderMode::Fqs, &mut e2, &ctx);
        assert_eq!(r1.outcomes, r2.outcomes);
        assert_eq!(e1.state, e2.state);
        for (a, b) in r1.trajectories.iter().zip(&r2.trajectories) {
            assert_eq!(a.rewards, b.rewards);
            assert_eq!(a.actions, b.actions);
        }
    }
}
