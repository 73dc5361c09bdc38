//! Action policies: the trait the match drivers consume, plus the built-in
//! network, random, and scripted agents.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::encoders::{encode, EncoderMode, IdTables};
use crate::game::{
    ActionMasks, ActionTriple, Direction, GameState, MoveLr, MoveUd, Side, SkillAction, SkillSlot,
};
use crate::policy::{forward, sample_action, PolicyParams};

/// Something that can pick one legal action per frame.
pub trait ActionPolicy: Send {
    fn act(
        &mut self,
        state: &GameState,
        side: Side,
        masks: &ActionMasks,
        rng: &mut ChaCha8Rng,
    ) -> ActionTriple;
}

/// Uniform sampling over the legal entries of each head.
pub struct RandomPolicy;

pub fn masked_uniform_action(masks: &ActionMasks, rng: &mut impl Rng) -> ActionTriple {
    fn pick(mask: &[bool], rng: &mut impl Rng) -> usize {
        let n = mask.iter().filter(|&&b| b).count();
        let mut k = rng.gen_range(0..n);
        for (i, &ok) in mask.iter().enumerate() {
            if ok {
                if k == 0 {
                    return i;
                }
                k -= 1;
            }
        }
        unreachable!("mask has at least one legal entry")
    }
    ActionTriple {
        ud: [MoveUd::None, MoveUd::Up, MoveUd::Down][pick(&masks.ud, rng)],
        lr: [MoveLr::None, MoveLr::Left, MoveLr::Right][pick(&masks.lr, rng)],
        skill: SkillAction::from_head_index(pick(&masks.skill, rng)).expect("head index in range"),
        direction: Direction(pick(&masks.direction, rng) as u8),
    }
}

impl ActionPolicy for RandomPolicy {
    fn act(
        &mut self,
        _state: &GameState,
        _side: Side,
        masks: &ActionMasks,
        rng: &mut ChaCha8Rng,
    ) -> ActionTriple {
        masked_uniform_action(masks, rng)
    }
}

/// A trained policy driving matches by sampling its masked head
/// distributions.
pub struct NetworkPolicy {
    pub params: Arc<PolicyParams>,
    pub mode: EncoderMode,
    pub tables: Arc<IdTables>,
}

impl NetworkPolicy {
    pub fn new(params: Arc<PolicyParams>, mode: EncoderMode, tables: Arc<IdTables>) -> Self {
        Self { params, mode, tables }
    }
}

impl ActionPolicy for NetworkPolicy {
    fn act(
        &mut self,
        state: &GameState,
        side: Side,
        masks: &ActionMasks,
        rng: &mut ChaCha8Rng,
    ) -> ActionTriple {
        let obs = encode(state, side, self.mode, &self.tables);
        let (dists, _) = forward(&self.params, &obs, masks)
            .expect("legal masks always leave one entry per head");
        let (action, _, _) = sample_action(&dists, rng);
        action
    }
}

/// Rushdown bot: closes distance and attacks with the strongest ready skill
/// when in range, throws projectiles from afar, never defends. Attack
/// decisions fire only every `decision_period` frames to mimic human
/// reaction time; movement is continuous.
pub struct ScriptedAggressive {
    pub decision_period: u32,
}

impl Default for ScriptedAggressive {
    fn default() -> Self {
        Self { decision_period: 4 }
    }
}

fn aim_direction(dx: f64, dy: f64) -> Direction {
    let angle = dy.atan2(dx);
    let sector = (angle / (std::f64::consts::PI / 4.0)).round() as i64;
    Direction(sector.rem_euclid(8) as u8)
}

impl ActionPolicy for ScriptedAggressive {
    fn act(
        &mut self,
        state: &GameState,
        side: Side,
        masks: &ActionMasks,
        _rng: &mut ChaCha8Rng,
    ) -> ActionTriple {
        let me = state.fighter(side);
        let opp = state.fighter(side.other());
        let spec = state.spec(side);
        let dx = opp.x - me.x;
        let dy = opp.y - me.y;

        let mut action = ActionTriple::idle();
        if dx.abs() > 1.2 && masks.lr[1] {
            action.lr = if dx > 0.0 { MoveLr::Right } else { MoveLr::Left };
        }
        if dy.abs() > 0.4 && masks.ud[1] {
            action.ud = if dy > 0.0 { MoveUd::Up } else { MoveUd::Down };
        }

        if state.frame % self.decision_period != 0 {
            return action;
        }

        let in_range = |slot: SkillSlot| {
            let s = spec.skill(slot);
            let reach = s.hitbox.offset_x.abs() + s.hitbox.half_w;
            dx.abs() <= reach + state.spec(side.other()).hurtbox_half_w
                && dy.abs() <= s.hitbox.half_h + state.spec(side.other()).hurtbox_half_h
        };
        for slot in [SkillSlot::Skill3, SkillSlot::Skill2, SkillSlot::Skill1, SkillSlot::Punch] {
            if masks.skill[slot.index() + 1] && in_range(slot) {
                action.skill = SkillAction::Use(slot);
                if spec.skill(slot).needs_direction {
                    action.direction = aim_direction(dx, dy);
                }
                return action;
            }
        }
        if masks.skill[SkillSlot::Scroll.index() + 1] && dx.abs() > 3.0 {
            action.skill = SkillAction::Use(SkillSlot::Scroll);
            action.direction = aim_direction(dx, dy);
        }
        action
    }
}

/// All-none baseline; useful as a punching bag in tests.
pub struct IdlePolicy;

impl ActionPolicy for IdlePolicy {
    fn act(
        &mut self,
        _state: &GameState,
        _side: Side,
        _masks: &ActionMasks,
        _rng: &mut ChaCha8Rng,
    ) -> ActionTriple {
        ActionTriple::idle()
    }
}
