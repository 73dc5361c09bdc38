//! Deterministic two-fighter arena simulator.
//!
//! A match is a frame-stepped duel between two fighters on a flat 2-D arena.
//! Both players submit one action per frame; the step resolves movement,
//! skill startup/active windows, rectangle hit detection, substitute
//! counters, and timeout/knockout outcomes. The whole state is a value:
//! cloning it and replaying the same action sequence reproduces the match
//! bit for bit.

mod character;
pub mod pool;
mod reward;
mod sim;

pub use character::{CharacterSpec, Level, RectSpec, SkillSlot, SkillSpec, SKILL_SLOTS};
pub use reward::{base_reward, style_reward, Style, StyleReward};
pub use sim::{
    new_match, ActionMasks, ActionTriple, ActiveSkill, Direction, Facing, FighterState,
    FrameEvent, GameError, GameState, MoveLr, MoveUd, Outcome, Projectile, Side, SkillAction,
    StepInfo, ARENA_H, ARENA_W, BUFF_FRAMES, BUFF_MULTIPLIER, COUNTER_STUN_FRAMES,
    FRAMES_PER_SECOND, PROJECTILE_SPEED,
};
