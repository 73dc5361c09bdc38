//! Match state, legal-action masks, and the frame step.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::character::{CharacterSpec, SkillSlot, SKILL_SLOTS};

/// Arena width in units (x spans 0..ARENA_W).
pub const ARENA_W: f64 = 20.0;
/// Arena height in units (y spans 0..ARENA_H).
pub const ARENA_H: f64 = 10.0;
/// Logical simulation rate.
pub const FRAMES_PER_SECOND: u32 = 30;
/// Stun applied to an attacker whose hit was negated by a substitute.
pub const COUNTER_STUN_FRAMES: u32 = 30;
/// Duration of the summon damage buff.
pub const BUFF_FRAMES: u32 = 240;
/// Damage multiplier while the summon buff is up.
pub const BUFF_MULTIPLIER: f64 = 1.5;
/// Projectile travel speed in units per frame.
pub const PROJECTILE_SPEED: f64 = 0.4;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid character spec: {0}")]
    InvalidSpec(#[from] super::character::SpecError),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("match is already over")]
    MatchOver,
    #[error("illegal action for side {side:?}: {reason}")]
    IllegalAction { side: Side, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facing {
    Left,
    Right,
}

impl Facing {
    pub fn sign(self) -> f64 {
        match self {
            Facing::Left => -1.0,
            Facing::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveUd {
    None,
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveLr {
    None,
    Left,
    Right,
}

/// Skill head entry: "none" plus the nine slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkillAction {
    None,
    Use(SkillSlot),
}

impl SkillAction {
    pub const HEAD_SIZE: usize = 10;

    pub fn head_index(self) -> usize {
        match self {
            SkillAction::None => 0,
            SkillAction::Use(slot) => slot.index() + 1,
        }
    }

    pub fn from_head_index(i: usize) -> Option<SkillAction> {
        match i {
            0 => Some(SkillAction::None),
            1..=9 => Some(SkillAction::Use(SKILL_SLOTS[i - 1])),
            _ => None,
        }
    }
}

/// One of eight aim directions at 45 degree spacing (0 = +x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction(pub u8);

impl Direction {
    pub const HEAD_SIZE: usize = 8;

    pub fn unit(self) -> (f64, f64) {
        const D: f64 = std::f64::consts::FRAC_1_SQRT_2;
        match self.0 % 8 {
            0 => (1.0, 0.0),
            1 => (D, D),
            2 => (0.0, 1.0),
            3 => (-D, D),
            4 => (-1.0, 0.0),
            5 => (-D, -D),
            6 => (0.0, -1.0),
            _ => (D, -D),
        }
    }
}

/// One frame's worth of input for one player: four independent heads.
///
/// The direction head is ignored unless the chosen skill is aimed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTriple {
    pub ud: MoveUd,
    pub lr: MoveLr,
    pub skill: SkillAction,
    pub direction: Direction,
}

impl ActionTriple {
    pub fn idle() -> Self {
        Self { ud: MoveUd::None, lr: MoveLr::None, skill: SkillAction::None, direction: Direction(0) }
    }
}

/// Per-head legality; sampling from these never produces an illegal step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMasks {
    pub ud: [bool; 3],
    pub lr: [bool; 3],
    pub skill: [bool; SkillAction::HEAD_SIZE],
    pub direction: [bool; Direction::HEAD_SIZE],
}

impl ActionMasks {
    pub fn head(&self, h: usize) -> &[bool] {
        match h {
            0 => &self.ud,
            1 => &self.lr,
            2 => &self.skill,
            _ => &self.direction,
        }
    }

    pub fn permits(&self, action: &ActionTriple) -> bool {
        self.ud[action.ud as usize]
            && self.lr[action.lr as usize]
            && self.skill[action.skill.head_index()]
            && self.direction[action.direction.0 as usize % 8]
    }
}

/// A skill that has been raised and is progressing through startup/active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveSkill {
    pub slot: SkillSlot,
    pub frames_elapsed: u32,
    pub has_hit: bool,
    pub use_id: u32,
    /// Aim fixed at activation (facing-derived for unaimed skills).
    pub direction: Direction,
}

/// A live projectile; at most one per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projectile {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub half_w: f64,
    pub half_h: f64,
    pub damage: f64,
    pub use_id: u32,
}

/// Dynamic state of one fighter.
#[derive(Debug, Clone, PartialEq)]
pub struct FighterState {
    pub hp: f64,
    pub x: f64,
    pub y: f64,
    pub energy: f64,
    pub cooldown_remaining: [u32; 9],
    pub stun_remaining: u32,
    pub active_skill: Option<ActiveSkill>,
    pub facing: Facing,
    pub buff_remaining: u32,
    pub projectile: Option<Projectile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Ongoing,
    AWins,
    BWins,
    Draw,
}

/// Events emitted by one step, consumed by match loggers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameEvent {
    SkillUsed { side: Side, slot: SkillSlot, use_id: u32 },
    Hit { attacker: Side, slot: SkillSlot, use_id: u32, damage: f64, projectile: bool },
    Negated { defender: Side, attacker_slot: SkillSlot, attacker_use_id: u32 },
}

/// What one frame did: per-side hp losses, events, and the match status.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub hp_loss: [f64; 2],
    pub terminal: bool,
    pub outcome: Outcome,
    pub events: Vec<FrameEvent>,
}

/// Full match state at one frame.
///
/// The embedded RNG is the match's private random stream; the simulator
/// itself is deterministic, the stream is for action sampling by whoever
/// owns the match.
#[derive(Debug, Clone)]
pub struct GameState {
    pub frame: u32,
    pub horizon: u32,
    pub fighters: [FighterState; 2],
    pub specs: [CharacterSpec; 2],
    pub outcome: Outcome,
    rng: ChaCha8Rng,
    next_use_id: u32,
}

impl PartialEq for GameState {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame
            && self.horizon == other.horizon
            && self.fighters == other.fighters
            && self.specs == other.specs
            && self.outcome == other.outcome
            && self.next_use_id == other.next_use_id
            && self.rng == other.rng
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    cx: f64,
    cy: f64,
    hw: f64,
    hh: f64,
}

fn rects_intersect(a: Rect, b: Rect) -> bool {
    (a.cx - b.cx).abs() <= a.hw + b.hw && (a.cy - b.cy).abs() <= a.hh + b.hh
}

impl FighterState {
    fn hurtbox(&self, spec: &CharacterSpec) -> Rect {
        Rect { cx: self.x, cy: self.y, hw: spec.hurtbox_half_w, hh: spec.hurtbox_half_h }
    }

    fn in_active_window(&self, spec: &CharacterSpec) -> bool {
        match self.active_skill {
            Some(ask) => {
                let s = spec.skill(ask.slot);
                ask.frames_elapsed >= s.startup && ask.frames_elapsed < s.startup + s.active
            }
            None => false,
        }
    }
}

/// Set up a fresh match: full HP and energy, zero cooldowns, spawn positions
/// mirrored left/right. Identical `(specs, horizon, seed)` produce
/// bit-identical states.
pub fn new_match(
    spec_a: CharacterSpec,
    spec_b: CharacterSpec,
    horizon: u32,
    seed: u64,
) -> Result<GameState, GameError> {
    if horizon == 0 {
        return Err(GameError::ZeroHorizon);
    }
    spec_a.validate()?;
    spec_b.validate()?;

    let spawn = |spec: &CharacterSpec, x: f64, facing: Facing| FighterState {
        hp: spec.max_hp,
        x,
        y: ARENA_H / 2.0,
        energy: spec.max_energy,
        cooldown_remaining: [0; 9],
        stun_remaining: 0,
        active_skill: None,
        facing,
        buff_remaining: 0,
        projectile: None,
    };

    let offset = ARENA_W / 4.0;
    let fighters = [
        spawn(&spec_a, ARENA_W / 2.0 - offset, Facing::Right),
        spawn(&spec_b, ARENA_W / 2.0 + offset, Facing::Left),
    ];

    Ok(GameState {
        frame: 0,
        horizon,
        fighters,
        specs: [spec_a, spec_b],
        outcome: Outcome::Ongoing,
        rng: ChaCha8Rng::seed_from_u64(seed),
        next_use_id: 0,
    })
}

impl GameState {
    pub fn is_terminal(&self) -> bool {
        self.outcome != Outcome::Ongoing
    }

    /// The match's private random stream (for action sampling).
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn fighter(&self, side: Side) -> &FighterState {
        &self.fighters[side.index()]
    }

    pub fn spec(&self, side: Side) -> &CharacterSpec {
        &self.specs[side.index()]
    }

    /// Per-head legality for `side`.
    ///
    /// Skill entries are masked while cooling down, unaffordable, or stunned;
    /// follow-up skills additionally require their parent skill to have
    /// reached its active phase. Movement is masked only while stunned. The
    /// "none" entries are always legal, and the direction head is always
    /// fully legal (it is a pure aim parameter, ignored unless the chosen
    /// skill is aimed).
    pub fn legal_action_mask(&self, side: Side) -> Result<ActionMasks, GameError> {
        if self.is_terminal() {
            return Err(GameError::MatchOver);
        }
        let me = self.fighter(side);
        let spec = self.spec(side);
        let stunned = me.stun_remaining > 0;

        let movement = [true, !stunned, !stunned];
        let mut skill = [false; SkillAction::HEAD_SIZE];
        skill[0] = true;
        if !stunned {
            for slot in SKILL_SLOTS {
                let s = spec.skill(slot);
                let ready = me.cooldown_remaining[slot.index()] == 0 && me.energy >= s.energy_cost;
                let chain_ok = match slot.parent() {
                    Some(parent) => match me.active_skill {
                        Some(ask) => {
                            ask.slot == parent && ask.frames_elapsed >= spec.skill(parent).startup
                        }
                        None => false,
                    },
                    None => true,
                };
                skill[slot.index() + 1] = ready && chain_ok;
            }
        }

        Ok(ActionMasks {
            ud: movement,
            lr: movement,
            skill,
            direction: [true; Direction::HEAD_SIZE],
        })
    }

    /// Advance the match by one frame with both players' actions.
    ///
    /// Both actions must be legal under [`Self::legal_action_mask`]. Raising
    /// a new skill cancels the current one; a substitute raised while the
    /// opponent's skill is in its active frames negates that hit and stuns
    /// the attacker. Projectiles are not negated by substitutes.
    pub fn step(&mut self, act_a: &ActionTriple, act_b: &ActionTriple) -> Result<StepInfo, GameError> {
        if self.is_terminal() {
            return Err(GameError::MatchOver);
        }
        let actions = [act_a, act_b];
        for side in [Side::A, Side::B] {
            let mask = self.legal_action_mask(side)?;
            if !mask.permits(actions[side.index()]) {
                return Err(GameError::IllegalAction { side, reason: "masked entry chosen" });
            }
        }

        let hp_before = [self.fighters[0].hp, self.fighters[1].hp];
        let mut events = Vec::new();

        // Movement, then face the opponent.
        for i in 0..2 {
            let f = &mut self.fighters[i];
            if f.stun_remaining > 0 {
                continue;
            }
            let act = actions[i];
            let speed = self.specs[i].move_speed;
            match act.ud {
                MoveUd::Up => f.y += speed,
                MoveUd::Down => f.y -= speed,
                MoveUd::None => {}
            }
            match act.lr {
                MoveLr::Left => f.x -= speed,
                MoveLr::Right => f.x += speed,
                MoveLr::None => {}
            }
            f.x = f.x.clamp(0.0, ARENA_W);
            f.y = f.y.clamp(0.0, ARENA_H);
        }
        let dx = self.fighters[1].x - self.fighters[0].x;
        if dx != 0.0 {
            self.fighters[0].facing = if dx > 0.0 { Facing::Right } else { Facing::Left };
            self.fighters[1].facing = if dx > 0.0 { Facing::Left } else { Facing::Right };
        }

        // Skill activation.
        let mut raised_substitute = [false; 2];
        for i in 0..2 {
            let SkillAction::Use(slot) = actions[i].skill else { continue };
            let spec_skill = self.specs[i].skill(slot).clone();
            let use_id = self.next_use_id;
            self.next_use_id += 1;
            let facing = self.fighters[i].facing;
            let f = &mut self.fighters[i];
            f.energy -= spec_skill.energy_cost;
            f.cooldown_remaining[slot.index()] = spec_skill.cooldown;
            events.push(FrameEvent::SkillUsed { side: side_of(i), slot, use_id });
            match slot {
                SkillSlot::Summon => {
                    f.buff_remaining = BUFF_FRAMES;
                    f.active_skill = None;
                }
                SkillSlot::Substitute => {
                    raised_substitute[i] = true;
                    f.active_skill = None;
                }
                _ => {
                    let direction = if spec_skill.needs_direction {
                        actions[i].direction
                    } else if facing == Facing::Right {
                        Direction(0)
                    } else {
                        Direction(4)
                    };
                    f.active_skill = Some(ActiveSkill {
                        slot,
                        frames_elapsed: 0,
                        has_hit: false,
                        use_id,
                        direction,
                    });
                }
            }
        }

        // Substitute resolution: negate an in-active-window attack and stun
        // the attacker. Simultaneous substitutes simply both whiff.
        for i in 0..2 {
            if !raised_substitute[i] {
                continue;
            }
            let o = 1 - i;
            if self.fighters[o].in_active_window(&self.specs[o]) {
                let ask = self.fighters[o].active_skill.expect("active window implies a skill");
                events.push(FrameEvent::Negated {
                    defender: side_of(i),
                    attacker_slot: ask.slot,
                    attacker_use_id: ask.use_id,
                });
                self.fighters[o].active_skill = None;
                self.fighters[o].stun_remaining = COUNTER_STUN_FRAMES;
            }
        }

        // Melee hit resolution on the post-movement snapshot; both sides
        // resolve against pre-damage state so trades and double KOs work.
        let mut pending_damage = [0.0f64; 2];
        for i in 0..2 {
            let o = 1 - i;
            let Some(ask) = self.fighters[i].active_skill else { continue };
            if ask.slot == SkillSlot::Scroll || ask.has_hit {
                continue;
            }
            if !self.fighters[i].in_active_window(&self.specs[i]) {
                continue;
            }
            let skill = self.specs[i].skill(ask.slot);
            let hitbox = hitbox_rect(skill, &self.fighters[i], ask.direction);
            let hurtbox = self.fighters[o].hurtbox(&self.specs[o]);
            if rects_intersect(hitbox, hurtbox) {
                let mult = if self.fighters[i].buff_remaining > 0 { BUFF_MULTIPLIER } else { 1.0 };
                let damage = (skill.damage * mult).min(self.fighters[o].hp);
                pending_damage[o] += damage;
                events.push(FrameEvent::Hit {
                    attacker: side_of(i),
                    slot: ask.slot,
                    use_id: ask.use_id,
                    damage,
                    projectile: false,
                });
                self.fighters[i].active_skill.as_mut().unwrap().has_hit = true;
            }
        }
        for i in 0..2 {
            self.fighters[i].hp = (self.fighters[i].hp - pending_damage[i]).max(0.0);
        }

        // Projectiles: advance live ones, then spawn freshly released ones
        // (a new projectile starts moving on the following frame).
        for i in 0..2 {
            let o = 1 - i;
            let Some(mut p) = self.fighters[i].projectile else { continue };
            p.x += p.vx;
            p.y += p.vy;
            let rect = Rect { cx: p.x, cy: p.y, hw: p.half_w, hh: p.half_h };
            let hurtbox = self.fighters[o].hurtbox(&self.specs[o]);
            if rects_intersect(rect, hurtbox) {
                let mult = if self.fighters[i].buff_remaining > 0 { BUFF_MULTIPLIER } else { 1.0 };
                let damage = (p.damage * mult).min(self.fighters[o].hp);
                self.fighters[o].hp -= damage;
                events.push(FrameEvent::Hit {
                    attacker: side_of(i),
                    slot: SkillSlot::Scroll,
                    use_id: p.use_id,
                    damage,
                    projectile: true,
                });
                self.fighters[i].projectile = None;
            } else if p.x < 0.0 || p.x > ARENA_W || p.y < 0.0 || p.y > ARENA_H {
                self.fighters[i].projectile = None;
            } else {
                self.fighters[i].projectile = Some(p);
            }
        }
        for i in 0..2 {
            let Some(ask) = self.fighters[i].active_skill else { continue };
            let skill = self.specs[i].skill(SkillSlot::Scroll);
            if ask.slot == SkillSlot::Scroll && ask.frames_elapsed == skill.startup {
                let (dx, dy) = ask.direction.unit();
                let reach = (skill.hitbox.offset_x.powi(2) + skill.hitbox.offset_y.powi(2)).sqrt();
                self.fighters[i].projectile = Some(Projectile {
                    x: self.fighters[i].x + dx * reach,
                    y: self.fighters[i].y + dy * reach,
                    vx: dx * PROJECTILE_SPEED,
                    vy: dy * PROJECTILE_SPEED,
                    half_w: skill.hitbox.half_w,
                    half_h: skill.hitbox.half_h,
                    damage: skill.damage,
                    use_id: ask.use_id,
                });
                self.fighters[i].active_skill = None;
            }
        }

        // Advance counters.
        for i in 0..2 {
            let spec = &self.specs[i];
            let f = &mut self.fighters[i];
            if let Some(ask) = f.active_skill.as_mut() {
                ask.frames_elapsed += 1;
                let s = spec.skill(ask.slot);
                if ask.frames_elapsed >= s.startup + s.active {
                    f.active_skill = None;
                }
            }
            for cd in f.cooldown_remaining.iter_mut() {
                *cd = cd.saturating_sub(1);
            }
            f.stun_remaining = f.stun_remaining.saturating_sub(1);
            f.buff_remaining = f.buff_remaining.saturating_sub(1);
            f.energy = (f.energy + spec.energy_regen).min(spec.max_energy);
        }
        self.frame += 1;

        // Terminal check: knockout first, then timeout.
        let hp = [self.fighters[0].hp, self.fighters[1].hp];
        self.outcome = if hp[0] <= 0.0 && hp[1] <= 0.0 {
            Outcome::Draw
        } else if hp[1] <= 0.0 {
            Outcome::AWins
        } else if hp[0] <= 0.0 {
            Outcome::BWins
        } else if self.frame >= self.horizon {
            if hp[0] > hp[1] {
                Outcome::AWins
            } else if hp[1] > hp[0] {
                Outcome::BWins
            } else {
                Outcome::Draw
            }
        } else {
            Outcome::Ongoing
        };

        Ok(StepInfo {
            hp_loss: [hp_before[0] - hp[0], hp_before[1] - hp[1]],
            terminal: self.is_terminal(),
            outcome: self.outcome,
            events,
        })
    }
}

fn side_of(i: usize) -> Side {
    if i == 0 {
        Side::A
    } else {
        Side::B
    }
}

fn hitbox_rect(skill: &super::character::SkillSpec, fighter: &FighterState, dir: Direction) -> Rect {
    if skill.needs_direction {
        let (dx, dy) = dir.unit();
        let reach = (skill.hitbox.offset_x.powi(2) + skill.hitbox.offset_y.powi(2)).sqrt();
        Rect {
            cx: fighter.x + dx * reach,
            cy: fighter.y + dy * reach,
            hw: skill.hitbox.half_w,
            hh: skill.hitbox.half_h,
        }
    } else {
        Rect {
            cx: fighter.x + fighter.facing.sign() * skill.hitbox.offset_x,
            cy: fighter.y + skill.hitbox.offset_y,
            hw: skill.hitbox.half_w,
            hh: skill.hitbox.half_h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::pool::generate_pool;
    use rand::Rng;

    fn pair() -> (CharacterSpec, CharacterSpec) {
        let pool = generate_pool(2, 11);
        (pool[0].clone(), pool[1].clone())
    }

    fn use_skill(slot: SkillSlot) -> ActionTriple {
        ActionTriple { skill: SkillAction::Use(slot), ..ActionTriple::idle() }
    }

    #[test]
    fn new_match_is_deterministic() {
        let (a, b) = pair();
        let s1 = new_match(a.clone(), b.clone(), 1800, 7).unwrap();
        let s2 = new_match(a, b, 1800, 7).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let (a, b) = pair();
        assert!(matches!(new_match(a, b, 0, 7), Err(GameError::ZeroHorizon)));
    }

    #[test]
    fn mirror_match_spawns_symmetrically() {
        let (a, _) = pair();
        let s = new_match(a.clone(), a, 1800, 7).unwrap();
        let [fa, fb] = &s.fighters;
        assert_eq!(fa.hp, fb.hp);
        assert_eq!(fa.energy, fb.energy);
        assert_eq!(fa.cooldown_remaining, fb.cooldown_remaining);
        assert_eq!(fa.y, fb.y);
        assert!((fa.x - (ARENA_W - fb.x)).abs() < 1e-12);
        assert_eq!(fa.facing, Facing::Right);
        assert_eq!(fb.facing, Facing::Left);
    }

    #[test]
    fn fresh_mask_matches_rules() {
        let (a, b) = pair();
        let s = new_match(a, b, 1800, 7).unwrap();
        let m = s.legal_action_mask(Side::A).unwrap();
        assert_eq!(m.ud, [true, true, true]);
        assert_eq!(m.lr, [true, true, true]);
        assert!(m.skill[0]);
        for slot in [SkillSlot::Punch, SkillSlot::Skill1, SkillSlot::Skill2, SkillSlot::Skill3] {
            assert!(m.skill[slot.index() + 1], "{slot:?} should be legal fresh");
        }
        for slot in [SkillSlot::Subskill1, SkillSlot::Subskill2] {
            assert!(!m.skill[slot.index() + 1], "{slot:?} needs its parent active");
        }
        assert_eq!(m.direction, [true; 8]);
    }

    #[test]
    fn cooldown_masks_the_slot() {
        let (a, b) = pair();
        let mut s = new_match(a, b, 1800, 7).unwrap();
        s.fighters[0].cooldown_remaining[SkillSlot::Skill1.index()] = 10;
        let m = s.legal_action_mask(Side::A).unwrap();
        assert!(!m.skill[SkillSlot::Skill1.index() + 1]);
    }

    #[test]
    fn stun_leaves_only_none_legal() {
        let (a, b) = pair();
        let mut s = new_match(a, b, 1800, 7).unwrap();
        s.fighters[0].stun_remaining = 5;
        let m = s.legal_action_mask(Side::A).unwrap();
        assert_eq!(m.ud, [true, false, false]);
        assert_eq!(m.lr, [true, false, false]);
        assert!(m.skill[0]);
        assert!(m.skill[1..].iter().all(|&x| !x));
    }

    #[test]
    fn terminal_mask_is_an_error() {
        let (a, b) = pair();
        let mut s = new_match(a, b, 1, 7).unwrap();
        s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        assert!(s.is_terminal());
        assert!(matches!(s.legal_action_mask(Side::A), Err(GameError::MatchOver)));
        assert!(matches!(
            s.step(&ActionTriple::idle(), &ActionTriple::idle()),
            Err(GameError::MatchOver)
        ));
    }

    #[test]
    fn idle_step_changes_nothing_but_time() {
        let (a, b) = pair();
        let mut s = new_match(a, b, 1800, 7).unwrap();
        let info = s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        assert_eq!(info.hp_loss, [0.0, 0.0]);
        assert!(!info.terminal);
        assert_eq!(info.outcome, Outcome::Ongoing);
        assert_eq!(s.frame, 1);
    }

    #[test]
    fn illegal_action_is_rejected() {
        let (a, b) = pair();
        let mut s = new_match(a, b, 1800, 7).unwrap();
        s.fighters[0].stun_remaining = 5;
        let err = s.step(&use_skill(SkillSlot::Punch), &ActionTriple::idle());
        assert!(matches!(err, Err(GameError::IllegalAction { side: Side::A, .. })));
    }

    /// Independent rectangle oracle: walk side A into punch range, swing, and
    /// check the damage lands exactly when the boxes first overlap.
    #[test]
    fn punch_lands_when_boxes_overlap() {
        let (a, b) = pair();
        let punch = a.skill(SkillSlot::Punch).clone();
        let mut s = new_match(a.clone(), b.clone(), 1800, 7).unwrap();

        // Close the gap until the oracle says the punch hitbox would overlap.
        let overlap = |s: &GameState| {
            let fa = &s.fighters[0];
            let fb = &s.fighters[1];
            let hit_cx = fa.x + fa.facing.sign() * punch.hitbox.offset_x;
            (hit_cx - fb.x).abs() <= punch.hitbox.half_w + b.hurtbox_half_w
                && (fa.y - fb.y).abs() <= punch.hitbox.half_h + b.hurtbox_half_h
        };
        let walk = ActionTriple { lr: MoveLr::Right, ..ActionTriple::idle() };
        while !overlap(&s) {
            s.step(&walk, &ActionTriple::idle()).unwrap();
        }

        let hp_before = s.fighters[1].hp;
        s.step(&use_skill(SkillSlot::Punch), &ActionTriple::idle()).unwrap();
        // Startup frames pass without damage.
        for _ in 0..punch.startup {
            assert_eq!(s.fighters[1].hp, hp_before);
            s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        }
        assert!((hp_before - s.fighters[1].hp - punch.damage).abs() < 1e-12);
    }

    #[test]
    fn substitute_negates_and_stuns() {
        let (a, b) = pair();
        let punch = a.skill(SkillSlot::Punch).clone();
        let sub = b.skill(SkillSlot::Substitute).clone();
        let mut s = new_match(a, b, 1800, 7).unwrap();
        // Stand in range.
        s.fighters[0].x = 9.0;
        s.fighters[1].x = 9.5;

        s.step(&use_skill(SkillSlot::Punch), &ActionTriple::idle()).unwrap();
        // Wait out the startup, then substitute during the active frames.
        for _ in 0..punch.startup.saturating_sub(1) {
            s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        }
        let hp_before = s.fighters[1].hp;
        let energy_before = s.fighters[1].energy;
        let info = s.step(&ActionTriple::idle(), &use_skill(SkillSlot::Substitute)).unwrap();

        assert!(info.events.iter().any(|e| matches!(e, FrameEvent::Negated { defender: Side::B, .. })));
        assert_eq!(s.fighters[1].hp, hp_before);
        assert!(s.fighters[1].energy < energy_before + 1e-9);
        assert!((energy_before - s.fighters[1].energy) >= sub.energy_cost - s.specs[1].energy_regen - 1e-9);
        assert_eq!(s.fighters[0].stun_remaining, COUNTER_STUN_FRAMES - 1);
        assert!(s.fighters[0].active_skill.is_none());
    }

    #[test]
    fn timeout_goes_to_the_healthier_fighter() {
        let (a, b) = pair();
        let mut s = new_match(a, b, 3, 7).unwrap();
        s.fighters[1].hp = 10.0;
        let mut info = s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        while !info.terminal {
            info = s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        }
        assert_eq!(info.outcome, Outcome::AWins);
        assert_eq!(s.frame, 3);
    }

    #[test]
    fn exact_timeout_tie_is_a_draw() {
        let (a, _) = pair();
        let mut s = new_match(a.clone(), a, 2, 7).unwrap();
        s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        let info = s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        assert_eq!(info.outcome, Outcome::Draw);
    }

    #[test]
    fn scroll_spawns_a_projectile_that_travels() {
        let (a, b) = pair();
        let scroll = a.skill(SkillSlot::Scroll).clone();
        let mut s = new_match(a, b, 1800, 7).unwrap();
        s.step(&use_skill(SkillSlot::Scroll), &ActionTriple::idle()).unwrap();
        for _ in 0..scroll.startup {
            s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        }
        let p = s.fighters[0].projectile.expect("projectile out after startup");
        assert!(p.vx > 0.0);
        let x0 = p.x;
        s.step(&ActionTriple::idle(), &ActionTriple::idle()).unwrap();
        if let Some(p1) = s.fighters[0].projectile {
            assert!(p1.x > x0);
        }
    }

    /// Random legal rollouts: replaying the same seed reproduces the match
    /// bit for bit, masks are sound, hp never increases, matches terminate.
    #[test]
    fn random_rollouts_hold_core_invariants() {
        let pool = generate_pool(4, 5);
        for trial in 0..8u64 {
            let a = pool[(trial as usize) % 4].clone();
            let b = pool[(trial as usize + 1) % 4].clone();
            let horizon = 400;
            let mut s1 = new_match(a.clone(), b.clone(), horizon, trial).unwrap();
            let mut s2 = new_match(a, b, horizon, trial).unwrap();
            let mut rng = crate::rng::derive_rng(99, &[trial]);
            let mut hp = [s1.fighters[0].hp, s1.fighters[1].hp];
            let mut steps = 0;
            while !s1.is_terminal() {
                let acts: Vec<ActionTriple> = [Side::A, Side::B]
                    .iter()
                    .map(|&side| {
                        let m = s1.legal_action_mask(side).unwrap();
                        sample_masked(&m, &mut rng)
                    })
                    .collect();
                let info1 = s1.step(&acts[0], &acts[1]).expect("masked actions are legal");
                s2.step(&acts[0], &acts[1]).unwrap();
                assert!(s1.fighters[0].hp <= hp[0] && s1.fighters[1].hp <= hp[1]);
                hp = [s1.fighters[0].hp, s1.fighters[1].hp];
                steps += 1;
                assert!(steps <= horizon);
                if info1.terminal {
                    break;
                }
            }
            assert_eq!(s1, s2);
            assert!(s1.frame <= horizon);
        }
    }

    fn sample_masked(m: &ActionMasks, rng: &mut impl Rng) -> ActionTriple {
        fn pick(mask: &[bool], rng: &mut impl Rng) -> usize {
            let legal: Vec<usize> =
                mask.iter().enumerate().filter(|(_, &ok)| ok).map(|(i, _)| i).collect();
            legal[rng.gen_range(0..legal.len())]
        }
        ActionTriple {
            ud: [MoveUd::None, MoveUd::Up, MoveUd::Down][pick(&m.ud, rng)],
            lr: [MoveLr::None, MoveLr::Left, MoveLr::Right][pick(&m.lr, rng)],
            skill: SkillAction::from_head_index(pick(&m.skill, rng)).unwrap(),
            direction: Direction(pick(&m.direction, rng) as u8),
        }
    }
}
