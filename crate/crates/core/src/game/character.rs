//! Static fighter definitions: the unit of the character pool.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strength tier assigned to a character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    S,
    A,
    B,
    C,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::S, Level::A, Level::B, Level::C];

    pub fn as_str(&self) -> &'static str {
        match self {
            Level::S => "S",
            Level::A => "A",
            Level::B => "B",
            Level::C => "C",
        }
    }
}

/// The nine skill slots every character carries, in fixed order.
///
/// The skill action head has ten entries: "none" plus these nine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkillSlot {
    Punch,
    Skill1,
    Skill2,
    Skill3,
    Substitute,
    Summon,
    Scroll,
    Subskill1,
    Subskill2,
}

pub const SKILL_SLOTS: [SkillSlot; 9] = [
    SkillSlot::Punch,
    SkillSlot::Skill1,
    SkillSlot::Skill2,
    SkillSlot::Skill3,
    SkillSlot::Substitute,
    SkillSlot::Summon,
    SkillSlot::Scroll,
    SkillSlot::Subskill1,
    SkillSlot::Subskill2,
];

impl SkillSlot {
    pub fn index(self) -> usize {
        self as usize
    }

    /// Parent slot that must be active for a follow-up skill to be legal.
    pub fn parent(self) -> Option<SkillSlot> {
        match self {
            SkillSlot::Subskill1 => Some(SkillSlot::Skill1),
            SkillSlot::Subskill2 => Some(SkillSlot::Skill2),
            _ => None,
        }
    }

    /// Slots that can deal damage directly or via a projectile.
    pub fn is_offensive(self) -> bool {
        !matches!(self, SkillSlot::Substitute | SkillSlot::Summon)
    }
}

/// Axis-aligned rectangle, stored as a center offset plus half extents.
///
/// For hitboxes the offset is relative to the fighter position and is
/// mirrored by facing (or rotated by the chosen direction for aimed skills).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectSpec {
    pub offset_x: f64,
    pub offset_y: f64,
    pub half_w: f64,
    pub half_h: f64,
}

impl RectSpec {
    pub fn new(offset_x: f64, offset_y: f64, half_w: f64, half_h: f64) -> Self {
        Self { offset_x, offset_y, half_w, half_h }
    }
}

/// One skill's frame data and effect numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillSpec {
    /// Globally unique id; referenced by ID-aware encoders.
    pub skill_id: u32,
    pub damage: f64,
    /// Frames from use until the slot can be used again.
    pub cooldown: u32,
    /// Frames between activation and the hitbox coming out.
    pub startup: u32,
    /// Frames the hitbox stays out.
    pub active: u32,
    pub hitbox: RectSpec,
    pub energy_cost: f64,
    /// True for skills aimed with the direction head.
    pub needs_direction: bool,
    /// True for the substitute slot.
    pub is_defensive: bool,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("character {char_id}: {field} must be positive")]
    NonPositive { char_id: u32, field: &'static str },
    #[error("character {char_id}: expected {expected} skills in fixed slot order, got {got}")]
    SkillCount { char_id: u32, expected: usize, got: usize },
    #[error("character {char_id} skill {skill_id}: {reason}")]
    BadSkill { char_id: u32, skill_id: u32, reason: &'static str },
}

/// Static definition of a fighter; the unit of the character pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterSpec {
    pub char_id: u32,
    pub level: Level,
    pub max_hp: f64,
    /// Arena units per frame.
    pub move_speed: f64,
    /// Exactly nine entries in [`SKILL_SLOTS`] order.
    pub skills: Vec<SkillSpec>,
    /// Vulnerable rectangle centered on the fighter position (half extents).
    pub hurtbox_half_w: f64,
    pub hurtbox_half_h: f64,
    pub max_energy: f64,
    /// Energy points regenerated per frame.
    pub energy_regen: f64,
}

impl CharacterSpec {
    pub fn skill(&self, slot: SkillSlot) -> &SkillSpec {
        &self.skills[slot.index()]
    }

    /// Slot with the highest damage number; used by the behavior scorer.
    pub fn highest_damage_slot(&self) -> SkillSlot {
        let mut best = SkillSlot::Punch;
        let mut best_damage = f64::NEG_INFINITY;
        for slot in SKILL_SLOTS {
            let d = self.skill(slot).damage;
            if d > best_damage {
                best_damage = d;
                best = slot;
            }
        }
        best
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.max_hp > 0.0) {
            return Err(SpecError::NonPositive { char_id: self.char_id, field: "max_hp" });
        }
        if !(self.move_speed > 0.0) {
            return Err(SpecError::NonPositive { char_id: self.char_id, field: "move_speed" });
        }
        if !(self.max_energy > 0.0) {
            return Err(SpecError::NonPositive { char_id: self.char_id, field: "max_energy" });
        }
        if self.skills.len() != SKILL_SLOTS.len() {
            return Err(SpecError::SkillCount {
                char_id: self.char_id,
                expected: SKILL_SLOTS.len(),
                got: self.skills.len(),
            });
        }
        for skill in &self.skills {
            if skill.damage < 0.0 {
                return Err(SpecError::BadSkill {
                    char_id: self.char_id,
                    skill_id: skill.skill_id,
                    reason: "damage must be non-negative",
                });
            }
            if skill.cooldown < skill.startup {
                return Err(SpecError::BadSkill {
                    char_id: self.char_id,
                    skill_id: skill.skill_id,
                    reason: "cooldown must be at least the startup",
                });
            }
            if skill.energy_cost < 0.0 {
                return Err(SpecError::BadSkill {
                    char_id: self.char_id,
                    skill_id: skill.skill_id,
                    reason: "energy cost must be non-negative",
                });
            }
        }
        Ok(())
    }
}
