//! Base and style-shaped rewards.
//!
//! The per-frame base reward is the sum of the agent's own HP change and the
//! opponent's HP loss, each normalized by that side's maximum HP so the two
//! sides' rewards are exact negations of each other. The final frame of a
//! match scales the HP term by a factor of 7 to weight the outcome.
//!
//! Style rewards reweight the two HP terms and add a per-frame time penalty,
//! producing cautious, balanced, or aggressive play preferences.

use serde::{Deserialize, Serialize};

/// Terminal-frame multiplier on the HP reward term.
pub const TERMINAL_REWARD_FACTOR: f64 = 7.0;

/// Base zero-sum reward for the "self" side.
///
/// `hp_*` tuples are `(self, opponent)`. Each side's HP delta is normalized
/// by that side's `max_hp`, which keeps the reward in a bounded range and
/// makes `base_reward` for one side exactly the negation of the other's.
pub fn base_reward(
    hp_before: (f64, f64),
    hp_after: (f64, f64),
    max_hp: (f64, f64),
    terminal: bool,
) -> f64 {
    let self_delta = (hp_after.0 - hp_before.0) / max_hp.0;
    let opp_delta = (hp_before.1 - hp_after.1) / max_hp.1;
    let r_hp = self_delta + opp_delta;
    if terminal {
        TERMINAL_REWARD_FACTOR * r_hp
    } else {
        r_hp
    }
}

/// Player archetypes the reward shaping targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Balanced,
    Cautious,
    Aggressive,
}

/// Weights for a style-shaped reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleReward {
    pub style: Style,
    /// Weight on the agent's own HP loss.
    pub w_self: f64,
    /// Weight on the opponent's HP loss.
    pub w_opp: f64,
    /// Reward per frame, zero or negative.
    pub time_penalty: f64,
}

impl StyleReward {
    /// Equal weights and no time pressure; identical to [`base_reward`].
    pub fn balanced() -> Self {
        Self { style: Style::Balanced, w_self: 1.0, w_opp: 1.0, time_penalty: 0.0 }
    }

    /// Values own HP three times as much as the opponent's.
    pub fn cautious() -> Self {
        Self { style: Style::Cautious, w_self: 1.5, w_opp: 0.5, time_penalty: 0.0 }
    }

    /// Values damage output and dislikes long matches.
    pub fn aggressive() -> Self {
        Self { style: Style::Aggressive, w_self: 0.5, w_opp: 1.5, time_penalty: -0.0005 }
    }

    pub fn preset(style: Style) -> Self {
        match style {
            Style::Balanced => Self::balanced(),
            Style::Cautious => Self::cautious(),
            Style::Aggressive => Self::aggressive(),
        }
    }
}

/// Style-shaped reward for the "self" side from per-frame HP losses.
///
/// `self_loss` and `opp_loss` are non-negative HP losses this frame. The HP
/// term scales by the terminal factor on the last frame, the time penalty
/// does not.
pub fn style_reward(
    self_loss: f64,
    opp_loss: f64,
    max_hp: (f64, f64),
    terminal: bool,
    style: &StyleReward,
) -> f64 {
    let hp_term = style.w_opp * opp_loss / max_hp.1 - style.w_self * self_loss / max_hp.0;
    let factor = if terminal { TERMINAL_REWARD_FACTOR } else { 1.0 };
    factor * hp_term + style.time_penalty
}
