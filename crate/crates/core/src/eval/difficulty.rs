//! Difficulty tiers: prediction delay and execution probability.
//!
//! A wrapped policy is only queried every `delay_frames` frames (idling in
//! between) and each predicted non-idle action is executed with probability
//! `exec_prob`, otherwise replaced by all-none. Lower delay and higher
//! execution probability make a stronger tier.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::ActionPolicy;
use crate::game::{ActionMasks, ActionTriple, GameState, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyConfig {
    /// Query the policy every k-th frame (k >= 1).
    pub delay_frames: u32,
    /// Probability a predicted action is executed rather than dropped.
    pub exec_prob: f64,
}

impl DifficultyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.delay_frames == 0 {
            return Err("difficulty.delay_frames must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.exec_prob) {
            return Err(format!("difficulty.exec_prob must be in [0, 1], got {}", self.exec_prob));
        }
        Ok(())
    }

    pub fn beginner() -> Self {
        Self { delay_frames: 12, exec_prob: 0.5 }
    }

    pub fn intermediate() -> Self {
        Self { delay_frames: 6, exec_prob: 0.75 }
    }

    pub fn advanced() -> Self {
        Self { delay_frames: 2, exec_prob: 0.95 }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "beginner" => Some(Self::beginner()),
            "intermediate" => Some(Self::intermediate()),
            "advanced" => Some(Self::advanced()),
            _ => None,
        }
    }
}

/// Applies a difficulty tier to any inner policy.
pub struct DifficultyWrapper<P> {
    pub inner: P,
    pub cfg: DifficultyConfig,
    /// Policy queries made so far (for tests and diagnostics).
    pub queries: u64,
}

impl<P> DifficultyWrapper<P> {
    pub fn new(inner: P, cfg: DifficultyConfig) -> Self {
        Self { inner, cfg, queries: 0 }
    }
}

impl<P: ActionPolicy> ActionPolicy for DifficultyWrapper<P> {
    fn act(
        &mut self,
        state: &GameState,
        side: Side,
        masks: &ActionMasks,
        rng: &mut ChaCha8Rng,
    ) -> ActionTriple {
        if state.frame % self.cfg.delay_frames != 0 {
            return ActionTriple::idle();
        }
        self.queries += 1;
        let predicted = self.inner.act(state, side, masks, rng);
        if predicted == ActionTriple::idle() {
            return predicted;
        }
        if rng.gen_range(0.0..1.0) < self.cfg.exec_prob {
            predicted
        } else {
            ActionTriple::idle()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::ScriptedAggressive;
    use crate::game::{new_match, pool::generate_pool};
    use crate::rng::derive_rng;

    fn run_frames(cfg: DifficultyConfig, frames: u32) -> (u64, u32) {
        let pool = generate_pool(2, 3);
        let mut s = new_match(pool[0].clone(), pool[1].clone(), frames + 1, 1).unwrap();
        let mut rng = derive_rng(4, &[0]);
        let mut wrapped = DifficultyWrapper::new(ScriptedAggressive::default(), cfg);
        let mut non_idle = 0u32;
        for _ in 0..frames {
            let m = s.legal_action_mask(Side::A).unwrap();
            let a = wrapped.act(&s, Side::A, &m, &mut rng);
            if a != ActionTriple::idle() {
                non_idle += 1;
            }
            s.step(&a, &ActionTriple::idle()).unwrap();
            if s.is_terminal() {
                break;
            }
        }
        (wrapped.queries, non_idle)
    }

    #[test]
    fn zero_exec_prob_is_all_idle() {
        let (_, non_idle) = run_frames(DifficultyConfig { delay_frames: 1, exec_prob: 0.0 }, 120);
        assert_eq!(non_idle, 0);
    }

    #[test]
    fn no_delay_full_exec_is_identity() {
        let pool = generate_pool(2, 3);
        let cfg = DifficultyConfig { delay_frames: 1, exec_prob: 1.0 };
        let mut s1 = new_match(pool[0].clone(), pool[1].clone(), 200, 1).unwrap();
        let mut s2 = new_match(pool[0].clone(), pool[1].clone(), 200, 1).unwrap();
        let mut rng1 = derive_rng(5, &[0]);
        let mut rng2 = derive_rng(5, &[0]);
        let mut plain = ScriptedAggressive::default();
        let mut wrapped = DifficultyWrapper::new(ScriptedAggressive::default(), cfg);
        for _ in 0..150 {
            let m1 = s1.legal_action_mask(Side::A).unwrap();
            let m2 = s2.legal_action_mask(Side::A).unwrap();
            let a1 = plain.act(&s1, Side::A, &m1, &mut rng1);
            let a2 = wrapped.act(&s2, Side::A, &m2, &mut rng2);
            assert_eq!(a1, a2);
            s1.step(&a1, &ActionTriple::idle()).unwrap();
            s2.step(&a2, &ActionTriple::idle()).unwrap();
            if s1.is_terminal() {
                break;
            }
        }
    }

    #[test]
    fn query_count_follows_the_delay() {
        let (queries, _) = run_frames(DifficultyConfig { delay_frames: 4, exec_prob: 1.0 }, 100);
        assert_eq!(queries, 25);
    }
}
