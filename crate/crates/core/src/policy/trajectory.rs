//! Rollout fragments consumed by the learner.

use crate::encoders::Observation;
use crate::game::ActionMasks;

use super::net::N_HEADS;

/// One environment's rollout fragment: parallel per-step arrays plus the
/// bootstrap value for the state after the last step.
///
/// Invariants: all arrays have equal length (at most the configured fragment
/// length), and the terminal flag is true at most once, at the end.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub observations: Vec<Observation>,
    pub masks: Vec<ActionMasks>,
    pub actions: Vec<[usize; N_HEADS]>,
    pub old_logp: Vec<[f64; N_HEADS]>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub terminals: Vec<bool>,
    /// Value estimate of the state following the last step; ignored when the
    /// fragment ended at a terminal.
    pub bootstrap_value: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        obs: Observation,
        masks: ActionMasks,
        action: [usize; N_HEADS],
        old_logp: [f64; N_HEADS],
        reward: f64,
        value: f64,
        terminal: bool,
    ) {
        self.observations.push(obs);
        self.masks.push(masks);
        self.actions.push(action);
        self.old_logp.push(old_logp);
        self.rewards.push(reward);
        self.values.push(value);
        self.terminals.push(terminal);
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.len();
        if self.observations.len() != n
            || self.masks.len() != n
            || self.actions.len() != n
            || self.old_logp.len() != n
            || self.values.len() != n
            || self.terminals.len() != n
        {
            return Err("trajectory arrays have unequal lengths".into());
        }
        let terminal_count = self.terminals.iter().filter(|&&t| t).count();
        if terminal_count > 1 || (terminal_count == 1 && !self.terminals[n - 1]) {
            return Err("terminal flag must appear at most once, at the end".into());
        }
        Ok(())
    }

    pub fn ended_terminal(&self) -> bool {
        self.terminals.last().copied().unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_catches_mid_terminal() {
        let mut t = Trajectory::default();
        t.rewards = vec![0.0, 0.0];
        t.values = vec![0.0, 0.0];
        t.terminals = vec![true, false];
        t.observations = vec![];
        // Unequal lengths are caught first.
        assert!(t.validate().is_err());
    }
}
