//! Advantage estimation over rollout fragments.

use super::trajectory::Trajectory;

/// Exponentially weighted advantage estimates and value targets.
///
/// `A_t = sum_k (gamma*lam)^k delta_{t+k}` with
/// `delta_t = r_t + gamma*V(s_{t+1}) - V(s_t)`, truncated at terminals (the
/// value past a terminal is 0). The bootstrap value stands in for
/// `V(s_{t+1})` after the last step of an unfinished fragment. Returns are
/// `advantages + values`.
pub fn gae(traj: &Trajectory, gamma: f64, lam: f64) -> (Vec<f64>, Vec<f64>) {
    let n = traj.len();
    let mut advantages = vec![0.0; n];
    let mut acc = 0.0;
    let mut next_value = traj.bootstrap_value;
    for t in (0..n).rev() {
        let live = if traj.terminals[t] { 0.0 } else { 1.0 };
        let delta = traj.rewards[t] + gamma * next_value * live - traj.values[t];
        acc = delta + gamma * lam * live * acc;
        advantages[t] = acc;
        next_value = traj.values[t];
    }
    let returns = advantages.iter().zip(&traj.values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}
