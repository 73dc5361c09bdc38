//! Multi-head policy/value network and its optimizer.
//!
//! The network is a small fully connected trunk over the encoded observation
//! (embedding lookups for identity indices, dense attributes passed through)
//! with four masked softmax action heads and a scalar value head. Everything
//! is plain `f64` with hand-written backpropagation, which keeps the learner
//! deterministic and lets the gradient tests compare against central finite
//! differences directly.

mod adam;
mod gae;
mod net;
mod ppo;
mod trajectory;

pub use adam::Adam;
pub use gae::gae;
pub use net::{
    action_from_indices, action_indices, forward, masked_softmax, sample_action, HeadDists,
    Linear, Matrix, NetConfig, PolicyError, PolicyParams, HEAD_SIZES, N_HEADS,
};
pub use ppo::{ppo_loss, train_on_samples, LossStats, Sample};
pub use trajectory::Trajectory;

use serde::{Deserialize, Serialize};

/// Optimizer and objective hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Advantage-estimation decay.
    pub lam: f64,
    /// Policy ratio clip radius.
    pub clip: f64,
    /// Entropy bonus coefficient (entropy is subtracted from the loss).
    pub entropy_coef: f64,
    /// Value-error coefficient.
    pub value_coef: f64,
    pub learning_rate: f64,
    /// Rollout fragment length per environment.
    pub n_steps: usize,
    /// Samples collected per learner update.
    pub batch_size: usize,
    /// Full-batch gradient steps per collected batch.
    pub epochs_per_batch: usize,
    /// Normalize advantages to zero mean / unit variance per batch.
    pub normalize_advantages: bool,
    /// Trunk width.
    pub hidden: usize,
    /// Embedding vector width for identity features.
    pub embed_width: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.995,
            lam: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 2e-4,
            n_steps: 100,
            batch_size: 1024,
            epochs_per_batch: 2,
            normalize_advantages: true,
            hidden: 128,
            embed_width: 8,
        }
    }
}

impl LearnerConfig {
    /// The large-scale profile: identical except for the update batch size.
    pub fn paper_profile() -> Self {
        Self { batch_size: 5120, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("learner.gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(self.lam > 0.0 && self.lam <= 1.0) {
            return Err(format!("learner.lam must be in (0, 1], got {}", self.lam));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(format!("learner.clip must be in (0, 1), got {}", self.clip));
        }
        if self.entropy_coef < 0.0 {
            return Err(format!("learner.entropy_coef must be >= 0, got {}", self.entropy_coef));
        }
        if self.learning_rate <= 0.0 {
            return Err(format!("learner.learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.n_steps == 0 || self.batch_size == 0 || self.epochs_per_batch == 0 {
            return Err("learner.n_steps, batch_size, epochs_per_batch must be positive".into());
        }
        if self.hidden == 0 || self.embed_width == 0 {
            return Err("learner.hidden and embed_width must be positive".into());
        }
        Ok(())
    }
}
