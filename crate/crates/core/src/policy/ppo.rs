//! Clipped-surrogate policy loss with hand-derived gradients.

use crate::encoders::Observation;
use crate::game::ActionMasks;

use super::net::{backward_into, forward_cached, PolicyError, PolicyParams, N_HEADS};
use super::{Adam, LearnerConfig};

/// One learner sample: everything needed to re-evaluate the policy on a
/// visited state and form the importance ratio against the behavior policy.
#[derive(Debug, Clone)]
pub struct Sample {
    pub obs: Observation,
    pub masks: ActionMasks,
    pub action: [usize; N_HEADS],
    pub old_logp: [f64; N_HEADS],
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Evaluate the full objective on a batch and accumulate parameter
/// gradients.
///
/// The loss is
/// `-E[min(rho*A, clip(rho, 1-eps, 1+eps)*A)] + c_v*E[(G - V)^2] - beta*E[H]`
/// where `rho` is the product over the four heads of per-head probability
/// ratios (the joint log-probability is the sum of per-head ones) and `H` is
/// the summed entropy of the masked head distributions. Advantages are
/// optionally normalized to zero mean and unit variance across the batch.
pub fn ppo_loss(
    params: &PolicyParams,
    batch: &[Sample],
    cfg: &LearnerConfig,
) -> Result<(LossStats, PolicyParams), PolicyError> {
    assert!(!batch.is_empty(), "empty learner batch");
    let n = batch.len() as f64;
    let mut grads = params.zeros_like();
    let mut stats = LossStats::default();

    let advantages: Vec<f64> = if cfg.normalize_advantages && batch.len() > 1 {
        let mean = batch.iter().map(|s| s.advantage).sum::<f64>() / n;
        let var = batch.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt().max(1e-8);
        batch.iter().map(|s| (s.advantage - mean) / std).collect()
    } else {
        batch.iter().map(|s| s.advantage).collect()
    };

    let mut clipped = 0usize;
    for (sample, &adv) in batch.iter().zip(&advantages) {
        let cache = forward_cached(params, &sample.obs, &sample.masks)?;

        let mut new_jlp = 0.0;
        let mut old_jlp = 0.0;
        for h in 0..N_HEADS {
            let p = cache.probs[h][sample.action[h]];
            if p <= 0.0 {
                return Err(PolicyError::NonFinite {
                    context: format!("zero probability for taken action in head {h}"),
                });
            }
            new_jlp += p.ln();
            old_jlp += sample.old_logp[h];
        }
        let ratio = (new_jlp - old_jlp).exp();
        if !ratio.is_finite() {
            return Err(PolicyError::NonFinite {
                context: format!("importance ratio (new {new_jlp:.3}, old {old_jlp:.3})"),
            });
        }

        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        let (policy_term, d_ratio) =
            if surr1 <= surr2 { (surr1, adv) } else { (surr2, 0.0) };
        if surr1 > surr2 {
            clipped += 1;
        }
        stats.policy += -policy_term / n;
        // d(-policy)/d(joint logp) via d(ratio)/d(jlp) = ratio.
        let d_jlp = -d_ratio * ratio / n;

        let value_err = cache.value - sample.ret;
        stats.value += cfg.value_coef * value_err * value_err / n;
        let d_value = cfg.value_coef * 2.0 * value_err / n;

        let mut d_logits: [Vec<f64>; N_HEADS] = Default::default();
        for h in 0..N_HEADS {
            let probs = &cache.probs[h];
            let mut entropy = 0.0;
            for &p in probs.iter() {
                if p > 0.0 {
                    entropy -= p * p.ln();
                }
            }
            stats.entropy += entropy / n;

            let mut dl = vec![0.0; probs.len()];
            for (i, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    // Policy term: d logp(a)/d logit_i = delta - p.
                    let delta = if i == sample.action[h] { 1.0 } else { 0.0 };
                    dl[i] += d_jlp * (delta - p);
                    // Entropy bonus: loss has -beta*H, dH/dl = -p*(ln p + H).
                    dl[i] += cfg.entropy_coef / n * p * (p.ln() + entropy);
                }
            }
            d_logits[h] = dl;
        }

        backward_into(params, &cache, &d_logits, d_value, &mut grads);
    }

    stats.clip_fraction = clipped as f64 / n;
    stats.total = stats.policy + stats.value - cfg.entropy_coef * stats.entropy;
    if !stats.total.is_finite() {
        return Err(PolicyError::NonFinite {
            context: format!(
                "total loss (policy {:.4}, value {:.4}, entropy {:.4}, batch {})",
                stats.policy,
                stats.value,
                stats.entropy,
                batch.len()
            ),
        });
    }
    if !grads.all_finite() {
        return Err(PolicyError::NonFinite { context: "gradients".into() });
    }
    Ok((stats, grads))
}

/// Run `epochs_per_batch` full-batch gradient steps on collected samples.
pub fn train_on_samples(
    params: &mut PolicyParams,
    opt: &mut Adam,
    samples: &[Sample],
    cfg: &LearnerConfig,
) -> Result<LossStats, PolicyError> {
    let mut last = LossStats::default();
    for _ in 0..cfg.epochs_per_batch {
        let (stats, grads) = ppo_loss(params, samples, cfg)?;
        opt.step(params, &grads, cfg.learning_rate)?;
        last = stats;
    }
    Ok(last)
}
