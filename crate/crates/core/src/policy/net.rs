//! Network parameters, forward pass, masked heads, and backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoders::{feature_dim, EncoderMode, Observation};
use crate::game::{ActionMasks, ActionTriple, Direction, MoveLr, MoveUd, SkillAction};
use crate::rng::derive_rng;

/// Head order: vertical move, horizontal move, skill, aim direction.
pub const N_HEADS: usize = 4;
pub const HEAD_SIZES: [usize; N_HEADS] = [3, 3, SkillAction::HEAD_SIZE, Direction::HEAD_SIZE];

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("head {head} has no legal entries")]
    AllMasked { head: usize },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("parameter shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut() -> f64) -> Self {
        Self { rows, cols, data: (0..rows * cols).map(|_| f()).collect() }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// y = W x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for c in 0..self.cols {
                acc += row[c] * x[c];
            }
            y[r] = acc;
        }
    }

    /// y = W^T x
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.rows {
            let row = self.row(r);
            let xr = x[r];
            for c in 0..self.cols {
                y[c] += row[c] * xr;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Linear {
    fn zeros(out: usize, inp: usize) -> Self {
        Self { w: Matrix::zeros(out, inp), b: vec![0.0; out] }
    }

    fn init(out: usize, inp: usize, rng: &mut impl Rng) -> Self {
        let std = (2.0 / (out + inp) as f64).sqrt();
        Self { w: Matrix::from_fn(out, inp, || gauss(rng) * std), b: vec![0.0; out] }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.w.matvec(x, y);
        for (v, b) in y.iter_mut().zip(&self.b) {
            *v += b;
        }
    }
}

/// Box-Muller; two uniforms in, one normal out.
fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Network shape; fixed for a parameter set's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub mode: EncoderMode,
    /// Character embedding rows (pool size + 1 for unknown).
    pub char_rows: usize,
    /// Skill embedding rows (pool skills + 1 for unknown/none).
    pub skill_rows: usize,
    pub embed_width: usize,
    pub hidden: usize,
}

impl NetConfig {
    pub fn input_dim(&self) -> usize {
        feature_dim(self.mode, self.embed_width)
    }
}

/// All learnable parameters. The flat layout (see [`PolicyParams::flatten`])
/// is the contract for the optimizer, finite differencing, and checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub cfg: NetConfig,
    pub char_embed: Matrix,
    pub skill_embed: Matrix,
    pub l1: Linear,
    pub l2: Linear,
    pub heads: [Linear; N_HEADS],
    pub value: Linear,
}

impl PolicyParams {
    pub fn init(cfg: NetConfig, seed: u64) -> Self {
        let mut rng = derive_rng(seed, &[0x11e7]);
        let input = cfg.input_dim();
        Self {
            cfg,
            char_embed: Matrix::from_fn(cfg.char_rows, cfg.embed_width, || gauss(&mut rng) * 0.1),
            skill_embed: Matrix::from_fn(cfg.skill_rows, cfg.embed_width, || {
                gauss(&mut rng) * 0.1
            }),
            l1: Linear::init(cfg.hidden, input, &mut rng),
            l2: Linear::init(cfg.hidden, cfg.hidden, &mut rng),
            heads: [
                Linear::init(HEAD_SIZES[0], cfg.hidden, &mut rng),
                Linear::init(HEAD_SIZES[1], cfg.hidden, &mut rng),
                Linear::init(HEAD_SIZES[2], cfg.hidden, &mut rng),
                Linear::init(HEAD_SIZES[3], cfg.hidden, &mut rng),
            ],
            value: Linear::init(1, cfg.hidden, &mut rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let cfg = self.cfg;
        Self {
            cfg,
            char_embed: Matrix::zeros(cfg.char_rows, cfg.embed_width),
            skill_embed: Matrix::zeros(cfg.skill_rows, cfg.embed_width),
            l1: Linear::zeros(cfg.hidden, cfg.input_dim()),
            l2: Linear::zeros(cfg.hidden, cfg.hidden),
            heads: [
                Linear::zeros(HEAD_SIZES[0], cfg.hidden),
                Linear::zeros(HEAD_SIZES[1], cfg.hidden),
                Linear::zeros(HEAD_SIZES[2], cfg.hidden),
                Linear::zeros(HEAD_SIZES[3], cfg.hidden),
            ],
            value: Linear::zeros(1, cfg.hidden),
        }
    }

    /// Tensor views in flat order, with stable names for the checkpoint
    /// manifest.
    pub fn tensors(&self) -> Vec<(&'static str, usize, usize, &[f64])> {
        let mut out = vec![
            ("char_embed", self.char_embed.rows, self.char_embed.cols, &self.char_embed.data[..]),
            (
                "skill_embed",
                self.skill_embed.rows,
                self.skill_embed.cols,
                &self.skill_embed.data[..],
            ),
            ("l1.w", self.l1.w.rows, self.l1.w.cols, &self.l1.w.data[..]),
            ("l1.b", 1, self.l1.b.len(), &self.l1.b[..]),
            ("l2.w", self.l2.w.rows, self.l2.w.cols, &self.l2.w.data[..]),
            ("l2.b", 1, self.l2.b.len(), &self.l2.b[..]),
        ];
        const HEAD_NAMES: [(&str, &str); N_HEADS] = [
            ("head_ud.w", "head_ud.b"),
            ("head_lr.w", "head_lr.b"),
            ("head_skill.w", "head_skill.b"),
            ("head_dir.w", "head_dir.b"),
        ];
        for (h, head) in self.heads.iter().enumerate() {
            out.push((HEAD_NAMES[h].0, head.w.rows, head.w.cols, &head.w.data[..]));
            out.push((HEAD_NAMES[h].1, 1, head.b.len(), &head.b[..]));
        }
        out.push(("value.w", self.value.w.rows, self.value.w.cols, &self.value.w.data[..]));
        out.push(("value.b", 1, self.value.b.len(), &self.value.b[..]));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> =
            vec![&mut self.char_embed.data, &mut self.skill_embed.data];
        out.push(&mut self.l1.w.data);
        out.push(&mut self.l1.b);
        out.push(&mut self.l2.w.data);
        out.push(&mut self.l2.b);
        for head in self.heads.iter_mut() {
            out.push(&mut head.w.data);
            out.push(&mut head.b);
        }
        out.push(&mut self.value.w.data);
        out.push(&mut self.value.b);
        out
    }

    pub fn flat_len(&self) -> usize {
        self.tensors().iter().map(|(_, _, _, d)| d.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for (_, _, _, data) in self.tensors() {
            out.extend_from_slice(data);
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<(), PolicyError> {
        if flat.len() != self.flat_len() {
            return Err(PolicyError::ShapeMismatch { expected: self.flat_len(), got: flat.len() });
        }
        let mut off = 0;
        for dst in self.tensors_mut() {
            dst.copy_from_slice(&flat[off..off + dst.len()]);
            off += dst.len();
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, _, d)| d.iter().all(|v| v.is_finite()))
    }
}

/// Probabilities per head; masked entries are exactly zero.
#[derive(Debug, Clone)]
pub struct HeadDists {
    pub probs: [Vec<f64>; N_HEADS],
}

impl HeadDists {
    pub fn log_prob(&self, head: usize, idx: usize) -> f64 {
        self.probs[head][idx].ln()
    }
}

/// Softmax over the legal entries only; illegal entries get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool], head: usize) -> Result<Vec<f64>, PolicyError> {
    debug_assert_eq!(logits.len(), mask.len());
    let mut max = f64::NEG_INFINITY;
    for (l, &ok) in logits.iter().zip(mask) {
        if ok && *l > max {
            max = *l;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(PolicyError::AllMasked { head });
    }
    let mut probs = vec![0.0; logits.len()];
    let mut z = 0.0;
    for i in 0..logits.len() {
        if mask[i] {
            let e = (logits[i] - max).exp();
            probs[i] = e;
            z += e;
        }
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    Ok(probs)
}

/// Everything the backward pass needs from one forward evaluation.
pub(crate) struct ForwardCache {
    pub input: Vec<f64>,
    /// (table, row, input offset) for each embedding lookup in the input.
    pub embed_slots: Vec<(EmbedTable, usize, usize)>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub probs: [Vec<f64>; N_HEADS],
    pub value: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum EmbedTable {
    Char,
    Skill,
}

pub(crate) fn build_input(
    params: &PolicyParams,
    obs: &Observation,
) -> (Vec<f64>, Vec<(EmbedTable, usize, usize)>) {
    let cfg = &params.cfg;
    let mut input = Vec::with_capacity(cfg.input_dim());
    let mut slots = Vec::new();
    let mut push_id = |input: &mut Vec<f64>,
                       slots: &mut Vec<(EmbedTable, usize, usize)>,
                       id: &crate::encoders::IdFeatures| {
        slots.push((EmbedTable::Char, id.character, input.len()));
        input.extend_from_slice(params.char_embed.row(id.character.min(cfg.char_rows - 1)));
        slots.push((EmbedTable::Skill, id.active_skill, input.len()));
        input.extend_from_slice(params.skill_embed.row(id.active_skill.min(cfg.skill_rows - 1)));
    };
    if let Some(id) = &obs.self_id {
        push_id(&mut input, &mut slots, id);
    }
    if let Some(id) = &obs.opp_id {
        push_id(&mut input, &mut slots, id);
    }
    input.extend_from_slice(&obs.self_attr);
    input.extend_from_slice(&obs.opp_attr);
    input.extend_from_slice(&obs.env);
    (input, slots)
}

pub(crate) fn forward_cached(
    params: &PolicyParams,
    obs: &Observation,
    masks: &ActionMasks,
) -> Result<ForwardCache, PolicyError> {
    let cfg = &params.cfg;
    let (input, embed_slots) = build_input(params, obs);
    debug_assert_eq!(input.len(), cfg.input_dim());

    let mut h1 = vec![0.0; cfg.hidden];
    params.l1.apply(&input, &mut h1);
    h1.iter_mut().for_each(|v| *v = v.tanh());

    let mut h2 = vec![0.0; cfg.hidden];
    params.l2.apply(&h1, &mut h2);
    h2.iter_mut().for_each(|v| *v = v.tanh());

    let mut probs: [Vec<f64>; N_HEADS] = Default::default();
    for h in 0..N_HEADS {
        let mut logits = vec![0.0; HEAD_SIZES[h]];
        params.heads[h].apply(&h2, &mut logits);
        probs[h] = masked_softmax(&logits, masks.head(h), h)?;
    }

    let mut value = [0.0];
    params.value.apply(&h2, &mut value);
    if !value[0].is_finite() {
        return Err(PolicyError::NonFinite { context: "value head".into() });
    }

    Ok(ForwardCache { input, embed_slots, h1, h2, probs, value: value[0] })
}

/// Evaluate the policy: per-head masked distributions plus the state value.
pub fn forward(
    params: &PolicyParams,
    obs: &Observation,
    masks: &ActionMasks,
) -> Result<(HeadDists, f64), PolicyError> {
    let cache = forward_cached(params, obs, masks)?;
    Ok((HeadDists { probs: cache.probs }, cache.value))
}

/// Accumulate parameter gradients for one sample given head-logit and value
/// gradients. `d_logits` must already include the softmax Jacobian.
pub(crate) fn backward_into(
    params: &PolicyParams,
    cache: &ForwardCache,
    d_logits: &[Vec<f64>; N_HEADS],
    d_value: f64,
    grads: &mut PolicyParams,
) {
    let hidden = params.cfg.hidden;
    let mut d_h2 = vec![0.0; hidden];

    let mut scratch = vec![0.0; hidden];
    for h in 0..N_HEADS {
        params.heads[h].w.matvec_t(&d_logits[h], &mut scratch);
        for i in 0..hidden {
            d_h2[i] += scratch[i];
        }
        let g = &mut grads.heads[h];
        for r in 0..HEAD_SIZES[h] {
            let gr = d_logits[h][r];
            if gr == 0.0 {
                continue;
            }
            let row = g.w.row_mut(r);
            for c in 0..hidden {
                row[c] += gr * cache.h2[c];
            }
            g.b[r] += gr;
        }
    }
    for i in 0..hidden {
        d_h2[i] += params.value.w.data[i] * d_value;
    }
    {
        let row = grads.value.w.row_mut(0);
        for c in 0..hidden {
            row[c] += d_value * cache.h2[c];
        }
        grads.value.b[0] += d_value;
    }

    // Through the second tanh layer.
    let mut d_h2_pre = d_h2;
    for i in 0..hidden {
        d_h2_pre[i] *= 1.0 - cache.h2[i] * cache.h2[i];
    }
    let mut d_h1 = vec![0.0; hidden];
    params.l2.w.matvec_t(&d_h2_pre, &mut d_h1);
    for r in 0..hidden {
        let gr = d_h2_pre[r];
        let row = grads.l2.w.row_mut(r);
        for c in 0..hidden {
            row[c] += gr * cache.h1[c];
        }
        grads.l2.b[r] += gr;
    }

    // Through the first tanh layer.
    let mut d_h1_pre = d_h1;
    for i in 0..hidden {
        d_h1_pre[i] *= 1.0 - cache.h1[i] * cache.h1[i];
    }
    let input_dim = params.cfg.input_dim();
    let mut d_input = vec![0.0; input_dim];
    params.l1.w.matvec_t(&d_h1_pre, &mut d_input);
    for r in 0..hidden {
        let gr = d_h1_pre[r];
        let row = grads.l1.w.row_mut(r);
        for c in 0..input_dim {
            row[c] += gr * cache.input[c];
        }
        grads.l1.b[r] += gr;
    }

    // Embedding rows that fed the input.
    let e = params.cfg.embed_width;
    for &(table, row, off) in &cache.embed_slots {
        let dst = match table {
            EmbedTable::Char => grads.char_embed.row_mut(row.min(params.cfg.char_rows - 1)),
            EmbedTable::Skill => grads.skill_embed.row_mut(row.min(params.cfg.skill_rows - 1)),
        };
        for k in 0..e {
            dst[k] += d_input[off + k];
        }
    }
}

/// Sample one action from masked head distributions.
///
/// Returns the action, its per-head log-probabilities, and head indices.
pub fn sample_action(
    dists: &HeadDists,
    rng: &mut impl Rng,
) -> (ActionTriple, [f64; N_HEADS], [usize; N_HEADS]) {
    let mut idx = [0usize; N_HEADS];
    let mut logp = [0.0f64; N_HEADS];
    for h in 0..N_HEADS {
        let probs = &dists.probs[h];
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut acc = 0.0;
        let mut chosen = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        // Guard against u landing in the tail of rounded-off mass.
        if probs[chosen] == 0.0 {
            chosen = probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, _)| i)
                .next_back()
                .expect("masked_softmax guarantees a legal entry");
        }
        idx[h] = chosen;
        logp[h] = probs[chosen].ln();
    }
    (action_from_indices(idx), logp, idx)
}

pub fn action_from_indices(idx: [usize; N_HEADS]) -> ActionTriple {
    ActionTriple {
        ud: [MoveUd::None, MoveUd::Up, MoveUd::Down][idx[0]],
        lr: [MoveLr::None, MoveLr::Left, MoveLr::Right][idx[1]],
        skill: SkillAction::from_head_index(idx[2]).expect("skill head index in range"),
        direction: Direction(idx[3] as u8),
    }
}

pub fn action_indices(action: &ActionTriple) -> [usize; N_HEADS] {
    [
        action.ud as usize,
        action.lr as usize,
        action.skill.head_index(),
        action.direction.0 as usize % Direction::HEAD_SIZE,
    ]
}
