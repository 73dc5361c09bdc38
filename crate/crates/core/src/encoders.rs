//! Heterogeneous observation encodings.
//!
//! Three encoder modes build the policy input from match state, differing in
//! how much identity information they keep:
//!
//! * `Fis` (full ID state) — embedding indices for both fighters' character
//!   and active-skill ids, plus numeric attributes.
//! * `Qs` (quantitative state) — identity for self only; the opponent is
//!   described purely by numeric attributes.
//! * `Fqs` (full quantitative state) — no identity at all.
//!
//! All numeric attributes are dimensionless fractions in [0, 1] or [-1, 1],
//! normalized by the owning character's own maxima so they carry no identity.
//! The field ordering below is schema version 1 and is append-only: logged
//! observations re-encode bit-exactly for a fixed schema version.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::game::{
    CharacterSpec, GameState, Side, ARENA_H, ARENA_W, BUFF_FRAMES, COUNTER_STUN_FRAMES,
};

/// Encoding schema version; bump when the feature layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Shared per-fighter attribute block length (used for self and opponent).
pub const CORE_ATTR_LEN: usize = 18;
/// Opponent block: core attributes plus box geometry and active-frame timing.
pub const OPP_EXTRA_LEN: usize = 5;
pub const SELF_ATTR_LEN: usize = CORE_ATTR_LEN;
pub const OPP_ATTR_LEN: usize = CORE_ATTR_LEN + OPP_EXTRA_LEN;
/// Environment block: relative geometry, hp difference, clock, projectiles.
pub const ENV_LEN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EncoderMode {
    Fis,
    Qs,
    Fqs,
}

impl EncoderMode {
    pub fn uses_self_id(self) -> bool {
        !matches!(self, EncoderMode::Fqs)
    }

    pub fn uses_opp_id(self) -> bool {
        matches!(self, EncoderMode::Fis)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderMode::Fis => "FIS",
            EncoderMode::Qs => "QS",
            EncoderMode::Fqs => "FQS",
        }
    }
}

/// Embedding indices for one fighter. Index 0 is reserved for
/// unknown/none in both tables, so out-of-pool characters encode without
/// erroring and "no active skill" has a stable slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdFeatures {
    pub character: usize,
    pub active_skill: usize,
}

/// Index tables mapping pool ids to embedding rows.
///
/// Table sizes are pool size + 1: row 0 is the reserved unknown index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdTables {
    char_index: BTreeMap<u32, usize>,
    skill_index: BTreeMap<u32, usize>,
}

impl IdTables {
    pub fn from_pool(pool: &[CharacterSpec]) -> Self {
        let mut char_index = BTreeMap::new();
        let mut skill_index = BTreeMap::new();
        for spec in pool {
            let next = char_index.len() + 1;
            char_index.entry(spec.char_id).or_insert(next);
            for skill in &spec.skills {
                let next = skill_index.len() + 1;
                skill_index.entry(skill.skill_id).or_insert(next);
            }
        }
        Self { char_index, skill_index }
    }

    /// Rows in the character embedding table (pool + unknown).
    pub fn char_rows(&self) -> usize {
        self.char_index.len() + 1
    }

    /// Rows in the skill embedding table (pool skills + unknown/none).
    pub fn skill_rows(&self) -> usize {
        self.skill_index.len() + 1
    }

    pub fn char_idx(&self, char_id: u32) -> usize {
        self.char_index.get(&char_id).copied().unwrap_or(0)
    }

    pub fn skill_idx(&self, skill_id: u32) -> usize {
        self.skill_index.get(&skill_id).copied().unwrap_or(0)
    }
}

/// Mode-dependent observation: identity indices where the mode permits,
/// numeric attribute blocks always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub self_id: Option<IdFeatures>,
    pub self_attr: Vec<f64>,
    pub opp_id: Option<IdFeatures>,
    pub opp_attr: Vec<f64>,
    pub env: Vec<f64>,
}

fn core_attrs(state: &GameState, side: Side, out: &mut Vec<f64>) {
    let f = state.fighter(side);
    let spec = state.spec(side);
    out.push(f.hp / spec.max_hp);
    out.push(f.energy / spec.max_energy);
    for (i, &cd) in f.cooldown_remaining.iter().enumerate() {
        let max_cd = spec.skills[i].cooldown.max(1) as f64;
        out.push(cd as f64 / max_cd);
    }
    out.push(f.x / ARENA_W);
    out.push(f.y / ARENA_H);
    out.push((f.stun_remaining as f64 / COUNTER_STUN_FRAMES as f64).min(1.0));
    match f.active_skill {
        Some(ask) => {
            let s = spec.skill(ask.slot);
            let total = (s.startup + s.active).max(1) as f64;
            out.push(1.0);
            out.push(ask.frames_elapsed as f64 / total);
        }
        None => {
            out.push(0.0);
            out.push(0.0);
        }
    }
    out.push(f.facing.sign());
    out.push(f.buff_remaining as f64 / BUFF_FRAMES as f64);
}

fn opp_extra_attrs(state: &GameState, side: Side, out: &mut Vec<f64>) {
    let f = state.fighter(side);
    let spec = state.spec(side);
    out.push(spec.hurtbox_half_w * 2.0 / ARENA_W);
    out.push(spec.hurtbox_half_h * 2.0 / ARENA_H);
    match f.active_skill {
        Some(ask) => {
            let s = spec.skill(ask.slot);
            out.push(s.hitbox.half_w * 2.0 / ARENA_W);
            out.push(s.hitbox.half_h * 2.0 / ARENA_H);
            let remaining = if ask.frames_elapsed >= s.startup {
                (s.startup + s.active).saturating_sub(ask.frames_elapsed)
            } else {
                0
            };
            out.push(remaining as f64 / s.active.max(1) as f64);
        }
        None => {
            out.push(0.0);
            out.push(0.0);
            out.push(0.0);
        }
    }
}

fn env_attrs(state: &GameState, side: Side, out: &mut Vec<f64>) {
    let me = state.fighter(side);
    let opp = state.fighter(side.other());
    out.push((opp.x - me.x) / ARENA_W);
    out.push((opp.y - me.y) / ARENA_H);
    out.push(me.facing.sign() * opp.facing.sign());
    out.push(me.hp / state.spec(side).max_hp - opp.hp / state.spec(side.other()).max_hp);
    out.push(1.0 - state.frame as f64 / state.horizon as f64);
    match opp.projectile {
        Some(p) => {
            out.push(1.0);
            out.push((p.x - me.x) / ARENA_W);
            out.push((p.y - me.y) / ARENA_H);
        }
        None => {
            out.push(0.0);
            out.push(0.0);
            out.push(0.0);
        }
    }
    out.push(if me.projectile.is_some() { 1.0 } else { 0.0 });
}

fn id_features(state: &GameState, side: Side, tables: &IdTables) -> IdFeatures {
    let f = state.fighter(side);
    let spec = state.spec(side);
    let active_skill = match f.active_skill {
        Some(ask) => tables.skill_idx(spec.skill(ask.slot).skill_id),
        None => 0,
    };
    IdFeatures { character: tables.char_idx(spec.char_id), active_skill }
}

/// Encode the match state from `side`'s point of view.
///
/// Deterministic; attribute blocks are identity-free functions of numeric
/// state, and identity indices appear only where the mode permits.
pub fn encode(state: &GameState, side: Side, mode: EncoderMode, tables: &IdTables) -> Observation {
    let mut self_attr = Vec::with_capacity(SELF_ATTR_LEN);
    core_attrs(state, side, &mut self_attr);
    debug_assert_eq!(self_attr.len(), SELF_ATTR_LEN);

    let mut opp_attr = Vec::with_capacity(OPP_ATTR_LEN);
    core_attrs(state, side.other(), &mut opp_attr);
    opp_extra_attrs(state, side.other(), &mut opp_attr);
    debug_assert_eq!(opp_attr.len(), OPP_ATTR_LEN);

    let mut env = Vec::with_capacity(ENV_LEN);
    env_attrs(state, side, &mut env);
    debug_assert_eq!(env.len(), ENV_LEN);

    Observation {
        self_id: mode.uses_self_id().then(|| id_features(state, side, tables)),
        self_attr,
        opp_id: mode.uses_opp_id().then(|| id_features(state, side.other(), tables)),
        opp_attr,
        env,
    }
}

/// Width of the flattened policy-network input for this mode and pool.
///
/// Each present identity contributes two embedding vectors (character and
/// active skill) of `embed_width`.
pub fn feature_dim(mode: EncoderMode, embed_width: usize) -> usize {
    let mut dim = SELF_ATTR_LEN + OPP_ATTR_LEN + ENV_LEN;
    if mode.uses_self_id() {
        dim += 2 * embed_width;
    }
    if mode.uses_opp_id() {
        dim += 2 * embed_width;
    }
    dim
}

/// Human-readable feature schema for debugging and log replay.
pub fn schema_description() -> String {
    let mut s = String::new();
    s.push_str(&format!("observation schema v{SCHEMA_VERSION}\n"));
    s.push_str("core attribute block (self and opponent):\n");
    let core = [
        "hp_fraction",
        "energy_fraction",
        "cooldown_fraction[punch]",
        "cooldown_fraction[skill1]",
        "cooldown_fraction[skill2]",
        "cooldown_fraction[skill3]",
        "cooldown_fraction[substitute]",
        "cooldown_fraction[summon]",
        "cooldown_fraction[scroll]",
        "cooldown_fraction[subskill1]",
        "cooldown_fraction[subskill2]",
        "pos_x_fraction",
        "pos_y_fraction",
        "stun_fraction",
        "active_skill_flag",
        "active_skill_progress",
        "facing_sign",
        "buff_fraction",
    ];
    for (i, name) in core.iter().enumerate() {
        s.push_str(&format!("  [{i}] {name}\n"));
    }
    s.push_str("opponent extras:\n");
    let extras = [
        "hurtbox_width_fraction",
        "hurtbox_height_fraction",
        "active_hitbox_width_fraction",
        "active_hitbox_height_fraction",
        "active_frames_remaining_fraction",
    ];
    for (i, name) in extras.iter().enumerate() {
        s.push_str(&format!("  [{}] {name}\n", CORE_ATTR_LEN + i));
    }
    s.push_str("environment block:\n");
    let env = [
        "relative_dx",
        "relative_dy",
        "facing_product",
        "hp_fraction_difference",
        "time_remaining_fraction",
        "opp_projectile_flag",
        "opp_projectile_dx",
        "opp_projectile_dy",
        "own_projectile_flag",
    ];
    for (i, name) in env.iter().enumerate() {
        s.push_str(&format!("  [{i}] {name}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{new_match, pool::generate_pool, ActionTriple};

    fn tables_for(n: usize) -> (Vec<CharacterSpec>, IdTables) {
        let pool = generate_pool(n, 11);
        let tables = IdTables::from_pool(&pool);
        (pool, tables)
    }

    #[test]
    fn qs_ignores_opponent_identity_fis_does_not() {
        let (pool, tables) = tables_for(4);
        let state1 = new_match(pool[0].clone(), pool[1].clone(), 1800, 7).unwrap();
        // Same numeric attributes, different opponent identity labels.
        let mut relabeled = pool[1].clone();
        relabeled.char_id = 999;
        for skill in &mut relabeled.skills {
            skill.skill_id += 10_000;
        }
        let state2 = new_match(pool[0].clone(), relabeled, 1800, 7).unwrap();

        let qs1 = encode(&state1, Side::A, EncoderMode::Qs, &tables);
        let qs2 = encode(&state2, Side::A, EncoderMode::Qs, &tables);
        assert_eq!(qs1, qs2);

        let fis1 = encode(&state1, Side::A, EncoderMode::Fis, &tables);
        let fis2 = encode(&state2, Side::A, EncoderMode::Fis, &tables);
        assert_ne!(fis1, fis2);
    }

    #[test]
    fn fqs_is_blind_to_all_identity_labels() {
        let (pool, tables) = tables_for(4);
        let state1 = new_match(pool[0].clone(), pool[1].clone(), 1800, 7).unwrap();
        let mut a = pool[0].clone();
        let mut b = pool[1].clone();
        a.char_id = 777;
        b.char_id = 888;
        let state2 = new_match(a, b, 1800, 7).unwrap();
        let o1 = encode(&state1, Side::A, EncoderMode::Fqs, &tables);
        let o2 = encode(&state2, Side::A, EncoderMode::Fqs, &tables);
        assert_eq!(o1, o2);
        assert!(o1.self_id.is_none() && o1.opp_id.is_none());
    }

    #[test]
    fn both_sides_describe_the_same_fighter_identically() {
        let (pool, tables) = tables_for(2);
        let state = new_match(pool[0].clone(), pool[0].clone(), 1800, 7).unwrap();
        let oa = encode(&state, Side::A, EncoderMode::Qs, &tables);
        let ob = encode(&state, Side::B, EncoderMode::Qs, &tables);
        // B's opponent block core fields describe fighter A exactly.
        assert_eq!(oa.self_attr[..], ob.opp_attr[..CORE_ATTR_LEN]);
        assert_eq!(ob.self_attr[..], oa.opp_attr[..CORE_ATTR_LEN]);
    }

    #[test]
    fn unknown_character_maps_to_reserved_index() {
        let (pool, tables) = tables_for(2);
        let mut stranger = pool[1].clone();
        stranger.char_id = 4242;
        for skill in &mut stranger.skills {
            skill.skill_id += 50_000;
        }
        let state = new_match(pool[0].clone(), stranger, 1800, 7).unwrap();
        let obs = encode(&state, Side::A, EncoderMode::Fis, &tables);
        assert_eq!(obs.opp_id.unwrap().character, 0);
        assert!(obs.self_id.unwrap().character > 0);
    }

    #[test]
    fn dims_are_strictly_ordered_and_match_encode() {
        let (pool, tables) = tables_for(4);
        let embed = 8;
        let fqs = feature_dim(EncoderMode::Fqs, embed);
        let qs = feature_dim(EncoderMode::Qs, embed);
        let fis = feature_dim(EncoderMode::Fis, embed);
        assert!(fqs < qs && qs < fis);
        assert_eq!(fqs, feature_dim(EncoderMode::Fqs, embed));

        let state = new_match(pool[0].clone(), pool[1].clone(), 1800, 7).unwrap();
        for mode in [EncoderMode::Fis, EncoderMode::Qs, EncoderMode::Fqs] {
            let obs = encode(&state, Side::A, mode, &tables);
            let dense = obs.self_attr.len() + obs.opp_attr.len() + obs.env.len();
            let ids = obs.self_id.iter().count() * 2 + obs.opp_id.iter().count() * 2;
            assert_eq!(dense + ids * embed, feature_dim(mode, embed));
        }
    }

    #[test]
    fn golden_initial_state_vector() {
        let (pool, tables) = tables_for(2);
        let state = new_match(pool[0].clone(), pool[1].clone(), 1800, 7).unwrap();
        let obs = encode(&state, Side::A, EncoderMode::Qs, &tables);
        // Fresh state: full hp/energy, no cooldowns, spawn at (5, 5).
        assert_eq!(obs.self_attr[0], 1.0);
        assert_eq!(obs.self_attr[1], 1.0);
        assert!(obs.self_attr[2..11].iter().all(|&c| c == 0.0));
        assert_eq!(obs.self_attr[11], 5.0 / ARENA_W);
        assert_eq!(obs.self_attr[12], 0.5);
        assert_eq!(obs.self_attr[16], 1.0);
        assert_eq!(obs.env[0], 10.0 / ARENA_W);
        assert_eq!(obs.env[1], 0.0);
        assert_eq!(obs.env[2], -1.0);
        assert_eq!(obs.env[4], 1.0);
    }

    #[test]
    fn attributes_stay_in_bounds_over_random_play() {
        let (pool, tables) = tables_for(4);
        let mut s = new_match(pool[2].clone(), pool[3].clone(), 300, 7).unwrap();
        let mut rng = crate::rng::derive_rng(5, &[1]);
        use rand::Rng;
        while !s.is_terminal() {
            for side in [Side::A, Side::B] {
                let obs = encode(&s, side, EncoderMode::Fis, &tables);
                for (i, &v) in obs.self_attr.iter().chain(&obs.opp_attr).chain(&obs.env).enumerate()
                {
                    assert!((-1.0..=1.0).contains(&v), "feature {i} out of bounds: {v}");
                }
                // Deterministic re-encode reproduces the vector bit-exactly.
                assert_eq!(obs, encode(&s, side, EncoderMode::Fis, &tables));
            }
            let masks = s.legal_action_mask(Side::A).unwrap();
            let act = if rng.gen_bool(0.5) && masks.skill[1] {
                ActionTriple {
                    skill: crate::game::SkillAction::from_head_index(1).unwrap(),
                    ..ActionTriple::idle()
                }
            } else {
                ActionTriple::idle()
            };
            let walk = ActionTriple { lr: crate::game::MoveLr::Left, ..ActionTriple::idle() };
            s.step(&act, &walk).unwrap();
        }
    }
}
