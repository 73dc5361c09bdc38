//! Character pool generation and file I/O.
//!
//! Pools are stored as JSON Lines: one `CharacterSpec` record per line. The
//! bundled generator emits synthetic pools whose stats are correlated with
//! the level tier (S characters hit harder and cool down faster than C
//! characters) with small per-character jitter.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use super::character::{CharacterSpec, Level, RectSpec, SkillSlot, SkillSpec, SKILL_SLOTS};
use crate::rng::derive_rng;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("pool file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pool file {path} line {line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("pool file {path} line {line}: {source}")]
    Invalid {
        path: String,
        line: usize,
        #[source]
        source: super::character::SpecError,
    },
    #[error("pool file {path}: duplicate char_id {char_id}")]
    DuplicateId { path: String, char_id: u32 },
}

/// Per-level stat multipliers; stronger tiers do more with less downtime.
fn level_factor(level: Level) -> f64 {
    match level {
        Level::S => 1.25,
        Level::A => 1.10,
        Level::B => 1.00,
        Level::C => 0.90,
    }
}

fn jitter(rng: &mut impl Rng, spread: f64) -> f64 {
    1.0 + rng.gen_range(-spread..=spread)
}

/// Generate `n` synthetic characters, cycling levels S, A, B, C.
///
/// Stats are deterministic in (`n`, `seed`). Skill ids are globally unique
/// (char_id * 16 + slot) so ID-aware encoders can index them.
pub fn generate_pool(n: usize, seed: u64) -> Vec<CharacterSpec> {
    let mut pool = Vec::with_capacity(n);
    for i in 0..n {
        let char_id = i as u32 + 1;
        let level = Level::ALL[i % 4];
        let mut rng = derive_rng(seed, &[0x9001, char_id as u64]);
        let f = level_factor(level);
        let sid = |slot: SkillSlot| char_id * 16 + slot.index() as u32;

        let mk = |slot: SkillSlot,
                  damage: f64,
                  cooldown: u32,
                  startup: u32,
                  active: u32,
                  reach: f64,
                  half_w: f64,
                  half_h: f64,
                  energy: f64,
                  needs_direction: bool| SkillSpec {
            skill_id: sid(slot),
            damage,
            cooldown,
            startup,
            active,
            hitbox: RectSpec::new(reach, 0.0, half_w, half_h),
            energy_cost: energy,
            needs_direction,
            is_defensive: slot == SkillSlot::Substitute,
        };

        let dmg = |base: f64, rng: &mut rand_chacha::ChaCha8Rng| base * f * jitter(rng, 0.10);
        let cd = |base: f64, rng: &mut rand_chacha::ChaCha8Rng| {
            ((base / f) * jitter(rng, 0.10)).round().max(1.0) as u32
        };

        let skills = vec![
            mk(SkillSlot::Punch, dmg(6.0, &mut rng), cd(18.0, &mut rng), 2, 3, 1.0, 0.8, 0.8, 0.0, false),
            mk(SkillSlot::Skill1, dmg(12.0, &mut rng), cd(90.0, &mut rng), 5, 4, 1.4, 1.1, 1.0, 15.0, false),
            mk(SkillSlot::Skill2, dmg(16.0, &mut rng), cd(150.0, &mut rng), 8, 4, 1.6, 1.3, 1.1, 25.0, false),
            mk(SkillSlot::Skill3, dmg(22.0, &mut rng), cd(240.0, &mut rng), 12, 5, 1.8, 1.5, 1.2, 35.0, true),
            mk(SkillSlot::Substitute, 0.0, cd(180.0, &mut rng), 0, 0, 0.0, 0.0, 0.0, 30.0, false),
            mk(SkillSlot::Summon, 0.0, cd(600.0, &mut rng), 0, 0, 0.0, 0.0, 0.0, 40.0, false),
            mk(SkillSlot::Scroll, dmg(10.0, &mut rng), cd(120.0, &mut rng), 6, 1, 1.2, 0.5, 0.5, 20.0, true),
            mk(SkillSlot::Subskill1, dmg(8.0, &mut rng), cd(60.0, &mut rng), 3, 3, 1.4, 1.1, 1.0, 10.0, false),
            mk(SkillSlot::Subskill2, dmg(9.0, &mut rng), cd(60.0, &mut rng), 3, 3, 1.6, 1.3, 1.1, 10.0, false),
        ];

        pool.push(CharacterSpec {
            char_id,
            level,
            max_hp: (100.0 * (0.85 + 0.15 * f) * jitter(&mut rng, 0.05)).round(),
            move_speed: 0.15 * f.sqrt() * jitter(&mut rng, 0.08),
            skills,
            hurtbox_half_w: 0.6 * jitter(&mut rng, 0.05),
            hurtbox_half_h: 1.0 * jitter(&mut rng, 0.05),
            max_energy: 100.0,
            energy_regen: 0.2 * jitter(&mut rng, 0.10),
        });
    }
    debug_assert!(pool.iter().all(|c| c.validate().is_ok()));
    let _ = SKILL_SLOTS; // slot order is the contract the generator fills
    pool
}

/// Write a pool as JSON Lines, one record per character.
pub fn save_pool(pool: &[CharacterSpec], path: &Path) -> Result<(), PoolError> {
    let mut buf = Vec::new();
    for spec in pool {
        let line = serde_json::to_string(spec).expect("character specs are serializable");
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    crate::persist::atomic_write(path, &buf).map_err(|source| PoolError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Load and validate a JSON Lines pool file.
pub fn load_pool(path: &Path) -> Result<Vec<CharacterSpec>, PoolError> {
    let display = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| PoolError::Io {
        path: display.clone(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut pool = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| PoolError::Io { path: display.clone(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: CharacterSpec =
            serde_json::from_str(&line).map_err(|source| PoolError::Parse {
                path: display.clone(),
                line: idx + 1,
                source,
            })?;
        spec.validate().map_err(|source| PoolError::Invalid {
            path: display.clone(),
            line: idx + 1,
            source,
        })?;
        if !seen.insert(spec.char_id) {
            return Err(PoolError::DuplicateId { path: display, char_id: spec.char_id });
        }
        pool.push(spec);
    }
    Ok(pool)
}

/// Convenience for writers that already hold an open sink.
pub fn write_pool_to(pool: &[CharacterSpec], out: &mut impl Write) -> std::io::Result<()> {
    for spec in pool {
        serde_json::to_writer(&mut *out, spec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_pool(12, 7), generate_pool(12, 7));
        assert_ne!(generate_pool(12, 7), generate_pool(12, 8));
    }

    #[test]
    fn levels_cycle_and_correlate() {
        let pool = generate_pool(8, 1);
        assert_eq!(pool[0].level, Level::S);
        assert_eq!(pool[3].level, Level::C);
        assert_eq!(pool[4].level, Level::S);
        // S tier out-damages C tier on the punch by construction.
        let s_punch: f64 = pool.iter().filter(|c| c.level == Level::S).map(|c| c.skills[0].damage).sum::<f64>() / 2.0;
        let c_punch: f64 = pool.iter().filter(|c| c.level == Level::C).map(|c| c.skills[0].damage).sum::<f64>() / 2.0;
        assert!(s_punch > c_punch);
    }

    #[test]
    fn pool_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.jsonl");
        let pool = generate_pool(6, 3);
        save_pool(&pool, &path).unwrap();
        let loaded = load_pool(&path).unwrap();
        assert_eq!(pool, loaded);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.jsonl");
        let mut pool = generate_pool(2, 3);
        pool[1].char_id = pool[0].char_id;
        save_pool(&pool, &path).unwrap();
        assert!(matches!(load_pool(&path), Err(PoolError::DuplicateId { .. })));
    }
}
