//! Rule-based behavior scoring and empirical CDF reports.
//!
//! Five scores in [0, 1] summarize one side's play in a finished match:
//!
//! * **substitution** — fraction of substitute uses that actually negated a
//!   hit;
//! * **special** — fraction of highest-damage-skill uses that landed;
//! * **blitz** — how early the side's first offensive action came within the
//!   opening window;
//! * **counter** — fraction of opponent opening attacks answered with a
//!   negating substitute followed by a landed punish inside the window;
//! * **attack** — fraction of punches that landed.
//!
//! A metric with no qualifying events scores 0, so score populations stay
//! total. The error rate reported alongside is `1 - substitution`.

use serde::{Deserialize, Serialize};

use crate::game::{FrameEvent, Side, SkillSlot, StepInfo};

/// Frames counting as the "opening" of a match for blitz/counter.
pub const OPENING_WINDOW_FRAMES: u32 = 90;

/// Resolution of one skill use, decided once the activation has played out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionResult {
    Landed,
    Whiffed,
    /// The opponent negated this attack with a substitute.
    Negated,
}

/// One skill use by one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub frame: u32,
    pub side: Side,
    pub slot: SkillSlot,
    pub result: ActionResult,
    /// Damage dealt by this use (0 unless it landed).
    pub damage: f64,
    /// Acting side's HP and energy when the skill was raised.
    pub hp: f64,
    pub energy: f64,
}

/// Per-match, per-side sequence of resolved skill uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorLog {
    pub records: Vec<BehaviorRecord>,
    /// Highest-damage slot per side, taken from the character specs.
    pub special_slot: [SkillSlot; 2],
}

impl BehaviorLog {
    pub fn validate(&self) -> Result<(), String> {
        let mut last = 0;
        for r in &self.records {
            if r.frame < last {
                return Err("record frames must be non-decreasing".into());
            }
            if r.damage < 0.0 {
                return Err("damage must be non-negative".into());
            }
            last = r.frame;
        }
        Ok(())
    }
}

/// Builds a [`BehaviorLog`] from the simulator's per-step events.
#[derive(Debug)]
pub struct BehaviorLogBuilder {
    uses: Vec<PendingUse>,
    special_slot: [SkillSlot; 2],
}

#[derive(Debug, Clone, Copy)]
struct PendingUse {
    frame: u32,
    side: Side,
    slot: SkillSlot,
    use_id: u32,
    result: ActionResult,
    damage: f64,
    hp: f64,
    energy: f64,
}

impl BehaviorLogBuilder {
    pub fn new(special_slot: [SkillSlot; 2]) -> Self {
        Self { uses: Vec::new(), special_slot }
    }

    /// Feed one step's events; `frame` is the frame the step produced and
    /// `hp_energy` the acting sides' snapshots at that frame.
    pub fn observe(&mut self, frame: u32, info: &StepInfo, hp_energy: [(f64, f64); 2]) {
        for ev in &info.events {
            match *ev {
                FrameEvent::SkillUsed { side, slot, use_id } => {
                    let (hp, energy) = hp_energy[side.index()];
                    self.uses.push(PendingUse {
                        frame,
                        side,
                        slot,
                        use_id,
                        result: ActionResult::Whiffed,
                        damage: 0.0,
                        hp,
                        energy,
                    });
                }
                FrameEvent::Hit { use_id, damage, .. } => {
                    if let Some(u) = self.uses.iter_mut().rev().find(|u| u.use_id == use_id) {
                        u.result = ActionResult::Landed;
                        u.damage += damage;
                    }
                }
                FrameEvent::Negated { defender, attacker_use_id, .. } => {
                    if let Some(u) =
                        self.uses.iter_mut().rev().find(|u| u.use_id == attacker_use_id)
                    {
                        u.result = ActionResult::Negated;
                    }
                    // Mark the defender's substitute itself as landed.
                    if let Some(sub) = self
                        .uses
                        .iter_mut()
                        .rev()
                        .find(|u| u.side == defender && u.slot == SkillSlot::Substitute)
                    {
                        sub.result = ActionResult::Landed;
                    }
                }
            }
        }
    }

    pub fn finish(self) -> BehaviorLog {
        BehaviorLog {
            records: self
                .uses
                .into_iter()
                .map(|u| BehaviorRecord {
                    frame: u.frame,
                    side: u.side,
                    slot: u.slot,
                    result: u.result,
                    damage: u.damage,
                    hp: u.hp,
                    energy: u.energy,
                })
                .collect(),
            special_slot: self.special_slot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorScores {
    pub substitution: f64,
    pub special: f64,
    pub blitz: f64,
    pub counter: f64,
    pub attack: f64,
    pub error_rate: f64,
}

impl BehaviorScores {
    pub fn as_array(&self) -> [(&'static str, f64); 6] {
        [
            ("substitution", self.substitution),
            ("special", self.special),
            ("blitz", self.blitz),
            ("counter", self.counter),
            ("attack", self.attack),
            ("error_rate", self.error_rate),
        ]
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Score one side of a finished match.
pub fn behavior_scores(log: &BehaviorLog, side: Side) -> BehaviorScores {
    let mine = || log.records.iter().filter(move |r| r.side == side);
    let theirs = || log.records.iter().filter(move |r| r.side != side);

    let subs_total = mine().filter(|r| r.slot == SkillSlot::Substitute).count();
    let subs_landed = mine()
        .filter(|r| r.slot == SkillSlot::Substitute && r.result == ActionResult::Landed)
        .count();
    let substitution = ratio(subs_landed, subs_total);

    let special_slot = log.special_slot[side.index()];
    let special_total = mine().filter(|r| r.slot == special_slot).count();
    let special_landed = mine()
        .filter(|r| r.slot == special_slot && r.result == ActionResult::Landed)
        .count();
    let special = ratio(special_landed, special_total);

    let blitz = mine()
        .filter(|r| r.slot.is_offensive())
        .map(|r| r.frame)
        .next()
        .map(|f| {
            if f >= OPENING_WINDOW_FRAMES {
                0.0
            } else {
                1.0 - f as f64 / OPENING_WINDOW_FRAMES as f64
            }
        })
        .unwrap_or(0.0);

    // Counter: opponent openers answered by a negating substitute followed by
    // any landed offensive use before the window closes.
    let openers: Vec<u32> = theirs()
        .filter(|r| r.slot.is_offensive() && r.frame < OPENING_WINDOW_FRAMES)
        .map(|r| r.frame)
        .collect();
    let mut countered = 0usize;
    for &opener_frame in &openers {
        let negating_sub = mine().find(|r| {
            r.slot == SkillSlot::Substitute
                && r.result == ActionResult::Landed
                && r.frame >= opener_frame
                && r.frame < OPENING_WINDOW_FRAMES
        });
        if let Some(sub) = negating_sub {
            let punished = mine().any(|r| {
                r.slot.is_offensive()
                    && r.result == ActionResult::Landed
                    && r.frame >= sub.frame
                    && r.frame < OPENING_WINDOW_FRAMES
            });
            if punished {
                countered += 1;
            }
        }
    }
    let counter = ratio(countered, openers.len());

    let punches = mine().filter(|r| r.slot == SkillSlot::Punch).count();
    let punches_landed = mine()
        .filter(|r| r.slot == SkillSlot::Punch && r.result == ActionResult::Landed)
        .count();
    let attack = ratio(punches_landed, punches);

    BehaviorScores {
        substitution,
        special,
        blitz,
        counter,
        attack,
        error_rate: 1.0 - substitution,
    }
}

/// One point of an empirical CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub score: f64,
    pub cumulative: f64,
}

/// Sorted scores with step heights `1/n`; monotone and ending at 1.
pub fn cdf_report(scores: &[f64]) -> Vec<CdfPoint> {
    assert!(!scores.is_empty(), "cdf needs at least one score");
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, score)| CdfPoint { score, cumulative: (i + 1) as f64 / n })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        frame: u32,
        side: Side,
        slot: SkillSlot,
        result: ActionResult,
        damage: f64,
    ) -> BehaviorRecord {
        BehaviorRecord { frame, side, slot, result, damage, hp: 100.0, energy: 50.0 }
    }

    fn log(records: Vec<BehaviorRecord>) -> BehaviorLog {
        BehaviorLog { records, special_slot: [SkillSlot::Skill3, SkillSlot::Skill3] }
    }

    #[test]
    fn zero_substitute_uses_score_zero() {
        let l = log(vec![record(5, Side::A, SkillSlot::Punch, ActionResult::Landed, 6.0)]);
        let s = behavior_scores(&l, Side::A);
        assert_eq!(s.substitution, 0.0);
        assert_eq!(s.error_rate, 1.0);
    }

    #[test]
    fn perfect_punches_score_one() {
        let l = log(vec![
            record(5, Side::A, SkillSlot::Punch, ActionResult::Landed, 6.0),
            record(40, Side::A, SkillSlot::Punch, ActionResult::Landed, 6.0),
        ]);
        assert_eq!(behavior_scores(&l, Side::A).attack, 1.0);
    }

    #[test]
    fn special_counts_highest_damage_slot_only() {
        let l = log(vec![
            record(10, Side::A, SkillSlot::Skill3, ActionResult::Landed, 22.0),
            record(50, Side::A, SkillSlot::Skill3, ActionResult::Whiffed, 0.0),
            record(90, Side::A, SkillSlot::Skill3, ActionResult::Landed, 22.0),
            record(95, Side::A, SkillSlot::Skill1, ActionResult::Whiffed, 0.0),
        ]);
        let s = behavior_scores(&l, Side::A);
        assert!((s.special - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn blitz_rewards_early_offense() {
        let l = log(vec![record(9, Side::A, SkillSlot::Punch, ActionResult::Whiffed, 0.0)]);
        assert!((behavior_scores(&l, Side::A).blitz - 0.9).abs() < 1e-12);
        let late = log(vec![record(200, Side::A, SkillSlot::Punch, ActionResult::Landed, 6.0)]);
        assert_eq!(behavior_scores(&late, Side::A).blitz, 0.0);
        let never = log(vec![]);
        assert_eq!(behavior_scores(&never, Side::A).blitz, 0.0);
    }

    #[test]
    fn counter_needs_negate_then_punish() {
        let l = log(vec![
            record(10, Side::B, SkillSlot::Skill1, ActionResult::Negated, 0.0),
            record(10, Side::A, SkillSlot::Substitute, ActionResult::Landed, 0.0),
            record(30, Side::A, SkillSlot::Punch, ActionResult::Landed, 6.0),
            record(60, Side::B, SkillSlot::Punch, ActionResult::Landed, 6.0),
        ]);
        let s = behavior_scores(&l, Side::A);
        // Two openers by B, one answered.
        assert!((s.counter - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let l = log(vec![
            record(10, Side::A, SkillSlot::Substitute, ActionResult::Whiffed, 0.0),
            record(12, Side::A, SkillSlot::Punch, ActionResult::Whiffed, 0.0),
            record(18, Side::B, SkillSlot::Skill2, ActionResult::Landed, 16.0),
        ]);
        for side in [Side::A, Side::B] {
            let s = behavior_scores(&l, side);
            for (name, v) in s.as_array() {
                assert!((0.0..=1.0).contains(&v), "{name} out of range: {v}");
            }
            // Deterministic.
            assert_eq!(s, behavior_scores(&l, side));
        }
    }

    #[test]
    fn cdf_single_score_jumps_to_one() {
        let cdf = cdf_report(&[0.5]);
        assert_eq!(cdf.len(), 1);
        assert_eq!(cdf[0].score, 0.5);
        assert_eq!(cdf[0].cumulative, 1.0);
    }

    #[test]
    fn cdf_two_scores_step_by_half() {
        let cdf = cdf_report(&[1.0, 0.0]);
        assert_eq!(cdf[0], CdfPoint { score: 0.0, cumulative: 0.5 });
        assert_eq!(cdf[1], CdfPoint { score: 1.0, cumulative: 1.0 });
    }

    #[test]
    fn cdf_is_monotone_and_total() {
        let mut rng = crate::rng::derive_rng(31, &[0]);
        use rand::Rng;
        let scores: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..1.0)).collect();
        let cdf = cdf_report(&scores);
        for w in cdf.windows(2) {
            assert!(w[0].score <= w[1].score);
            assert!(w[0].cumulative <= w[1].cumulative);
        }
        assert_eq!(cdf.last().unwrap().cumulative, 1.0);
    }

    /// Kolmogorov-Smirnov check against the uniform CDF at the 1% level.
    #[test]
    fn uniform_sample_passes_ks_band() {
        let mut rng = crate::rng::derive_rng(32, &[0]);
        use rand::Rng;
        let n = 1000usize;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let cdf = cdf_report(&scores);
        let mut d: f64 = 0.0;
        for (i, p) in cdf.iter().enumerate() {
            // Compare the step's top and bottom against the identity CDF.
            d = d.max((p.cumulative - p.score).abs());
            d = d.max((i as f64 / n as f64 - p.score).abs());
        }
        let band = 1.6276 / (n as f64).sqrt();
        assert!(d <= band, "KS statistic {d:.4} above 1% band {band:.4}");
    }
}
