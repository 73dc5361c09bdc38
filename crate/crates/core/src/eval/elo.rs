//! Pairwise Elo ratings with the standard logistic expectation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const DEFAULT_ELO: f64 = 1200.0;
pub const DEFAULT_K: f64 = 32.0;

/// Match result from side a's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchScore {
    AWins,
    BWins,
    Draw,
}

impl MatchScore {
    fn score_a(self) -> f64 {
        match self {
            MatchScore::AWins => 1.0,
            MatchScore::BWins => 0.0,
            MatchScore::Draw => 0.5,
        }
    }
}

/// One rating update: `E_a = 1 / (1 + 10^((rb - ra)/400))`,
/// `ra' = ra + k (s_a - E_a)` and symmetrically for b. With a shared k the
/// total rating is conserved exactly.
pub fn elo_update(ra: f64, rb: f64, outcome: MatchScore, k: f64) -> (f64, f64) {
    let expected_a = 1.0 / (1.0 + 10f64.powf((rb - ra) / 400.0));
    let s_a = outcome.score_a();
    let delta = k * (s_a - expected_a);
    (ra + delta, rb - delta)
}

/// Ratings keyed by agent label; everyone starts at 1200.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EloTable {
    ratings: BTreeMap<String, f64>,
    pub k_factor: f64,
}

impl EloTable {
    pub fn new(k_factor: f64) -> Self {
        Self { ratings: BTreeMap::new(), k_factor }
    }

    pub fn rating(&self, id: &str) -> f64 {
        self.ratings.get(id).copied().unwrap_or(DEFAULT_ELO)
    }

    pub fn record(&mut self, a: &str, b: &str, outcome: MatchScore) {
        let (ra, rb) = (self.rating(a), self.rating(b));
        let (ra2, rb2) = elo_update(ra, rb, outcome, self.k_factor);
        self.ratings.insert(a.to_string(), ra2);
        self.ratings.insert(b.to_string(), rb2);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.ratings.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn equal_ratings_move_half_k() {
        let (ra, rb) = elo_update(1200.0, 1200.0, MatchScore::AWins, 32.0);
        assert_eq!(ra, 1216.0);
        assert_eq!(rb, 1184.0);
    }

    #[test]
    fn equal_rating_draw_changes_nothing() {
        let (ra, rb) = elo_update(1200.0, 1200.0, MatchScore::Draw, 32.0);
        assert_eq!((ra, rb), (1200.0, 1200.0));
    }

    #[test]
    fn favorite_gains_little() {
        // 400 points ahead: expected 10/11, win gains 32/11.
        let (ra, _) = elo_update(1600.0, 1200.0, MatchScore::AWins, 32.0);
        assert!((ra - 1600.0 - 32.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn rating_total_is_conserved_exactly() {
        let mut rng = crate::rng::derive_rng(30, &[0]);
        for _ in 0..1000 {
            let ra = rng.gen_range(800.0..2000.0);
            let rb = rng.gen_range(800.0..2000.0);
            let outcome = match rng.gen_range(0..3) {
                0 => MatchScore::AWins,
                1 => MatchScore::BWins,
                _ => MatchScore::Draw,
            };
            let (ra2, rb2) = elo_update(ra, rb, outcome, 32.0);
            assert_eq!(ra2 + rb2, ra + rb, "shared-k update conserves the total");
        }
    }

    #[test]
    fn swapping_sides_swaps_results() {
        let (ra, rb) = elo_update(1500.0, 1300.0, MatchScore::AWins, 32.0);
        let (rb2, ra2) = elo_update(1300.0, 1500.0, MatchScore::BWins, 32.0);
        assert!((ra - ra2).abs() < 1e-12);
        assert!((rb - rb2).abs() < 1e-12);
    }

    #[test]
    fn table_tracks_streaks() {
        let mut t = EloTable::new(32.0);
        for _ in 0..10 {
            t.record("winner", "loser", MatchScore::AWins);
        }
        assert!(t.rating("winner") > DEFAULT_ELO);
        assert!(t.rating("loser") < DEFAULT_ELO);
        assert!((t.rating("winner") + t.rating("loser") - 2.0 * DEFAULT_ELO).abs() < 1e-9);
    }
}
