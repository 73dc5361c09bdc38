//! Prioritized opponent sampling from win rates.
//!
//! Candidates are weighted by a function of the learner's win rate against
//! them: `hard` focuses on the hardest opponents with `f(x) = (1 - x)^p`,
//! `var` focuses on evenly matched ones with `f(x) = x(1 - x)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Hard,
    Var,
}

#[derive(Debug, Error)]
pub enum PfspError {
    #[error("empty candidate set")]
    EmptyCandidates,
}

/// Normalized sampling probabilities over candidates.
///
/// Falls back to uniform when every weight is zero (for example `hard`
/// weighting with all win rates at 1).
pub fn pfsp_weights(
    winrates: &[f64],
    weighting: Weighting,
    p_hard: f64,
) -> Result<Vec<f64>, PfspError> {
    if winrates.is_empty() {
        return Err(PfspError::EmptyCandidates);
    }
    let f = |x: f64| -> f64 {
        match weighting {
            Weighting::Hard => (1.0 - x).powf(p_hard),
            Weighting::Var => x * (1.0 - x),
        }
    };
    let raw: Vec<f64> = winrates.iter().map(|&x| f(x.clamp(0.0, 1.0))).collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        let u = 1.0 / winrates.len() as f64;
        return Ok(vec![u; winrates.len()]);
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Draw an index from a probability vector.
pub fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;

    #[test]
    fn var_weighting_worked_example() {
        // f = [0.25, 0.09] -> [25/34, 9/34]
        let w = pfsp_weights(&[0.5, 0.9], Weighting::Var, 2.0).unwrap();
        assert!((w[0] - 25.0 / 34.0).abs() < 1e-12);
        assert!((w[1] - 9.0 / 34.0).abs() < 1e-12);
    }

    #[test]
    fn hard_boundary_case() {
        let w = pfsp_weights(&[0.0, 1.0], Weighting::Hard, 2.0).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
    }

    #[test]
    fn equal_winrates_are_uniform() {
        let w = pfsp_weights(&[0.7, 0.7, 0.7, 0.7], Weighting::Hard, 2.0).unwrap();
        for &p in &w {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_weights_fall_back_to_uniform() {
        let w = pfsp_weights(&[1.0, 1.0, 1.0], Weighting::Hard, 2.0).unwrap();
        for &p in &w {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        // var weighting degenerates the same way at the simplex corners
        let w = pfsp_weights(&[0.0, 1.0, 0.0], Weighting::Var, 2.0).unwrap();
        for &p in &w {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_candidates_error() {
        assert!(matches!(pfsp_weights(&[], Weighting::Hard, 2.0), Err(PfspError::EmptyCandidates)));
    }

    #[test]
    fn output_is_a_probability_vector() {
        let mut rng = derive_rng(20, &[0]);
        for _ in 0..500 {
            let n = rng.gen_range(1..12);
            let wr: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let weighting = if rng.gen_bool(0.5) { Weighting::Hard } else { Weighting::Var };
            let p = rng.gen_range(0.5..4.0);
            let w = pfsp_weights(&wr, weighting, p).unwrap();
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn hard_weighting_is_monotone_in_difficulty() {
        let mut rng = derive_rng(21, &[0]);
        for _ in 0..200 {
            let n = rng.gen_range(2..10);
            let wr: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let w = pfsp_weights(&wr, Weighting::Hard, rng.gen_range(0.5..4.0)).unwrap();
            for a in 0..n {
                for b in 0..n {
                    if wr[a] < wr[b] {
                        assert!(w[a] >= w[b] - 1e-12, "lower win rate must not get less weight");
                    }
                }
            }
        }
    }

    #[test]
    fn empirical_frequencies_match_weights() {
        let mut rng = derive_rng(22, &[0]);
        let w = pfsp_weights(&[0.5, 0.9], Weighting::Var, 2.0).unwrap();
        let draws = 100_000usize;
        let mut counts = [0usize; 2];
        for _ in 0..draws {
            counts[sample_index(&w, &mut rng)] += 1;
        }
        for i in 0..2 {
            let sigma = (draws as f64 * w[i] * (1.0 - w[i])).sqrt();
            let dev = (counts[i] as f64 - draws as f64 * w[i]).abs();
            assert!(dev < 3.0 * sigma, "index {i}: deviation {dev:.1} > 3 sigma {:.1}", 3.0 * sigma);
        }
    }
}
