//! Regret-matching selection of character pairings for training matches.
//!
//! The selector maintains, over the N x N grid of (opponent character i,
//! learner character j) pairs, an exponentially smoothed win rate for the
//! learner side, a running regret matrix, and a sampling weight matrix on
//! the N^2 simplex:
//!
//! * result: `wr(i,j) <- wr(i,j)*gamma + r*(1-gamma)` with `r = 1` iff j won;
//! * expected utility: `E = sum_ij wr(i,j) * w_prev(i,j)` (previous weights);
//! * regret: `R <- max(R + (wr - E), 0)` elementwise;
//! * weights: uniform `1/N^2` when `sum R = 0`, otherwise
//!   `w = (R / sum R)*(1-eta) + eta/N^2`.
//!
//! Pairings where the learner keeps underperforming its average accumulate
//! regret and get sampled more, so harder matchups see more training time.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatchupError {
    #[error("pair index ({i}, {j}) out of range for pool size {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("pool size must be positive")]
    EmptyPool,
}

/// Tuning knobs; both are conventions, not derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchupConfig {
    /// Win-rate smoothing factor (weight on the old estimate).
    pub gamma_smooth: f64,
    /// Uniform mixing weight in the sampling distribution.
    pub eta: f64,
}

impl Default for MatchupConfig {
    fn default() -> Self {
        Self { gamma_smooth: 0.99, eta: 0.1 }
    }
}

impl MatchupConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma_smooth) {
            return Err(format!("matchup.gamma_smooth must be in [0, 1], got {}", self.gamma_smooth));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(format!("matchup.eta must be in [0, 1], got {}", self.eta));
        }
        Ok(())
    }
}

/// Selector state over an N-character pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupState {
    n: usize,
    /// Smoothed win rate of the learner character j against opponent i.
    wr_ema: Vec<f64>,
    /// Non-negative accumulated regret per pair.
    regret: Vec<f64>,
    /// Sampling weights on the N^2 simplex.
    weights: Vec<f64>,
    pub config: MatchupConfig,
}

impl MatchupState {
    pub fn new(n: usize, config: MatchupConfig) -> Result<Self, MatchupError> {
        if n == 0 {
            return Err(MatchupError::EmptyPool);
        }
        let cells = n * n;
        Ok(Self {
            n,
            wr_ema: vec![0.5; cells],
            regret: vec![0.0; cells],
            weights: vec![1.0 / cells as f64; cells],
            config,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn cell(&self, i: usize, j: usize) -> Result<usize, MatchupError> {
        if i >= self.n || j >= self.n {
            return Err(MatchupError::IndexOutOfRange { i, j, n: self.n });
        }
        Ok(i * self.n + j)
    }

    pub fn win_rate(&self, i: usize, j: usize) -> f64 {
        self.wr_ema[i * self.n + j]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn regret_at(&self, i: usize, j: usize) -> f64 {
        self.regret[i * self.n + j]
    }

    /// Fold one finished match into the smoothed win rate of pair `(i, j)`.
    ///
    /// `j_wins` is from the learner side's perspective; a draw counts as a
    /// loss for j. Only the `(i, j)` entry changes.
    pub fn record_result(&mut self, i: usize, j: usize, j_wins: bool) -> Result<(), MatchupError> {
        let cell = self.cell(i, j)?;
        let g = self.config.gamma_smooth;
        let r = if j_wins { 1.0 } else { 0.0 };
        self.wr_ema[cell] = self.wr_ema[cell] * g + r * (1.0 - g);
        Ok(())
    }

    /// Overall win rate under the current (previous-step) weights.
    pub fn expected_utility(&self) -> f64 {
        self.wr_ema.iter().zip(&self.weights).map(|(r, w)| r * w).sum()
    }

    /// Accumulate regret against the expected utility and rebuild the
    /// sampling weights from the fresh regret matrix.
    pub fn update_regret_and_weights(&mut self) {
        let expected = self.expected_utility();
        let mut total = 0.0;
        for (r, &wr) in self.regret.iter_mut().zip(&self.wr_ema) {
            *r = (*r + (wr - expected)).max(0.0);
            total += *r;
        }
        let cells = self.n * self.n;
        let uniform = 1.0 / cells as f64;
        if total == 0.0 {
            self.weights.iter_mut().for_each(|w| *w = uniform);
        } else {
            let eta = self.config.eta;
            for (w, &r) in self.weights.iter_mut().zip(&self.regret) {
                *w = (r / total) * (1.0 - eta) + uniform * eta;
            }
        }
    }

    /// Draw a pair with probability proportional to the current weights.
    pub fn sample_pair(&self, rng: &mut impl Rng) -> (usize, usize) {
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut acc = 0.0;
        for (cell, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return (cell / self.n, cell % self.n);
            }
        }
        (self.n - 1, self.n - 1)
    }

    /// Matrices as CSV text (`kind` in `wr_ema`, `regret`, `weights`).
    pub fn matrix_csv(&self, kind: &str) -> String {
        let m = match kind {
            "wr_ema" => &self.wr_ema,
            "regret" => &self.regret,
            _ => &self.weights,
        };
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> =
                (0..self.n).map(|j| format!("{:.12}", m[i * self.n + j])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
