//! Rating, behavior scoring, and evaluation matches.

mod behavior;
mod difficulty;
mod elo;
mod evaluate;

pub use behavior::{
    behavior_scores, cdf_report, ActionResult, BehaviorLog, BehaviorLogBuilder, BehaviorRecord,
    BehaviorScores, CdfPoint, OPENING_WINDOW_FRAMES,
};
pub use difficulty::{DifficultyConfig, DifficultyWrapper};
pub use elo::{elo_update, EloTable, MatchScore, DEFAULT_ELO, DEFAULT_K};
pub use evaluate::{
    evaluate_pool, play_match, sample_matchup, EvalAgent, EvalError, EvalReport, MatchRecord,
};
