//! League orchestration: member roles, snapshot/reset rules, prioritized
//! opponent sampling, and the training runner.

mod pfsp;
mod rollout;
mod rules;
mod runner;

pub use pfsp::{pfsp_weights, sample_index, Weighting};
pub use rollout::{
    collect_fragment, EnvSlot, FragmentCtx, FragmentResult, MatchAssignment, MatchOutcomeRecord,
};
pub use rules::{
    LeagueConfig, LeagueEngine, LeagueError, LeagueEvent, LeagueEventKind, LeagueMember,
    OpponentId, PolicySnapshot, Role, RoleStyles, WinRateTable,
};
pub use runner::{run_league, LeagueRunArtifacts, MetricsRow, RunnerError, TrainingMatchRow};
