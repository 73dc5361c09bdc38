//! League membership, win-rate bookkeeping, and snapshot/reset rules.
//!
//! Three live members train side by side:
//!
//! * the **main** agent, the product of the run, which plays against the
//!   whole snapshot pool and is never reset;
//! * the **main exploiter**, which shares the main agent's network structure
//!   (not its parameters), hunts the current main agent's weaknesses, and is
//!   reset every iteration;
//! * the **league exploiter**, an identity-aware network that plays
//!   everyone to keep the pool diverse, reset with probability 0.25 after a
//!   grace period.
//!
//! A member finishes an iteration when it beats every candidate opponent at
//! the win threshold (with enough matches observed) or when it times out,
//! at which point a frozen copy of it joins the pool.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pfsp::{pfsp_weights, sample_index, Weighting};
use crate::encoders::EncoderMode;
use crate::game::Style;
use crate::policy::{NetConfig, PolicyParams};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum LeagueError {
    #[error("no candidate opponents for role {0:?}")]
    EmptyCandidates(Role),
    #[error("unknown snapshot id {0}")]
    UnknownSnapshot(u64),
    #[error("league config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Main,
    MainExploiter,
    LeagueExploiter,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Main, Role::MainExploiter, Role::LeagueExploiter];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Main => "main",
            Role::MainExploiter => "main_exploiter",
            Role::LeagueExploiter => "league_exploiter",
        }
    }
}

/// A frozen, immutable copy of a member's parameters.
#[derive(Debug, Clone)]
pub struct PolicySnapshot {
    pub id: u64,
    pub source_role: Role,
    pub generation: u32,
    pub creation_step: u64,
    pub encoder_mode: EncoderMode,
    pub params: Arc<PolicyParams>,
}

/// Opponents are either frozen snapshots or the live members themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpponentId {
    Snapshot(u64),
    Live(Role),
}

impl OpponentId {
    pub fn label(&self) -> String {
        match self {
            OpponentId::Snapshot(id) => format!("snap_{id}"),
            OpponentId::Live(role) => format!("live_{}", role.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct WinRateEntry {
    pub ema: f64,
    pub matches: u64,
}

/// Smoothed win rates of each live member against its opponents.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WinRateTable {
    entries: BTreeMap<(Role, OpponentId), WinRateEntry>,
    pub smoothing: f64,
}

impl WinRateTable {
    pub fn new(smoothing: f64) -> Self {
        Self { entries: BTreeMap::new(), smoothing }
    }

    /// Fold in one finished match (a draw counts as a loss).
    pub fn record(&mut self, member: Role, opponent: OpponentId, won: bool) {
        let entry = self
            .entries
            .entry((member, opponent))
            .or_insert(WinRateEntry { ema: 0.5, matches: 0 });
        let r = if won { 1.0 } else { 0.0 };
        entry.ema = entry.ema * self.smoothing + r * (1.0 - self.smoothing);
        entry.matches += 1;
    }

    pub fn get(&self, member: Role, opponent: OpponentId) -> Option<WinRateEntry> {
        self.entries.get(&(member, opponent)).copied()
    }

    /// Estimate used for sampling; unseen opponents count as even odds.
    pub fn rate_or_default(&self, member: Role, opponent: OpponentId) -> f64 {
        self.get(member, opponent).map(|e| e.ema).unwrap_or(0.5)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Role, OpponentId), &WinRateEntry)> {
        self.entries.iter()
    }
}

/// Per-role reward styles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleStyles {
    pub main: Style,
    pub main_exploiter: Style,
    pub league_exploiter: Style,
}

impl Default for RoleStyles {
    fn default() -> Self {
        Self {
            main: Style::Balanced,
            main_exploiter: Style::Balanced,
            league_exploiter: Style::Balanced,
        }
    }
}

impl RoleStyles {
    pub fn for_role(&self, role: Role) -> Style {
        match role {
            Role::Main => self.main,
            Role::MainExploiter => self.main_exploiter,
            Role::LeagueExploiter => self.league_exploiter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeagueConfig {
    /// Win rate a member must hold against every candidate to snapshot early.
    pub win_threshold: f64,
    /// Environment steps per member per iteration before the timeout fires.
    pub iteration_timeout_steps: u64,
    /// Iterations each member trains for.
    pub total_iterations: u32,
    pub league_exploiter_reset_prob: f64,
    /// Exponent of the hard weighting.
    pub p_hard: f64,
    /// Iterations during which the league exploiter never resets and the
    /// main exploiter still samples main-agent snapshots.
    pub reset_grace_iterations: u32,
    /// Matches required per candidate before the threshold branch may fire.
    pub min_matches_for_threshold: u64,
    /// Win-rate EMA smoothing factor.
    pub winrate_smoothing: f64,
    /// Encoder for the main agent (the main exploiter mirrors it).
    pub main_mode: EncoderMode,
    pub pfsp_main: Weighting,
    pub pfsp_main_exploiter: Weighting,
    pub pfsp_league_exploiter: Weighting,
    pub styles: RoleStyles,
    /// Permit identity-aware encoders for the main agent (structure
    /// ablations); the standard configuration restricts main to QS/FQS.
    pub allow_fis_main: bool,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self {
            win_threshold: 0.8,
            iteration_timeout_steps: 20_000,
            total_iterations: 10,
            league_exploiter_reset_prob: 0.25,
            p_hard: 2.0,
            reset_grace_iterations: 3,
            min_matches_for_threshold: 20,
            winrate_smoothing: 0.99,
            main_mode: EncoderMode::Qs,
            pfsp_main: Weighting::Hard,
            pfsp_main_exploiter: Weighting::Var,
            pfsp_league_exploiter: Weighting::Hard,
            styles: RoleStyles::default(),
            allow_fis_main: false,
        }
    }
}

impl LeagueConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.win_threshold > 0.0 && self.win_threshold < 1.0) {
            return Err(format!("league.win_threshold must be in (0, 1), got {}", self.win_threshold));
        }
        if !(0.0..=1.0).contains(&self.league_exploiter_reset_prob) {
            return Err(format!(
                "league.league_exploiter_reset_prob must be in [0, 1], got {}",
                self.league_exploiter_reset_prob
            ));
        }
        if !(0.0..1.0).contains(&self.winrate_smoothing) {
            return Err(format!(
                "league.winrate_smoothing must be in [0, 1), got {}",
                self.winrate_smoothing
            ));
        }
        if self.p_hard <= 0.0 {
            return Err(format!("league.p_hard must be positive, got {}", self.p_hard));
        }
        if self.main_mode == EncoderMode::Fis && !self.allow_fis_main {
            return Err(
                "league.main_mode FIS requires league.allow_fis_main (structure ablation)".into()
            );
        }
        Ok(())
    }

    pub fn weighting_for(&self, role: Role) -> Weighting {
        match role {
            Role::Main => self.pfsp_main,
            Role::MainExploiter => self.pfsp_main_exploiter,
            Role::LeagueExploiter => self.pfsp_league_exploiter,
        }
    }
}

/// A live, training member of the league.
#[derive(Debug, Clone)]
pub struct LeagueMember {
    pub role: Role,
    pub encoder_mode: EncoderMode,
    pub params: PolicyParams,
    pub steps_in_iteration: u64,
    pub total_steps: u64,
    /// Current iteration, 1-based; bootstrap snapshots carry generation 0.
    pub generation: u32,
    pub resets: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeagueEventKind {
    /// A frozen copy joined the pool.
    Snapshot { snapshot_id: u64, by_timeout: bool },
    /// The member's live parameters were replaced.
    Reset { from_snapshot: Option<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeagueEvent {
    pub role: Role,
    /// Generation the event closed (snapshots) or opened from (resets).
    pub generation: u32,
    pub total_steps: u64,
    pub kind: LeagueEventKind,
}

/// The league state machine. The engine owns members, the snapshot pool,
/// and the win-rate table; it decides when members snapshot and how resets
/// pick their target. It plays no matches itself: match results are fed in
/// through [`LeagueEngine::record_match`], which is what keeps the rule
/// logic testable with injected outcomes.
#[derive(Debug)]
pub struct LeagueEngine {
    pub cfg: LeagueConfig,
    members: BTreeMap<Role, LeagueMember>,
    pool: Vec<PolicySnapshot>,
    pub table: WinRateTable,
    events: Vec<LeagueEvent>,
    next_snapshot_id: u64,
    seed: u64,
    fresh_inits: u64,
}

impl LeagueEngine {
    /// Build the three members and bootstrap the pool with one snapshot of
    /// each member's random initialization, so opponent sampling is
    /// well-defined from step 0.
    pub fn new(
        cfg: LeagueConfig,
        base_net: NetConfig,
        seed: u64,
    ) -> Result<Self, LeagueError> {
        cfg.validate().map_err(LeagueError::BadConfig)?;
        let mode_for = |role: Role| match role {
            Role::Main | Role::MainExploiter => cfg.main_mode,
            Role::LeagueExploiter => EncoderMode::Fis,
        };
        let mut members = BTreeMap::new();
        for (k, role) in Role::ALL.iter().enumerate() {
            let mode = mode_for(*role);
            let net = NetConfig { mode, ..base_net };
            members.insert(
                *role,
                LeagueMember {
                    role: *role,
                    encoder_mode: mode,
                    params: PolicyParams::init(net, derive_seed(seed, &[0x5eed, k as u64])),
                    steps_in_iteration: 0,
                    total_steps: 0,
                    generation: 1,
                    resets: 0,
                },
            );
        }
        let mut engine = Self {
            cfg,
            members,
            pool: Vec::new(),
            table: WinRateTable::new(0.0),
            events: Vec::new(),
            next_snapshot_id: 0,
            seed,
            fresh_inits: 0,
        };
        engine.table = WinRateTable::new(engine.cfg.winrate_smoothing);
        for role in Role::ALL {
            engine.freeze(role, 0);
        }
        Ok(engine)
    }

    pub fn member(&self, role: Role) -> &LeagueMember {
        &self.members[&role]
    }

    pub fn member_mut(&mut self, role: Role) -> &mut LeagueMember {
        self.members.get_mut(&role).expect("all roles exist")
    }

    pub fn pool(&self) -> &[PolicySnapshot] {
        &self.pool
    }

    pub fn events(&self) -> &[LeagueEvent] {
        &self.events
    }

    pub fn snapshot(&self, id: u64) -> Result<&PolicySnapshot, LeagueError> {
        self.pool.iter().find(|s| s.id == id).ok_or(LeagueError::UnknownSnapshot(id))
    }

    /// Resolve an opponent to parameters and encoder mode.
    pub fn opponent_view(&self, opp: OpponentId) -> Result<(Arc<PolicyParams>, EncoderMode), LeagueError> {
        match opp {
            OpponentId::Snapshot(id) => {
                let snap = self.snapshot(id)?;
                Ok((Arc::clone(&snap.params), snap.encoder_mode))
            }
            OpponentId::Live(role) => {
                let m = self.member(role);
                Ok((Arc::new(m.params.clone()), m.encoder_mode))
            }
        }
    }

    /// Candidate opponent set per role:
    /// the main agent plays the whole pool; the main exploiter plays the
    /// live main agent (during the grace iterations it also samples
    /// main-agent snapshots); the league exploiter plays everyone,
    /// snapshots and live members alike.
    pub fn candidates(&self, role: Role) -> Vec<OpponentId> {
        match role {
            Role::Main => self.pool.iter().map(|s| OpponentId::Snapshot(s.id)).collect(),
            Role::MainExploiter => {
                let mut out = vec![OpponentId::Live(Role::Main)];
                if self.member(role).generation <= self.cfg.reset_grace_iterations {
                    out.extend(
                        self.pool
                            .iter()
                            .filter(|s| s.source_role == Role::Main)
                            .map(|s| OpponentId::Snapshot(s.id)),
                    );
                }
                out
            }
            Role::LeagueExploiter => {
                let mut out = vec![OpponentId::Live(Role::Main), OpponentId::Live(Role::MainExploiter)];
                out.extend(self.pool.iter().map(|s| OpponentId::Snapshot(s.id)));
                out
            }
        }
    }

    /// Draw an opponent with probabilities from the role's weighting over
    /// current win-rate estimates.
    pub fn sample_opponent(&self, role: Role, rng: &mut impl Rng) -> Result<OpponentId, LeagueError> {
        let candidates = self.candidates(role);
        if candidates.is_empty() {
            return Err(LeagueError::EmptyCandidates(role));
        }
        let winrates: Vec<f64> =
            candidates.iter().map(|&c| self.table.rate_or_default(role, c)).collect();
        let weights = pfsp_weights(&winrates, self.cfg.weighting_for(role), self.cfg.p_hard)
            .map_err(|_| LeagueError::EmptyCandidates(role))?;
        Ok(candidates[sample_index(&weights, rng)])
    }

    pub fn record_match(&mut self, role: Role, opponent: OpponentId, won: bool) {
        self.table.record(role, opponent, won);
    }

    pub fn add_steps(&mut self, role: Role, steps: u64) {
        let m = self.member_mut(role);
        m.steps_in_iteration += steps;
        m.total_steps += steps;
    }

    /// Lowest win rate across the member's candidates (unseen pairs count
    /// as 0.5); reported in metrics.
    pub fn min_candidate_winrate(&self, role: Role) -> f64 {
        self.candidates(role)
            .iter()
            .map(|&c| self.table.rate_or_default(role, c))
            .fold(f64::INFINITY, f64::min)
            .min(1.0)
    }

    /// True when the member clears the win threshold against every
    /// candidate (each with enough matches) or hits the iteration timeout.
    pub fn should_snapshot(&self, role: Role) -> bool {
        let m = self.member(role);
        if m.steps_in_iteration >= self.cfg.iteration_timeout_steps {
            return true;
        }
        let candidates = self.candidates(role);
        if candidates.is_empty() {
            return false;
        }
        candidates.iter().all(|&c| match self.table.get(role, c) {
            Some(e) => e.matches >= self.cfg.min_matches_for_threshold && e.ema >= self.cfg.win_threshold,
            None => false,
        })
    }

    fn freeze(&mut self, role: Role, generation: u32) -> u64 {
        let m = &self.members[&role];
        let id = self.next_snapshot_id;
        self.next_snapshot_id += 1;
        self.pool.push(PolicySnapshot {
            id,
            source_role: role,
            generation,
            creation_step: m.total_steps,
            encoder_mode: m.encoder_mode,
            params: Arc::new(m.params.clone()),
        });
        id
    }

    /// Close the member's iteration: freeze a copy into the pool, apply the
    /// role's reset rule, advance the generation, and zero the step counter.
    ///
    /// Resets replace the live parameters with a uniformly random choice
    /// among the member's own snapshots from the previous three iterations
    /// (fresh random initialization if none exist, which cannot happen
    /// after bootstrap).
    pub fn snapshot_and_maybe_reset(&mut self, role: Role, rng: &mut impl Rng) {
        let by_timeout =
            self.members[&role].steps_in_iteration >= self.cfg.iteration_timeout_steps;
        let generation = self.members[&role].generation;
        let snapshot_id = self.freeze(role, generation);
        let total_steps = self.members[&role].total_steps;
        self.events.push(LeagueEvent {
            role,
            generation,
            total_steps,
            kind: LeagueEventKind::Snapshot { snapshot_id, by_timeout },
        });

        let do_reset = match role {
            Role::Main => false,
            Role::MainExploiter => true,
            Role::LeagueExploiter => {
                generation > self.cfg.reset_grace_iterations
                    && rng.gen_range(0.0..1.0) < self.cfg.league_exploiter_reset_prob
            }
        };
        if do_reset {
            let from_snapshot = self.reset_member(role, generation, rng);
            self.events.push(LeagueEvent {
                role,
                generation,
                total_steps,
                kind: LeagueEventKind::Reset { from_snapshot },
            });
        }

        let m = self.member_mut(role);
        m.generation += 1;
        m.steps_in_iteration = 0;
    }

    fn reset_member(&mut self, role: Role, generation: u32, rng: &mut impl Rng) -> Option<u64> {
        let window_start = generation.saturating_sub(2);
        let choices: Vec<(u64, Arc<PolicyParams>)> = self
            .pool
            .iter()
            .filter(|s| {
                s.source_role == role && s.generation >= window_start && s.generation <= generation
            })
            .map(|s| (s.id, Arc::clone(&s.params)))
            .collect();
        let m = self.members.get_mut(&role).expect("all roles exist");
        m.resets += 1;
        if choices.is_empty() {
            self.fresh_inits += 1;
            let net = m.params.cfg;
            m.params = PolicyParams::init(net, derive_seed(self.seed, &[0xf4e5, self.fresh_inits]));
            None
        } else {
            let (id, params) = &choices[rng.gen_range(0..choices.len())];
            m.params = (**params).clone();
            Some(*id)
        }
    }

    /// A member is done once it has completed the configured iterations.
    pub fn is_done(&self, role: Role) -> bool {
        self.member(role).generation > self.cfg.total_iterations
    }

    pub fn all_done(&self) -> bool {
        Role::ALL.iter().all(|&r| self.is_done(r))
    }
}
