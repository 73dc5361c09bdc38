//! Self-play league training for a two-fighter arena game.
//!
//! The crate is organized around a deterministic frame-stepped simulator
//! ([`game`]), three observation encoders that progressively strip identity
//! information ([`encoders`]), a small multi-head policy network trained with
//! clipped policy gradients ([`policy`]), league orchestration with
//! prioritized opponent sampling ([`league`]), regret-matching character
//! selection ([`matchup`]), and rating/behavior evaluation ([`eval`]).
//! [`config`] and [`persist`] bind everything into reproducible runs.

pub mod agents;
pub mod config;
pub mod encoders;
pub mod eval;
pub mod game;
pub mod harness;
pub mod league;
pub mod matchup;
pub mod persist;
pub mod policy;
pub mod rng;
