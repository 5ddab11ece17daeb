//! Drop-based system-level simulator for a two-tier CDMA uplink in which
//! in-building femtocells share spectrum with a 19-cell macrocell network.
//!
//! Femtocell users cap their maximum transmit power so that the cross-tier
//! interference they cause at the most-affected macrocell BS stays under a
//! threshold. Two controllers are provided:
//!
//! - open loop: the threshold is fixed at `alpha * N0WF / J`;
//! - closed loop: the threshold adapts to the noise-and-interference level
//!   broadcast by the macrocell BS relative to its femto-silent baseline.
//!
//! The crate is organised bottom-up: [`units`] and [`rng`] are plumbing,
//! [`deployment`] and [`channel`] build one Monte-Carlo drop, [`powerctl`]
//! and [`linkadapt`] hold the per-user decision rules, [`engine`] runs the
//! frame loop, [`metrics`] aggregates results and [`cli`] drives sweeps.

pub mod channel;
pub mod cli;
pub mod config;
pub mod deployment;
pub mod engine;
pub mod error;
pub mod linkadapt;
pub mod metrics;
pub mod powerctl;
pub mod rng;
pub mod units;

pub use config::{FemtoLayout, ScenarioConfig, Scheme, WallMode};
pub use engine::{run_drop, DropResult, Simulation};
pub use error::{Error, Result};
pub use units::{db_to_linear, linear_to_db, Decibel, PowerLinear};
