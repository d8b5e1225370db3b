//! Deterministic 2D simulator for leader-follower navigation of cyborg
//! insect swarms.
//!
//! Layers, bottom up:
//!
//! * [`world`]: geometry, agent state, terrain, configuration.
//! * [`perception`]: the local body-frame view each controller gets.
//! * [`insect`]: stochastic free motion and stimulus response of one insect.
//! * [`controllers`]: tour-group (TGI) control, the BOIDS baseline, the leader.
//! * [`engine`]: the fixed-step loop, events and trial logs.
//! * [`metrics`]: autonomy, entanglement and success statistics.
//! * [`plot`] and [`cli`]: SVG output and the command-line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod controllers;
pub mod engine;
pub mod insect;
pub mod metrics;
pub mod perception;
pub mod plot;
pub mod world;

pub use controllers::{MotionDecision, StimCommand, StimKind};
pub use engine::{run_trial, Simulation, TrialLog};
pub use metrics::TrialMetrics;
pub use world::{Config, SimParams, Vec2};
