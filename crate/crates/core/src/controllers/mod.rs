//! Decision layer. Every controller consumes only an [`Observation`]:
//! planning picks a body-frame target, tracking turns it into one stimulus.
//!
//! [`Observation`]: crate::perception::Observation

mod boids;
mod leader;
mod tgi;

pub use boids::boids_plan;
pub use leader::leader_plan;
pub use tgi::{sector_of, target_sector, tgi_plan, tgi_track};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Output of motion planning: either leave the insect alone or move toward
/// a point given in the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MotionDecision {
    FreeMotion,
    MoveToward {
        bearing: f64,
        range: f64,
        target_is_leader: bool,
    },
}

impl MotionDecision {
    pub fn is_free(&self) -> bool {
        matches!(self, MotionDecision::FreeMotion)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StimKind {
    None,
    SteerLeft,
    SteerRight,
    Accelerate,
}

impl StimKind {
    pub fn label(self) -> &'static str {
        match self {
            StimKind::None => "none",
            StimKind::SteerLeft => "steer_left",
            StimKind::SteerRight => "steer_right",
            StimKind::Accelerate => "accelerate",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "none" => StimKind::None,
            "steer_left" => StimKind::SteerLeft,
            "steer_right" => StimKind::SteerRight,
            "accelerate" => StimKind::Accelerate,
            _ => return None,
        })
    }
}

/// One stimulus for one step. `voltage` is 0 iff `kind` is `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StimCommand {
    pub kind: StimKind,
    pub voltage: f64,
}

impl StimCommand {
    pub const fn none() -> Self {
        StimCommand {
            kind: StimKind::None,
            voltage: 0.0,
        }
    }

    pub const fn steer_left(voltage: f64) -> Self {
        StimCommand {
            kind: StimKind::SteerLeft,
            voltage,
        }
    }

    pub const fn steer_right(voltage: f64) -> Self {
        StimCommand {
            kind: StimKind::SteerRight,
            voltage,
        }
    }

    pub const fn accelerate(voltage: f64) -> Self {
        StimCommand {
            kind: StimKind::Accelerate,
            voltage,
        }
    }

    pub fn is_active(&self) -> bool {
        self.voltage > 0.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ControlError {
    #[error("follower controller received an observation with goal information")]
    GoalVisibleToFollower,
    #[error("leader controller received an observation without goal information")]
    GoalMissing,
}
