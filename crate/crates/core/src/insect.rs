//! Stochastic behavior model of a single cyborg insect.
//!
//! Free motion is a correlated random walk with an innate avoidance turn away
//! from close neighbors and obstacles. Under stimulation the avoidance reflex
//! is suppressed: a steered or accelerated insect goes where it is driven,
//! which is what lets stimulated insects in close proximity entangle.
//! Individual variability enters through a log-normal gain multiplier on
//! both stimulation channels.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::controllers::{StimCommand, StimKind};
use crate::perception::Observation;
use crate::world::terrain::push_out_of_obstacles;
use crate::world::{
    fence_clearance, obstacle_clearance, terrain_speed_factor, wrap_angle, AgentState, Condition, Config, InsectParams,
    Terrain, Vec2,
};

/// Per-individual response characteristics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InsectProfile {
    pub free_speed: f64,
    /// rad/s per volt of steering stimulus.
    pub turn_gain: f64,
    /// m/s² per volt of acceleration stimulus.
    pub accel_gain: f64,
    /// rad/√s.
    pub heading_noise_sigma: f64,
    /// Scales both `turn_gain` and `accel_gain`.
    pub gain_multiplier: f64,
}

impl InsectProfile {
    pub fn baseline(p: &InsectParams) -> Self {
        InsectProfile {
            free_speed: p.free_speed,
            turn_gain: p.turn_gain,
            accel_gain: p.accel_gain,
            heading_noise_sigma: p.heading_noise_sigma,
            gain_multiplier: 1.0,
        }
    }

    pub fn max_speed(&self) -> f64 {
        2.0 * self.free_speed
    }
}

/// Draws one individual: baseline behavior with a gain multiplier that is
/// log-normal with median 1 and log-std `sigma_log`.
pub fn sample_profile<R: Rng + ?Sized>(rng: &mut R, sigma_log: f64, baseline: &InsectParams) -> InsectProfile {
    let z: f64 = rng.sample(StandardNormal);
    InsectProfile {
        gain_multiplier: (sigma_log * z).exp(),
        ..InsectProfile::baseline(baseline)
    }
}

/// Shared constants of the insect model that are not per-individual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InsectModel {
    pub avoid_distance: f64,
    pub avoid_turn_rate: f64,
    pub speed_relax_time: f64,
    pub v_max: f64,
    pub body_radius: f64,
    pub p_snag: f64,
    pub p_escape_free: f64,
    pub p_escape_stim: f64,
}

impl InsectModel {
    pub fn from_config(c: &Config) -> Self {
        InsectModel {
            avoid_distance: c.params.avoid_distance,
            avoid_turn_rate: c.insect.avoid_turn_rate,
            speed_relax_time: c.insect.speed_relax_time,
            v_max: c.params.v_max,
            body_radius: c.params.body_radius,
            p_snag: c.insect.p_snag,
            p_escape_free: c.insect.p_escape_free,
            p_escape_stim: c.insect.p_escape_stim,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InsectError {
    #[error("stimulus of {voltage} V exceeds the {cap} V limit")]
    VoltageAboveCap { voltage: f64, cap: f64 },
    #[error("stimulated step needs a positive voltage (got {0} V); use free motion instead")]
    NoStimulus(f64),
}

fn noise<R: Rng + ?Sized>(rng: &mut R, sigma: f64, dt: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        let z: f64 = rng.sample(StandardNormal);
        sigma * dt.sqrt() * z
    }
}

/// Turn direction away from something at body-frame `bearing`, weighted so
/// that things ahead matter most and things directly behind not at all.
fn away_turn(bearing: f64, proximity: f64) -> f64 {
    let sign = if bearing > 0.0 { -1.0 } else { 1.0 };
    let weight = 0.5 * (1.0 + bearing.cos());
    sign * weight * proximity
}

/// Moves along `heading` and keeps the body inside the fence and out of rocks.
fn advance(position: Vec2, heading: f64, distance: f64, terrain: &Terrain) -> Vec2 {
    let moved = terrain.clamp(position + Vec2::from_angle(heading) * distance);
    terrain.clamp(push_out_of_obstacles(moved, terrain))
}

/// One unstimulated step: random-walk heading, innate avoidance, speed
/// relaxing toward the terrain-limited cruising speed.
pub fn free_motion_step<R: Rng + ?Sized>(
    state: &AgentState,
    obs: &Observation,
    terrain: &Terrain,
    profile: &InsectProfile,
    model: &InsectModel,
    rng: &mut R,
    dt: f64,
) -> AgentState {
    debug_assert_eq!(state.condition, Condition::Normal);
    let d_avoid = model.avoid_distance;

    let mut turn = 0.0;
    for n in obs.neighbors.iter().take_while(|n| n.range < d_avoid) {
        turn += away_turn(n.bearing, 1.0 - n.range / d_avoid);
    }
    // rocks and the fence repel the same way
    for clearance in [
        obstacle_clearance(state.position, terrain),
        fence_clearance(state.position, terrain),
    ] {
        if let Some(away) = clearance.direction_away {
            if clearance.distance < d_avoid {
                let toward = wrap_angle((-away).angle() - state.heading);
                turn += away_turn(toward, 1.0 - clearance.distance.max(0.0) / d_avoid);
            }
        }
    }
    let max_turn = std::f64::consts::FRAC_PI_2;
    let avoid = (model.avoid_turn_rate * turn * dt).clamp(-max_turn, max_turn);
    let heading = wrap_angle(state.heading + avoid + noise(rng, profile.heading_noise_sigma, dt));

    let target = profile.free_speed * terrain_speed_factor(state.position, terrain);
    let relax = (dt / model.speed_relax_time).min(1.0);
    let speed = (state.speed + (target - state.speed) * relax).clamp(0.0, profile.max_speed());

    AgentState {
        position: advance(state.position, heading, speed * dt, terrain),
        heading,
        speed,
        stimulated: false,
        ..state.clone()
    }
}

/// One step under a nonzero stimulus. Avoidance is suppressed; obstacles
/// still block.
pub fn stimulated_step<R: Rng + ?Sized>(
    state: &AgentState,
    cmd: StimCommand,
    terrain: &Terrain,
    profile: &InsectProfile,
    model: &InsectModel,
    rng: &mut R,
    dt: f64,
) -> Result<AgentState, InsectError> {
    let v = cmd.voltage;
    if v > model.v_max {
        return Err(InsectError::VoltageAboveCap {
            voltage: v,
            cap: model.v_max,
        });
    }
    if !(v > 0.0) || cmd.kind == StimKind::None {
        return Err(InsectError::NoStimulus(v));
    }
    let sigma = 0.5 * profile.heading_noise_sigma;
    let turn_rate = profile.turn_gain * profile.gain_multiplier * v;
    let (heading, speed) = match cmd.kind {
        StimKind::SteerLeft => (state.heading + turn_rate * dt, state.speed),
        StimKind::SteerRight => (state.heading - turn_rate * dt, state.speed),
        StimKind::Accelerate => {
            let boost = profile.accel_gain * profile.gain_multiplier * v * dt;
            let cap = profile.max_speed();
            (state.heading, (state.speed + boost).min(cap.max(state.speed)))
        }
        StimKind::None => unreachable!("rejected above"),
    };
    let heading = wrap_angle(heading + noise(rng, sigma, dt));
    Ok(AgentState {
        position: advance(state.position, heading, speed * dt, terrain),
        heading,
        speed,
        stimulated: true,
        ..state.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnagTransition {
    Snagged,
    Escaped,
}

/// Snag model: a Normal insect pressing against a rock edge may wedge
/// itself; a Snagged one frees itself far more readily when driven forward.
pub fn snag_update<R: Rng + ?Sized>(
    state: &AgentState,
    cmd: StimCommand,
    terrain: &Terrain,
    model: &InsectModel,
    rng: &mut R,
    dt: f64,
) -> (AgentState, Option<SnagTransition>) {
    let mut next = state.clone();
    match state.condition {
        Condition::Normal => {
            let c = obstacle_clearance(state.position, terrain);
            let Some(away) = c.direction_away else {
                return (next, None);
            };
            let pressing = state.velocity().dot(-away) > 0.0;
            if c.distance < model.body_radius / 2.0 && pressing {
                let p = (model.p_snag * dt).min(1.0);
                if rng.random::<f64>() < p {
                    next.condition = Condition::Snagged;
                    next.speed = 0.0;
                    return (next, Some(SnagTransition::Snagged));
                }
            }
            (next, None)
        }
        Condition::Snagged => {
            next.speed = 0.0;
            let rate = if cmd.kind == StimKind::Accelerate {
                model.p_escape_stim
            } else {
                model.p_escape_free
            };
            if rng.random::<f64>() < (rate * dt).min(1.0) {
                let away = obstacle_clearance(state.position, terrain)
                    .direction_away
                    .unwrap_or_else(|| Vec2::from_angle(state.heading + std::f64::consts::PI));
                let freed = terrain.clamp(state.position + away * model.body_radius);
                next.position = terrain.clamp(push_out_of_obstacles(freed, terrain));
                next.condition = Condition::Normal;
                return (next, Some(SnagTransition::Escaped));
            }
            (next, None)
        }
        Condition::Entangled { .. } => (next, None),
    }
}
