//! Tour-group control: free motion when the neighborhood is crowded enough,
//! otherwise move toward the leader or toward the most populated direction.

use rand::Rng;
use std::f64::consts::TAU;

use super::{ControlError, MotionDecision, StimCommand};
use crate::perception::{NeighborObs, Observation};
use crate::world::{SimParams, TargetSelection};

/// Sector index of a body-frame bearing. Sector 0 starts at the heading and
/// indices increase counter-clockwise.
pub fn sector_of(bearing: f64, sectors: usize) -> usize {
    let width = TAU / sectors as f64;
    let k = (bearing.rem_euclid(TAU) / width).floor() as usize;
    k.min(sectors - 1)
}

/// The most populated sector among all visible neighbors. Ties go to the
/// sector whose nearest member is closest, then to the lowest index.
pub fn target_sector(neighbors: &[NeighborObs], sectors: usize) -> Option<usize> {
    let mut count = vec![0usize; sectors];
    let mut nearest = vec![f64::INFINITY; sectors];
    for n in neighbors {
        let k = sector_of(n.bearing, sectors);
        count[k] += 1;
        nearest[k] = nearest[k].min(n.range);
    }
    (0..sectors).filter(|&k| count[k] > 0).min_by(|&a, &b| {
        count[b]
            .cmp(&count[a])
            .then(nearest[a].total_cmp(&nearest[b]))
            .then(a.cmp(&b))
    })
}

fn toward(n: &NeighborObs) -> MotionDecision {
    MotionDecision::MoveToward {
        bearing: n.bearing,
        range: n.range,
        target_is_leader: n.is_leader,
    }
}

/// Motion planning for a follower.
///
/// `rng` is only drawn from when the config asks for random target selection.
pub fn tgi_plan<R: Rng + ?Sized>(
    obs: &Observation,
    params: &SimParams,
    rng: &mut R,
) -> Result<MotionDecision, ControlError> {
    if obs.goal.is_some() {
        return Err(ControlError::GoalVisibleToFollower);
    }
    // FM rule
    if obs.count_within(params.free_range) >= params.neighbor_threshold {
        return Ok(MotionDecision::FreeMotion);
    }
    // MTC rule
    if let Some(leader) = obs.leader() {
        return Ok(toward(leader));
    }
    let Some(sector) = target_sector(&obs.neighbors, params.num_sectors) else {
        return Ok(MotionDecision::FreeMotion);
    };
    // neighbors are range-sorted, so the first member is the nearest
    let members: Vec<&NeighborObs> = obs
        .neighbors
        .iter()
        .filter(|n| sector_of(n.bearing, params.num_sectors) == sector)
        .collect();
    let target = match params.target_selection {
        TargetSelection::Nearest => members[0],
        TargetSelection::Random => members[rng.random_range(0..members.len())],
    };
    Ok(toward(target))
}

/// Trajectory tracking: steer first, otherwise accelerate, each behind its gate.
pub fn tgi_track(decision: &MotionDecision, self_speed: f64, params: &SimParams) -> StimCommand {
    let MotionDecision::MoveToward { bearing, range, .. } = *decision else {
        return StimCommand::none();
    };
    let cmd = if bearing.abs() >= params.theta_threshold() {
        let v = (params.steer_gain * bearing.abs()).min(params.v_max);
        if bearing > 0.0 {
            StimCommand::steer_left(v)
        } else {
            StimCommand::steer_right(v)
        }
    } else if self_speed <= params.v_threshold {
        StimCommand::accelerate((params.accel_gain * range).min(params.v_max))
    } else {
        StimCommand::none()
    };
    // a zero gain or zero range degenerates to no stimulus
    if cmd.voltage > 0.0 {
        cmd
    } else {
        StimCommand::none()
    }
}
