//! Strictly local, body-frame observations.
//!
//! An [`Observation`] holds no absolute coordinates and no terrain data. The
//! only global quantity that leaks through is the goal, and only the leader
//! receives it.

use thiserror::Error;

use crate::world::{wrap_angle, AgentId, AgentState, SimParams, Terrain};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborObs {
    pub id: AgentId,
    pub range: f64,
    /// Direction to the neighbor relative to the observer's heading, in [-π, π).
    pub bearing: f64,
    pub is_leader: bool,
    /// Neighbor heading minus observer heading, wrapped.
    pub relative_heading: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Sorted by ascending range, ties by id.
    pub neighbors: Vec<NeighborObs>,
    pub self_speed: f64,
    pub goal: Option<GoalObs>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoalObs {
    pub bearing: f64,
    pub range: f64,
    /// Radius of the goal area, so the leader can tell it has arrived.
    pub radius: f64,
}

impl Observation {
    /// Neighbors within `radius` (inclusive).
    pub fn count_within(&self, radius: f64) -> usize {
        self.neighbors.iter().take_while(|n| n.range <= radius).count()
    }

    pub fn leader(&self) -> Option<&NeighborObs> {
        self.neighbors.iter().find(|n| n.is_leader)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("no agent with id {0}")]
    UnknownAgent(AgentId),
}

/// Builds what agent `observer_id` may sense: every other agent within the
/// sensing range, expressed in the observer's body frame.
pub fn observe(
    observer_id: AgentId,
    states: &[AgentState],
    terrain: &Terrain,
    params: &SimParams,
) -> Result<Observation, PerceptionError> {
    let me = states
        .iter()
        .find(|s| s.id == observer_id)
        .ok_or(PerceptionError::UnknownAgent(observer_id))?;

    let mut neighbors: Vec<NeighborObs> = states
        .iter()
        .filter(|s| s.id != observer_id)
        .filter_map(|other| {
            let offset = other.position - me.position;
            let range = offset.length();
            (range <= params.sensing_range).then(|| NeighborObs {
                id: other.id,
                range,
                bearing: body_bearing(offset.y.atan2(offset.x), me.heading),
                is_leader: other.is_leader(),
                relative_heading: wrap_angle(other.heading - me.heading),
            })
        })
        .collect();
    neighbors.sort_by(|a, b| a.range.total_cmp(&b.range).then(a.id.cmp(&b.id)));

    let goal = me.is_leader().then(|| {
        let offset = terrain.goal.center - me.position;
        GoalObs {
            bearing: body_bearing(offset.y.atan2(offset.x), me.heading),
            range: offset.length(),
            radius: terrain.goal.radius,
        }
    });

    Ok(Observation {
        neighbors,
        self_speed: me.speed,
        goal,
    })
}

fn body_bearing(world_angle: f64, heading: f64) -> f64 {
    wrap_angle(world_angle - heading)
}
