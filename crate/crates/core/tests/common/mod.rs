#![allow(dead_code)]

use rand::Rng;
use swarm_sim::perception::{NeighborObs, Observation};
use swarm_sim::world::{AgentId, AgentState, Circle, Condition, Role, Terrain, Vec2};

pub fn agent(id: AgentId, x: f64, y: f64, heading: f64) -> AgentState {
    AgentState {
        id,
        role: if id == 0 { Role::Leader } else { Role::Follower },
        position: Vec2::new(x, y),
        heading,
        speed: 0.0,
        stimulated: false,
        condition: Condition::Normal,
    }
}

pub fn open_field(side: f64) -> Terrain {
    Terrain {
        side,
        obstacles: vec![],
        hills: vec![],
        goal: Circle::new(side / 2.0, side - 0.3, 0.25),
        start_width: side / 2.0,
        start_depth: 0.3,
    }
}

/// `n` agents at uniform positions in `[0, extent]²` with uniform headings.
pub fn random_agents<R: Rng>(rng: &mut R, n: usize, extent: f64) -> Vec<AgentState> {
    (0..n as AgentId)
        .map(|id| {
            let mut a = agent(id, rng.random_range(0.0..extent), rng.random_range(0.0..extent), 0.0);
            a.heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            a.speed = rng.random_range(0.0..0.12);
            a
        })
        .collect()
}

/// Follower observation with neighbors sorted the way `observe` sorts them.
pub fn observation(mut neighbors: Vec<NeighborObs>, self_speed: f64) -> Observation {
    neighbors.sort_by(|a, b| a.range.total_cmp(&b.range).then(a.id.cmp(&b.id)));
    Observation {
        neighbors,
        self_speed,
        goal: None,
    }
}

pub fn angle_diff(a: f64, b: f64) -> f64 {
    swarm_sim::world::wrap_angle(a - b).abs()
}
