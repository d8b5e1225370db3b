//! Classic BOIDS baseline: separation, cohesion and alignment, always
//! steering, with no free-motion exemption at close range.

use super::MotionDecision;
use crate::perception::Observation;
use crate::world::{BoidsWeights, SimParams, Vec2};

const LEADER_COHESION_WEIGHT: f64 = 3.0;

pub fn boids_plan(obs: &Observation, weights: &BoidsWeights, params: &SimParams) -> MotionDecision {
    if obs.neighbors.is_empty() {
        return MotionDecision::FreeMotion;
    }
    let sep_radius = 2.0 * params.avoid_distance;

    let mut separation = Vec2::ZERO;
    let mut centroid = Vec2::ZERO;
    let mut total_weight = 0.0;
    let mut heading_sum = Vec2::ZERO;
    for n in &obs.neighbors {
        let unit = Vec2::from_angle(n.bearing);
        if n.range < sep_radius && n.range > 0.0 {
            separation += -unit * (1.0 / n.range);
        }
        let w = if n.is_leader { LEADER_COHESION_WEIGHT } else { 1.0 };
        centroid += unit * (n.range * w);
        total_weight += w;
        heading_sum += Vec2::from_angle(n.relative_heading);
    }
    let centroid = centroid * (1.0 / total_weight);
    let cohesion = centroid.normalized().unwrap_or(Vec2::ZERO);
    let alignment = heading_sum.normalized().unwrap_or(Vec2::ZERO);

    let resultant = separation * weights.w_sep + cohesion * weights.w_coh + alignment * weights.w_ali;
    if resultant.length() < 1e-6 {
        return MotionDecision::FreeMotion;
    }
    MotionDecision::MoveToward {
        bearing: resultant.angle(),
        range: centroid.length().min(params.sensing_range),
        target_is_leader: false,
    }
}
