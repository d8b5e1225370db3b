use super::{ControlError, MotionDecision};
use crate::perception::Observation;
use crate::world::SimParams;

/// The leader heads straight for the goal and stops stimulating once inside it.
pub fn leader_plan(obs: &Observation, params: &SimParams) -> Result<MotionDecision, ControlError> {
    let goal = obs.goal.ok_or(ControlError::GoalMissing)?;
    if goal.range <= goal.radius {
        return Ok(MotionDecision::FreeMotion);
    }
    Ok(MotionDecision::MoveToward {
        bearing: goal.bearing,
        range: goal.range.min(params.sensing_range),
        target_is_leader: false,
    })
}
