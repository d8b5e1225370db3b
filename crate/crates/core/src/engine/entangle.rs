//! Entanglement: stimulated insects that end a step closer than `d_ent`
//! may lock together. Candidate pairs come from a uniform hash grid.

use std::collections::HashMap;

use super::rng::pair_uniform;
use crate::world::{AgentId, AgentState, Condition, SimParams};

/// Unordered pair, stored with the smaller id first.
pub type Pair = (AgentId, AgentId);

pub fn ordered(a: AgentId, b: AgentId) -> Pair {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A pair that may entangle this step: both Normal, closer than `d_ent`,
/// at least one stimulated.
pub fn eligible(a: &AgentState, b: &AgentState, params: &SimParams) -> bool {
    a.condition == Condition::Normal
        && b.condition == Condition::Normal
        && (a.stimulated || b.stimulated)
        && a.position.distance(b.position) < params.entangle_distance
}

/// Index pairs `(i, j)`, `i < j`, whose positions are within `radius`,
/// sorted. Grid cells are `radius` wide so only adjacent cells are scanned.
pub fn close_pairs(agents: &[AgentState], radius: f64) -> Vec<(usize, usize)> {
    let cell = |x: f64| (x / radius).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, a) in agents.iter().enumerate() {
        grid.entry((cell(a.position.x), cell(a.position.y)))
            .or_default()
            .push(i);
    }
    let mut pairs = Vec::new();
    for (i, a) in agents.iter().enumerate() {
        let (cx, cy) = (cell(a.position.x), cell(a.position.y));
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j > i && a.position.distance(agents[j].position) < radius {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Resolves this step's entanglements in place. Eligibility is judged on the
/// conditions at entry, so one agent can lock with several neighbors at once.
/// Returns the newly entangled pairs in ascending order.
pub fn detect_entanglements(agents: &mut [AgentState], params: &SimParams, seed: u64, step: u64) -> Vec<Pair> {
    let hits: Vec<(usize, usize)> = close_pairs(agents, params.entangle_distance)
        .into_iter()
        .filter(|&(i, j)| eligible(&agents[i], &agents[j], params))
        .filter(|&(i, j)| pair_uniform(seed, step, agents[i].id, agents[j].id) < params.entangle_prob)
        .collect();
    lock(agents, &hits, params);
    let mut pairs: Vec<Pair> = hits.iter().map(|&(i, j)| ordered(agents[i].id, agents[j].id)).collect();
    pairs.sort_unstable();
    pairs
}

fn lock(agents: &mut [AgentState], hits: &[(usize, usize)], params: &SimParams) {
    for &(i, j) in hits {
        for k in [i, j] {
            agents[k].condition = Condition::Entangled {
                remaining: params.entangle_duration,
            };
            agents[k].speed = 0.0;
        }
    }
}
