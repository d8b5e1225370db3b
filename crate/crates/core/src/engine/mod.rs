//! Fixed-timestep simulation loop.
//!
//! Each step is a synchronous update from the previous state:
//! perceive → plan → track → actuate → integrate → resolve events → log.

pub mod entangle;
pub mod log;
pub mod rng;

pub use entangle::{close_pairs, detect_entanglements, eligible, Pair};
pub use log::{AgentRecord, Event, EventKind, StepRecord, Termination, TrialLog};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::controllers::{boids_plan, leader_plan, tgi_plan, tgi_track, ControlError, StimCommand};
use crate::insect::{
    free_motion_step, sample_profile, snag_update, stimulated_step, InsectError, InsectModel, InsectProfile,
    SnagTransition,
};
use crate::perception::{observe, Observation, PerceptionError};
use crate::world::terrain::push_out_of_obstacles;
use crate::world::{obstacle_clearance, AgentId, AgentState, Condition, Config, ControllerChoice, Role};
use rng::{stream, StreamKind, WORLD_STREAM};

const PLACEMENT_ATTEMPTS: usize = 20_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("need at least 2 agents (got {0})")]
    TooFewAgents(usize),
    #[error("start zone too small: placed {placed} of {requested} agents without overlap")]
    StartZoneTooSmall { placed: usize, requested: usize },
    #[error("agent ids must be 0..n in order with agent 0 the only leader")]
    BadRoster,
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Insect(#[from] InsectError),
    #[error("malformed log at row {row}: {reason}")]
    MalformedLog { row: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub time: f64,
    /// Number of completed steps; `time` is derived from it.
    pub step: u64,
    /// Ordered by id; ids are `0..n` and agent 0 is the leader.
    pub agents: Vec<AgentState>,
    /// Locked pairs with their remaining duration in seconds.
    pub entangled_pairs: BTreeMap<Pair, f64>,
}

/// `k * dt` snapped to 1e-9 s so that logged times print cleanly.
fn step_time(k: u64, dt: f64) -> f64 {
    (k as f64 * dt * 1e9).round() / 1e9
}

/// Places one leader (id 0) and `n - 1` followers in the start strip with
/// uniformly random headings, and samples one insect profile per agent.
pub fn init_world(config: &Config, seed: u64) -> Result<(WorldState, Vec<InsectProfile>), EngineError> {
    let n = config.agents;
    if n < 2 {
        return Err(EngineError::TooFewAgents(n));
    }
    let terrain = &config.terrain;
    let r = config.params.body_radius;
    let (lo, hi) = terrain.start_zone();
    let mut rng = stream(seed, WORLD_STREAM, StreamKind::Placement);
    let mut agents: Vec<AgentState> = Vec::with_capacity(n);
    let mut attempts = 0;
    while agents.len() < n {
        if attempts >= PLACEMENT_ATTEMPTS {
            return Err(EngineError::StartZoneTooSmall {
                placed: agents.len(),
                requested: n,
            });
        }
        attempts += 1;
        let x = rng.random_range(lo.x + r..=(hi.x - r).max(lo.x + r));
        let y = rng.random_range(lo.y + r..=(hi.y - r).max(lo.y + r));
        let p = crate::world::Vec2::new(x, y);
        if obstacle_clearance(p, terrain).distance < r || agents.iter().any(|a| a.position.distance(p) < 2.0 * r) {
            continue;
        }
        let id = agents.len() as AgentId;
        agents.push(AgentState {
            id,
            role: if id == 0 { Role::Leader } else { Role::Follower },
            position: p,
            heading: crate::world::wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)),
            speed: 0.0,
            stimulated: false,
            condition: Condition::Normal,
        });
    }
    let profiles = (0..n as AgentId)
        .map(|id| {
            let mut r = stream(seed, id, StreamKind::Profile);
            sample_profile(&mut r, config.insect.sigma_log, &config.insect)
        })
        .collect();
    Ok((
        WorldState {
            time: 0.0,
            step: 0,
            agents,
            entangled_pairs: BTreeMap::new(),
        },
        profiles,
    ))
}

/// Everything that happened in one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub events: Vec<Event>,
    /// Indexed like `WorldState::agents`.
    pub commands: Vec<StimCommand>,
}

struct AgentStreams {
    motion: ChaCha8Rng,
    snag: ChaCha8Rng,
    selection: ChaCha8Rng,
}

/// A running trial: world state plus everything needed to advance it.
pub struct Simulation {
    config: Config,
    seed: u64,
    model: InsectModel,
    world: WorldState,
    profiles: Vec<InsectProfile>,
    streams: Vec<AgentStreams>,
    reached: Vec<bool>,
    lost: Vec<bool>,
}

impl Simulation {
    pub fn new(config: &Config, seed: u64) -> Result<Self, EngineError> {
        let (world, profiles) = init_world(config, seed)?;
        Simulation::from_world(config, seed, world, profiles)
    }

    /// Starts from an explicit world, e.g. a hand-built scenario.
    pub fn from_world(
        config: &Config,
        seed: u64,
        world: WorldState,
        profiles: Vec<InsectProfile>,
    ) -> Result<Self, EngineError> {
        let roster_ok = world.agents.len() >= 2
            && profiles.len() == world.agents.len()
            && world
                .agents
                .iter()
                .enumerate()
                .all(|(i, a)| a.id as usize == i && (a.role == Role::Leader) == (i == 0));
        if !roster_ok {
            return Err(EngineError::BadRoster);
        }
        let mut config = config.clone();
        config.params.seed = seed;
        config.agents = world.agents.len();
        let streams = world
            .agents
            .iter()
            .map(|a| AgentStreams {
                motion: stream(seed, a.id, StreamKind::Motion),
                snag: stream(seed, a.id, StreamKind::Snag),
                selection: stream(seed, a.id, StreamKind::Selection),
            })
            .collect();
        let n = world.agents.len();
        Ok(Simulation {
            model: InsectModel::from_config(&config),
            config,
            seed,
            world,
            profiles,
            streams,
            reached: vec![false; n],
            lost: vec![false; n],
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn profiles(&self) -> &[InsectProfile] {
        &self.profiles
    }

    pub fn all_reached(&self) -> bool {
        self.reached.iter().all(|&r| r)
    }

    fn plan_and_track(&mut self, i: usize, obs: &Observation) -> Result<StimCommand, EngineError> {
        let params = &self.config.params;
        let decision = if self.world.agents[i].is_leader() {
            leader_plan(obs, params)?
        } else {
            match self.config.controller {
                ControllerChoice::Tgi => tgi_plan(obs, params, &mut self.streams[i].selection)?,
                ControllerChoice::Boids => boids_plan(obs, &self.config.boids, params),
            }
        };
        Ok(tgi_track(&decision, obs.self_speed, params))
    }

    /// Advances the world by one `dt`.
    pub fn step(&mut self) -> Result<StepReport, EngineError> {
        let k = self.world.step + 1;
        let time = step_time(k, self.config.params.dt);
        let dt = self.config.params.dt;
        let terrain = &self.config.terrain.clone();
        let pre = self.world.agents.clone();
        let n = pre.len();
        let mut events = Vec::new();
        let mut commands = vec![StimCommand::none(); n];
        let mut next = pre.clone();

        for i in 0..n {
            let me = &pre[i];
            if let Condition::Entangled { .. } = me.condition {
                next[i].stimulated = false;
                next[i].speed = 0.0;
                continue;
            }
            let obs = observe(me.id, &pre, terrain, &self.config.params)?;
            if !me.is_leader() {
                let alone = obs.neighbors.is_empty();
                if alone && !self.lost[i] {
                    events.push(Event {
                        time,
                        step: k,
                        kind: EventKind::Lost { agent: me.id },
                    });
                }
                self.lost[i] = alone;
            }
            let cmd = self.plan_and_track(i, &obs)?;
            commands[i] = cmd;
            let profile = &self.profiles[i];
            let moved = match me.condition {
                Condition::Normal if cmd.is_active() => {
                    stimulated_step(me, cmd, terrain, profile, &self.model, &mut self.streams[i].motion, dt)?
                }
                Condition::Normal => {
                    free_motion_step(me, &obs, terrain, profile, &self.model, &mut self.streams[i].motion, dt)
                }
                _ => AgentState {
                    speed: 0.0,
                    stimulated: cmd.is_active(),
                    ..me.clone()
                },
            };
            let (mut after, transition) = snag_update(&moved, cmd, terrain, &self.model, &mut self.streams[i].snag, dt);
            after.position = terrain.clamp(push_out_of_obstacles(terrain.clamp(after.position), terrain));
            match transition {
                Some(SnagTransition::Snagged) => events.push(Event {
                    time,
                    step: k,
                    kind: EventKind::Snag { agent: me.id },
                }),
                Some(SnagTransition::Escaped) => events.push(Event {
                    time,
                    step: k,
                    kind: EventKind::Escape { agent: me.id },
                }),
                None => {}
            }
            next[i] = after;
        }

        // count down existing entanglements
        let mut released = Vec::new();
        for (pair, remaining) in self.world.entangled_pairs.iter_mut() {
            *remaining -= dt;
            if *remaining <= 1e-9 {
                released.push(*pair);
            }
        }
        for pair in &released {
            self.world.entangled_pairs.remove(pair);
            events.push(Event {
                time,
                step: k,
                kind: EventKind::Release { a: pair.0, b: pair.1 },
            });
        }
        for a in next.iter_mut() {
            if let Condition::Entangled { .. } = a.condition {
                let left = self
                    .world
                    .entangled_pairs
                    .iter()
                    .filter(|((x, y), _)| *x == a.id || *y == a.id)
                    .map(|(_, r)| *r)
                    .fold(f64::NEG_INFINITY, f64::max);
                a.condition = if left > 0.0 {
                    Condition::Entangled { remaining: left }
                } else {
                    Condition::Normal
                };
            }
        }

        for pair in detect_entanglements(&mut next, &self.config.params, self.seed, k) {
            self.world
                .entangled_pairs
                .insert(pair, self.config.params.entangle_duration);
            events.push(Event {
                time,
                step: k,
                kind: EventKind::Entangle { a: pair.0, b: pair.1 },
            });
        }

        for (i, a) in next.iter().enumerate() {
            if !self.reached[i] && terrain.goal.contains(a.position) {
                self.reached[i] = true;
                events.push(Event {
                    time,
                    step: k,
                    kind: EventKind::GoalReached { agent: a.id },
                });
            }
        }

        self.world.agents = next;
        self.world.step = k;
        self.world.time = time;
        Ok(StepReport { events, commands })
    }

    fn record(&self, commands: &[StimCommand]) -> StepRecord {
        StepRecord {
            time: self.world.time,
            agents: self
                .world
                .agents
                .iter()
                .zip(commands)
                .map(|(a, c)| AgentRecord {
                    id: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    heading: a.heading,
                    speed: a.speed,
                    cmd_kind: c.kind,
                    voltage: c.voltage,
                    condition: a.condition.label().to_string(),
                })
                .collect(),
        }
    }

    /// Steps until every agent has reached the goal or `t_max` is hit.
    pub fn run(mut self) -> Result<TrialLog, EngineError> {
        let max_steps = self.config.params.max_steps();
        let mut steps = Vec::new();
        let mut events = Vec::new();
        while self.world.step < max_steps && !self.all_reached() {
            let report = self.step()?;
            steps.push(self.record(&report.commands));
            events.extend(report.events);
        }
        let termination = if self.all_reached() {
            Termination::AllReached { time: self.world.time }
        } else {
            Termination::Timeout { time: self.world.time }
        };
        Ok(TrialLog {
            config: self.config,
            seed: self.seed,
            steps,
            events,
            termination,
        })
    }
}

/// Runs one trial of `config` with the given seed.
pub fn run_trial(config: &Config, seed: u64) -> Result<TrialLog, EngineError> {
    Simulation::new(config, seed)?.run()
}
