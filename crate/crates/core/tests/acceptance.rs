//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run alone with `cargo test --release --test acceptance`.

mod common;

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{agent, angle_diff, open_field, random_agents};
use swarm_sim::cli::run_batch;
use swarm_sim::controllers::{leader_plan, tgi_plan, tgi_track, MotionDecision};
use swarm_sim::engine::rng::pair_uniform;
use swarm_sim::engine::{detect_entanglements, init_world, EventKind, Termination, WorldState};
use swarm_sim::insect::{snag_update, InsectModel, InsectProfile, SnagTransition};
use swarm_sim::metrics::replay_entanglements;
use swarm_sim::perception::{observe, NeighborObs, Observation};
use swarm_sim::world::{AgentState, Circle, Condition, Config, ControllerChoice, SimParams, Terrain, Vec2};
use swarm_sim::{Simulation, StimCommand, TrialLog, TrialMetrics};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;
const BIN: &str = env!("CARGO_BIN_EXE_swarm-sim");

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn check(pass: bool, detail: String) -> Verdict {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Batches {
    tgi: Vec<(TrialLog, TrialMetrics)>,
    boids: Vec<(TrialLog, TrialMetrics)>,
    elapsed: Duration,
}

impl Batches {
    fn run() -> Batches {
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        let start = Instant::now();
        let batch = |c: ControllerChoice| {
            let config = Config {
                controller: c,
                ..Config::default()
            };
            run_batch(&config, SEEDS, threads).expect("batch runs")
        };
        let tgi = batch(ControllerChoice::Tgi);
        let boids = batch(ControllerChoice::Boids);
        Batches {
            tgi,
            boids,
            elapsed: start.elapsed(),
        }
    }

    fn logs(&self) -> impl Iterator<Item = &TrialLog> {
        self.tgi.iter().chain(&self.boids).map(|(log, _)| log)
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn entanglement_contrast(b: &Batches) -> Verdict {
    let tgi = mean(b.tgi.iter().map(|(_, m)| m.entanglement_count as f64));
    let boids = mean(b.boids.iter().map(|(_, m)| m.entanglement_count as f64));
    let secs = b.elapsed.as_secs_f64();
    check(
        tgi <= 0.5 * boids && boids >= 3.0 && secs <= 60.0,
        format!(
            "mean entanglements tgi {tgi:.2}, boids {boids:.2} (ratio {:.2}); both batches in {secs:.1} s",
            tgi / boids
        ),
    )
}

fn degree_of_autonomy(b: &Batches) -> Verdict {
    let per: Vec<f64> = b.tgi.iter().map(|(_, m)| m.autonomy_mean).collect();
    let batch = mean(per.iter().copied());
    let (lo, hi) = per.iter().fold((1.0f64, 0.0f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    check(
        (0.35..=0.75).contains(&batch) && per.iter().all(|&a| a > 0.0 && a < 1.0),
        format!("batch mean {batch:.3}, per-trial range [{lo:.3}, {hi:.3}]"),
    )
}

fn navigation_success(b: &Batches) -> Verdict {
    let reached: Vec<u64> = b
        .tgi
        .iter()
        .filter(|(log, _)| matches!(log.termination, Termination::AllReached { time } if time <= 300.0))
        .map(|(log, _)| log.seed)
        .collect();
    check(
        reached.len() >= 8,
        format!("{}/10 trials all reached the goal (seeds {reached:?})", reached.len()),
    )
}

/// Positions before each logged step: the initial world, then each record.
fn pre_step_positions(log: &TrialLog) -> Vec<Vec<Vec2>> {
    let (world, _) = init_world(&log.config, log.seed).expect("initial world");
    let mut out = vec![world.agents.iter().map(|a| a.position).collect()];
    out.extend(
        log.steps
            .iter()
            .map(|s| s.agents.iter().map(|a| a.position()).collect()),
    );
    out
}

fn free_motion_guarantee(b: &Batches) -> Verdict {
    let mut checked = 0u64;
    let mut violations = 0u64;
    for (log, _) in &b.tgi {
        let p = &log.config.params;
        let pre = pre_step_positions(log);
        for (k, step) in log.steps.iter().enumerate() {
            let positions = &pre[k];
            for a in step.agents.iter().filter(|a| a.id != log.leader_id()) {
                let me = positions[a.id as usize];
                let m = positions
                    .iter()
                    .enumerate()
                    .filter(|&(j, q)| j != a.id as usize && (*q - me).length() <= p.free_range)
                    .count();
                if m >= p.neighbor_threshold {
                    checked += 1;
                    if a.voltage > 0.0 {
                        violations += 1;
                    }
                }
            }
        }
    }
    check(
        violations == 0 && checked > 0,
        format!("{violations} stimulated crowded follower-steps out of {checked} scanned"),
    )
}

fn voltage_cap(b: &Batches) -> Verdict {
    let logged = b
        .logs()
        .flat_map(|l| l.steps.iter().flat_map(|s| s.agents.iter().map(|a| a.voltage)))
        .fold(0.0f64, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut drawn = 0.0f64;
    for _ in 0..10_000 {
        let p = SimParams {
            accel_gain: rng.random_range(0.0..50.0),
            steer_gain: rng.random_range(0.0..50.0),
            ..SimParams::default()
        };
        let d = MotionDecision::MoveToward {
            bearing: rng.random_range(-PI..PI),
            range: rng.random_range(0.0..5.0),
            target_is_leader: rng.random_bool(0.2),
        };
        drawn = drawn.max(tgi_track(&d, rng.random_range(0.0..0.2), &p).voltage);
    }
    check(
        logged <= 2.5 && drawn <= 2.5,
        format!("max logged {logged:.3} V, max over 10^4 random decisions {drawn:.3} V"),
    )
}

fn entanglement_precondition(b: &Batches) -> Verdict {
    let mut events = 0usize;
    let mut bad = Vec::new();
    for log in b.logs() {
        let d_ent = log.config.params.entangle_distance;
        let mut from_events = Vec::new();
        for e in &log.events {
            if let EventKind::Entangle { a, b: other } = e.kind {
                events += 1;
                from_events.push((e.step, a.min(other), a.max(other)));
                let rec = &log.steps[e.step as usize - 1];
                let (x, y) = (&rec.agents[a as usize], &rec.agents[other as usize]);
                if !(x.position().distance(y.position()) < d_ent && (x.voltage > 0.0 || y.voltage > 0.0)) {
                    bad.push(format!("seed {} step {} pair ({a},{other})", log.seed, e.step));
                }
            }
        }
        if replay_entanglements(log) != from_events {
            bad.push(format!(
                "seed {} {}: replay disagrees with events",
                log.seed,
                log.config.controller.name()
            ));
        }
    }
    let (steps, close_free) = adversarial_free_crowd(100_000);
    check(
        bad.is_empty() && close_free.locked == 0 && close_free.encounters > 0,
        format!(
            "{events} entangle events replayed, {} bad; {steps}-step crowd run: {} unstimulated close encounters, {} locked",
            bad.len(),
            close_free.encounters,
            close_free.locked
        ),
    )
}

struct CloseFree {
    encounters: u64,
    locked: u64,
}

/// A tight crowd on a small field with certain entanglement for eligible
/// pairs. Counts steps where two unstimulated agents end closer than `d_ent`
/// and how many of those locked.
fn adversarial_free_crowd(steps: u64) -> (u64, CloseFree) {
    let mut cfg = Config::default();
    cfg.params.entangle_prob = 1.0;
    cfg.params.neighbor_threshold = 1;
    cfg.terrain = Terrain {
        side: 0.8,
        obstacles: vec![],
        hills: vec![],
        goal: Circle::new(0.4, 0.4, 0.38),
        start_width: 0.8,
        start_depth: 0.8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let agents: Vec<AgentState> = (0..20u32)
        .map(|id| {
            agent(
                id,
                0.1 + 0.15 * (id % 5) as f64,
                0.1 + 0.15 * (id / 5) as f64,
                rng.random_range(-PI..PI),
            )
        })
        .collect();
    let world = WorldState {
        time: 0.0,
        step: 0,
        agents,
        entangled_pairs: Default::default(),
    };
    let profiles = vec![InsectProfile::baseline(&cfg.insect); 20];
    let mut sim = Simulation::from_world(&cfg, 99, world, profiles).expect("hand-built world");
    let d_ent = cfg.params.entangle_distance;
    let mut out = CloseFree {
        encounters: 0,
        locked: 0,
    };
    for _ in 0..steps {
        let was_normal: Vec<bool> = sim
            .world()
            .agents
            .iter()
            .map(|a| a.condition == Condition::Normal)
            .collect();
        let report = sim.step().expect("step");
        let agents = &sim.world().agents;
        let locked: Vec<(u32, u32)> = report
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Entangle { a, b } => Some((a.min(b), a.max(b))),
                _ => None,
            })
            .collect();
        for i in 0..agents.len() {
            for j in i + 1..agents.len() {
                let (a, b) = (&agents[i], &agents[j]);
                let free = was_normal[i] && was_normal[j] && !a.stimulated && !b.stimulated;
                if free && a.position.distance(b.position) < d_ent {
                    out.encounters += 1;
                    if locked.contains(&(a.id, b.id)) {
                        out.locked += 1;
                    }
                }
            }
        }
        // locks must always involve a driven insect
        for &(a, b) in &locked {
            if !agents[a as usize].stimulated && !agents[b as usize].stimulated {
                out.locked += 1;
            }
        }
    }
    (steps, out)
}

fn determinism(dir: &Path) -> Verdict {
    let run = |args: &[&str]| {
        let out = Command::new(BIN)
            .args(args)
            .current_dir(dir)
            .env_remove("SWARM_SIM_OUT")
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["run", "--seed", "1", "--out", "r1"]);
    run(&["run", "--seed", "1", "--out", "r2"]);
    run(&["batch", "--seeds", "1..4", "--out", "serial"]);
    run(&["batch", "--seeds", "1..4", "--parallel", "4", "--out", "parallel"]);
    let same = |a: &str, b: &str| {
        fs::read(dir.join(a))
            .ok()
            .is_some_and(|x| Some(x) == fs::read(dir.join(b)).ok())
    };
    let mut pairs = vec![("r1/tgi_seed1.csv".to_string(), "r2/tgi_seed1.csv".to_string())];
    for s in 1..=4 {
        pairs.push((format!("serial/tgi_seed{s}.csv"), format!("parallel/tgi_seed{s}.csv")));
    }
    pairs.push((
        "serial/batch_tgi_seeds1-4.csv".into(),
        "parallel/batch_tgi_seeds1-4.csv".into(),
    ));
    let differing: Vec<&String> = pairs.iter().filter(|(a, b)| !same(a, b)).map(|(a, _)| a).collect();
    check(
        differing.is_empty(),
        format!(
            "{} file pairs compared byte for byte, differing: {differing:?}",
            pairs.len()
        ),
    )
}

/// Reference planner: counts sector members by explicit interval tests.
fn brute_force_plan(obs: &Observation, p: &SimParams) -> MotionDecision {
    let toward = |n: &NeighborObs| MotionDecision::MoveToward {
        bearing: n.bearing,
        range: n.range,
        target_is_leader: n.is_leader,
    };
    let m = obs.neighbors.iter().filter(|n| n.range <= p.free_range).count();
    if m >= p.neighbor_threshold {
        return MotionDecision::FreeMotion;
    }
    if let Some(l) = obs.neighbors.iter().find(|n| n.is_leader) {
        return toward(l);
    }
    let s = p.num_sectors;
    let width = TAU / s as f64;
    let members = |k: usize| -> Vec<&NeighborObs> {
        obs.neighbors
            .iter()
            .filter(|n| {
                let a = if n.bearing < 0.0 { n.bearing + TAU } else { n.bearing };
                k as f64 * width <= a && a < (k + 1) as f64 * width
            })
            .collect()
    };
    let mut best: Option<(usize, Vec<&NeighborObs>)> = None;
    for k in 0..s {
        let mk = members(k);
        if mk.is_empty() {
            continue;
        }
        let nearest = |v: &[&NeighborObs]| v.iter().map(|n| n.range).fold(f64::INFINITY, f64::min);
        let better = match &best {
            None => true,
            Some((_, b)) => mk.len() > b.len() || (mk.len() == b.len() && nearest(&mk) < nearest(b)),
        };
        if better {
            best = Some((k, mk));
        }
    }
    match best {
        None => MotionDecision::FreeMotion,
        Some((_, mk)) => {
            let target = mk
                .into_iter()
                .min_by(|a, b| a.range.total_cmp(&b.range).then(a.id.cmp(&b.id)))
                .expect("non-empty sector");
            toward(target)
        }
    }
}

fn random_observation<R: Rng>(rng: &mut R, p: &SimParams) -> Observation {
    let n = rng.random_range(0..10);
    let leader = rng.random_bool(0.1);
    let neighbors = (0..n)
        .map(|i| {
            // coarse ranges so that count and distance ties are common
            let range = if rng.random_bool(0.5) {
                0.05 * rng.random_range(1..=(p.sensing_range / 0.05) as u32) as f64
            } else {
                rng.random_range(0.01..p.sensing_range)
            };
            NeighborObs {
                id: i + 1,
                range,
                bearing: rng.random_range(-PI..PI),
                is_leader: leader && i == 0,
                relative_heading: rng.random_range(-PI..PI),
            }
        })
        .collect();
    common::observation(neighbors, rng.random_range(0.0..0.15))
}

fn oracle_equivalence() -> Verdict {
    let p = SimParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sector_mismatch = 0;
    let mut via_sectors = 0;
    for _ in 0..1000 {
        let obs = random_observation(&mut rng, &p);
        let expected = brute_force_plan(&obs, &p);
        let got = tgi_plan(&obs, &p, &mut rng).expect("follower observation");
        if got != expected {
            sector_mismatch += 1;
        }
        if obs.count_within(p.free_range) < p.neighbor_threshold && obs.leader().is_none() && !obs.neighbors.is_empty()
        {
            via_sectors += 1;
        }
    }

    let mut pair_mismatch = 0;
    let mut pairs_found = 0;
    for trial in 0..500u64 {
        let n = rng.random_range(5..40);
        let extent = rng.random_range(0.15..0.5);
        let mut agents = random_agents(&mut rng, n, extent);
        for a in agents.iter_mut() {
            a.stimulated = rng.random_bool(0.5);
            a.condition = match rng.random_range(0..10) {
                0 => Condition::Snagged,
                1 => Condition::Entangled { remaining: 2.0 },
                _ => Condition::Normal,
            };
        }
        let mut brute = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&agents[i], &agents[j]);
                let ok = a.condition == Condition::Normal
                    && b.condition == Condition::Normal
                    && (a.stimulated || b.stimulated)
                    && a.position.distance(b.position) < p.entangle_distance
                    && pair_uniform(trial, 7, a.id, b.id) < p.entangle_prob;
                if ok {
                    brute.push((a.id, b.id));
                }
            }
        }
        let mut expected_after = agents.clone();
        for &(a, b) in &brute {
            for id in [a, b] {
                expected_after[id as usize].condition = Condition::Entangled {
                    remaining: p.entangle_duration,
                };
                expected_after[id as usize].speed = 0.0;
            }
        }
        let got = detect_entanglements(&mut agents, &p, trial, 7);
        pairs_found += brute.len();
        if got != brute || agents != expected_after {
            pair_mismatch += 1;
        }
    }
    check(
        sector_mismatch == 0 && pair_mismatch == 0 && via_sectors > 100 && pairs_found > 100,
        format!(
            "sector selection: {sector_mismatch}/1000 mismatches ({via_sectors} resolved by sectors); \
             pair resolution: {pair_mismatch}/500 mismatches ({pairs_found} locks)"
        ),
    )
}

fn frame_invariance() -> Verdict {
    let p = SimParams::default();
    let base = open_field(3.5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    let mut decisions = 0;
    let mut moving = 0;
    for _ in 0..100 {
        let states = random_agents(&mut rng, 20, 1.2);
        let phi = rng.random_range(-PI..PI);
        let shift = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let moved: Vec<AgentState> = states
            .iter()
            .map(|s| AgentState {
                position: s.position.rotate(phi) + shift,
                heading: swarm_sim::world::wrap_angle(s.heading + phi),
                ..s.clone()
            })
            .collect();
        let mut terrain = base.clone();
        terrain.goal.center = base.goal.center.rotate(phi) + shift;
        for s in &states {
            let a = observe(s.id, &states, &base, &p).expect("observer exists");
            let b = observe(s.id, &moved, &terrain, &p).expect("observer exists");
            let plan = |o: &Observation| {
                if s.is_leader() {
                    leader_plan(o, &p).expect("leader")
                } else {
                    tgi_plan(o, &p, &mut ChaCha8Rng::seed_from_u64(0)).expect("follower")
                }
            };
            let same = match (plan(&a), plan(&b)) {
                (MotionDecision::FreeMotion, MotionDecision::FreeMotion) => true,
                (
                    MotionDecision::MoveToward {
                        bearing: x,
                        range: r,
                        target_is_leader: l,
                    },
                    MotionDecision::MoveToward {
                        bearing: y,
                        range: q,
                        target_is_leader: k,
                    },
                ) => {
                    moving += 1;
                    angle_diff(x, y) < 1e-9 && (r - q).abs() < 1e-9 && l == k
                }
                _ => false,
            };
            let same_obs = a.neighbors.len() == b.neighbors.len()
                && a.neighbors.iter().zip(&b.neighbors).all(|(x, y)| {
                    x.id == y.id && (x.range - y.range).abs() < 1e-9 && angle_diff(x.bearing, y.bearing) < 1e-9
                });
            decisions += 1;
            if !(same && same_obs) {
                mismatches += 1;
            }
        }
    }
    check(
        mismatches == 0 && moving > 0,
        format!("{mismatches} of {decisions} observations/decisions changed under 100 rigid transforms ({moving} move-toward)"),
    )
}

fn snag_rescue() -> Verdict {
    let cfg = Config::default();
    let model = InsectModel::from_config(&cfg);
    let terrain = Terrain {
        obstacles: vec![Circle::new(1.0, 1.0, 0.2)],
        ..open_field(3.5)
    };
    let dt = cfg.params.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mean_escape = |cmd: StimCommand| {
        let mut total = 0u64;
        for _ in 0..1000 {
            let mut s = agent(1, 1.21, 1.0, PI);
            s.condition = Condition::Snagged;
            loop {
                total += 1;
                let (next, t) = snag_update(&s, cmd, &terrain, &model, &mut rng, dt);
                s = next;
                if t == Some(SnagTransition::Escaped) {
                    break;
                }
            }
        }
        total as f64 * dt / 1000.0
    };
    let driven = mean_escape(StimCommand::accelerate(1.5));
    let free = mean_escape(StimCommand::none());
    check(
        free >= 5.0 * driven,
        format!(
            "mean escape {driven:.2} s under acceleration vs {free:.2} s unstimulated (x{:.1})",
            free / driven
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let batches = Batches::run();
    let criteria: Vec<Criterion> = vec![
        ("entanglement contrast", Box::new(|| entanglement_contrast(&batches))),
        ("degree of autonomy", Box::new(|| degree_of_autonomy(&batches))),
        ("navigation success", Box::new(|| navigation_success(&batches))),
        ("free-motion guarantee", Box::new(|| free_motion_guarantee(&batches))),
        ("voltage cap", Box::new(|| voltage_cap(&batches))),
        (
            "entanglement precondition",
            Box::new(|| entanglement_precondition(&batches)),
        ),
        ("determinism", Box::new(|| determinism(dir.path()))),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("frame invariance", Box::new(frame_invariance)),
        ("snag rescue asymmetry", Box::new(snag_rescue)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} [{:>2}] {name}: {detail} ({:.1} s)",
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
