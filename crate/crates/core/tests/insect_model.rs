//! Statistical and long-horizon checks of the single-insect model.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{agent, open_field};
use swarm_sim::insect::{free_motion_step, snag_update, stimulated_step, InsectModel, InsectProfile, SnagTransition};
use swarm_sim::perception::observe;
use swarm_sim::world::{obstacle_clearance, AgentState, Circle, Condition, Config, Terrain, Vec2};
use swarm_sim::StimCommand;

fn quiet(cfg: &Config) -> InsectProfile {
    InsectProfile {
        heading_noise_sigma: 0.0,
        ..InsectProfile::baseline(&cfg.insect)
    }
}

/// Mean time to escape from a snag, in seconds, over `runs` trials.
fn mean_escape_time(cmd: StimCommand, runs: usize, seed: u64) -> f64 {
    let cfg = Config::default();
    let model = InsectModel::from_config(&cfg);
    let terrain = Terrain {
        obstacles: vec![Circle::new(1.0, 1.0, 0.2)],
        ..open_field(3.5)
    };
    let dt = cfg.params.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..runs {
        let mut s = agent(1, 1.21, 1.0, std::f64::consts::PI);
        s.condition = Condition::Snagged;
        let mut steps = 0u64;
        loop {
            steps += 1;
            let (next, t) = snag_update(&s, cmd, &terrain, &model, &mut rng, dt);
            assert_eq!(next.speed, 0.0);
            s = next;
            if t == Some(SnagTransition::Escaped) {
                break;
            }
        }
        assert_eq!(s.condition, Condition::Normal);
        assert!(obstacle_clearance(s.position, &terrain).distance > 0.0);
        total += steps as f64 * dt;
    }
    total / runs as f64
}

#[test]
fn escape_times_follow_the_geometric_means() {
    let cfg = Config::default();
    let stim = mean_escape_time(StimCommand::accelerate(1.0), 1000, 1);
    let free = mean_escape_time(StimCommand::none(), 1000, 2);
    // per-step escape probability p·dt gives a mean of 1/p seconds
    let (p_stim, p_free) = (cfg.insect.p_escape_stim, cfg.insect.p_escape_free);
    assert!(
        (stim - 1.0 / p_stim).abs() / (1.0 / p_stim) < 0.15,
        "stimulated mean {stim}"
    );
    assert!((free - 1.0 / p_free).abs() / (1.0 / p_free) < 0.15, "free mean {free}");
    let ratio = free / stim;
    let expected = p_stim / p_free;
    assert!((ratio - expected).abs() <= 0.2 * expected, "ratio {ratio}");
}

#[test]
fn steering_does_not_help_escape() {
    let steer = mean_escape_time(StimCommand::steer_left(2.0), 300, 3);
    assert!(steer > 25.0, "steering escaped after {steer} s on average");
}

#[test]
fn noise_free_walkers_never_enter_rocks() {
    let cfg = Config::default();
    let model = InsectModel::from_config(&cfg);
    let profile = quiet(&cfg);
    let terrain = cfg.terrain.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for run in 0..40 {
        let start = loop {
            let p = Vec2::new(rng.random_range(0.0..terrain.side), rng.random_range(0.0..terrain.side));
            if obstacle_clearance(p, &terrain).distance > cfg.params.body_radius {
                break p;
            }
        };
        let mut s = agent(1, start.x, start.y, rng.random_range(-3.0..3.0));
        s.speed = cfg.insect.free_speed;
        for k in 0..1000 {
            // every fourth run is driven by random stimuli part of the time
            let driven = run % 4 == 3 && k % 3 == 0;
            s = if driven {
                let v = rng.random_range(0.1..2.5);
                let cmd = [
                    StimCommand::steer_left(v),
                    StimCommand::steer_right(v),
                    StimCommand::accelerate(v),
                ][k % 3];
                stimulated_step(&s, cmd, &terrain, &profile, &model, &mut rng, cfg.params.dt).unwrap()
            } else {
                let obs = common::observation(vec![], s.speed);
                free_motion_step(&s, &obs, &terrain, &profile, &model, &mut rng, cfg.params.dt)
            };
            worst = worst.min(obstacle_clearance(s.position, &terrain).distance);
            assert!(terrain.in_bounds(s.position));
        }
    }
    assert!(worst >= -1e-9, "deepest penetration {worst}");
}

fn converging_pair(cfg: &Config) -> Vec<AgentState> {
    let mut a = agent(0, 1.5, 1.5, 0.0);
    let mut b = agent(1, 1.55, 1.5, std::f64::consts::PI);
    a.speed = cfg.insect.free_speed;
    b.speed = cfg.insect.free_speed;
    vec![a, b]
}

#[test]
fn free_insects_separate_but_driven_ones_stay_close() {
    let cfg = Config::default();
    let model = InsectModel::from_config(&cfg);
    let profile = quiet(&cfg);
    let terrain = open_field(3.5);
    let dt = cfg.params.dt;
    let steps = (2.0 / dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let mut free = converging_pair(&cfg);
    for _ in 0..steps {
        let pre = free.clone();
        for (i, s) in free.iter_mut().enumerate() {
            let mut obs = observe(i as u32, &pre, &terrain, &cfg.params).unwrap();
            obs.goal = None;
            *s = free_motion_step(&pre[i], &obs, &terrain, &profile, &model, &mut rng, dt);
        }
    }
    let d_free = free[0].position.distance(free[1].position);
    assert!(
        d_free > cfg.params.entangle_distance,
        "free pair ended {d_free} m apart"
    );

    let mut driven = converging_pair(&cfg);
    for _ in 0..steps {
        let pre = driven.clone();
        for (i, s) in driven.iter_mut().enumerate() {
            let obs = observe(i as u32, &pre, &terrain, &cfg.params).unwrap();
            let bearing = obs.neighbors[0].bearing;
            let cmd = if bearing >= 0.0 {
                StimCommand::steer_left(2.5)
            } else {
                StimCommand::steer_right(2.5)
            };
            *s = stimulated_step(&pre[i], cmd, &terrain, &profile, &model, &mut rng, dt).unwrap();
        }
    }
    let d_driven = driven[0].position.distance(driven[1].position);
    assert!(
        d_driven <= cfg.params.entangle_distance,
        "driven pair ended {d_driven} m apart"
    );
}
