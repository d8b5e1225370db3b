//! Run configuration: schema, documented defaults and validation.
//!
//! Configs are TOML documents. Every key is optional; absent keys take the
//! defaults below, which together form the `rock-field` preset. Angles are
//! written in degrees, everything else in SI units (m, s, m/s, V).
//!
//! ```toml
//! controller = "tgi"        # or "boids"
//! agents = 20               # one leader + followers
//! seed = 0
//!
//! [sim]
//! dt = 0.1
//! t_max = 300.0
//! sensing_range = 2.0       # R_s
//! free_range = 0.35         # R_f, must be < R_s
//! body_radius = 0.03
//! avoid_distance = 0.2
//! v_max = 2.5
//!
//! [tgi]
//! M = 6
//! sectors = 6
//! theta_threshold_deg = 30.0
//! v_threshold = 0.08
//! k_a = 5.0                 # V per meter of target range
//! k_s = 2.5                 # V per radian of bearing error
//! target_selection = "nearest"   # or "random"
//!
//! [boids]
//! w_sep = 0.08
//! w_coh = 1.0
//! w_ali = 0.5
//!
//! [entanglement]
//! distance = 0.06
//! probability = 0.3         # per step
//! duration = 5.0
//!
//! [insect]
//! free_speed = 0.06
//! ...
//!
//! [terrain]
//! preset = "rock-field"     # or "open"; explicit keys below override it
//! side = 3.5
//! goal = { x = 1.75, y = 3.0, r = 0.4 }
//! obstacles = [ { x = 1.3, y = 1.5, r = 0.2 } ]
//! hills = [ { x = 2.5, y = 1.2, r = 0.4, factor = 0.5 } ]
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use super::{Circle, Hill, Terrain, Vec2};

/// Name of the built-in terrain preset used when no terrain is configured.
pub const ROCK_FIELD: &str = "rock-field";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerChoice {
    Tgi,
    Boids,
}

impl ControllerChoice {
    pub fn name(self) -> &'static str {
        match self {
            ControllerChoice::Tgi => "tgi",
            ControllerChoice::Boids => "boids",
        }
    }
}

impl std::str::FromStr for ControllerChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tgi" => Ok(ControllerChoice::Tgi),
            "boids" => Ok(ControllerChoice::Boids),
            other => Err(format!("unknown controller {other:?} (expected tgi or boids)")),
        }
    }
}

/// How the MTC rule picks a target inside the most populated sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSelection {
    /// Nearest member of the sector.
    Nearest,
    /// Uniformly random member, drawn from the agent's seeded stream.
    Random,
}

/// Simulation and control parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub dt: f64,
    pub t_max: f64,
    pub sensing_range: f64,
    pub free_range: f64,
    /// `M`: a follower with fewer than this many neighbors in its free range
    /// falls back to move-toward-crowd.
    pub neighbor_threshold: usize,
    pub num_sectors: usize,
    /// Stored in degrees, the unit used in config files; see [`SimParams::theta_threshold`].
    pub theta_threshold_deg: f64,
    pub v_threshold: f64,
    pub accel_gain: f64,
    pub steer_gain: f64,
    pub v_max: f64,
    pub entangle_distance: f64,
    pub entangle_prob: f64,
    pub entangle_duration: f64,
    pub body_radius: f64,
    pub avoid_distance: f64,
    pub seed: u64,
    pub target_selection: TargetSelection,
}

impl SimParams {
    pub fn theta_threshold(&self) -> f64 {
        self.theta_threshold_deg.to_radians()
    }

    /// Number of whole steps in `[0, t_max]`.
    pub fn max_steps(&self) -> u64 {
        let n = self.t_max / self.dt;
        // tolerate representation error such as 300.0 / 0.1 = 2999.9999999999995
        (n + 1e-9).floor().max(0.0) as u64
    }
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.1,
            t_max: 300.0,
            sensing_range: 2.0,
            free_range: 0.35,
            neighbor_threshold: 6,
            num_sectors: 6,
            theta_threshold_deg: 30.0,
            v_threshold: 0.08,
            accel_gain: 5.0,
            steer_gain: 2.5,
            v_max: 2.5,
            entangle_distance: 0.06,
            entangle_prob: 0.3,
            entangle_duration: 5.0,
            body_radius: 0.03,
            avoid_distance: 0.2,
            seed: 0,
            target_selection: TargetSelection::Nearest,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoidsWeights {
    pub w_sep: f64,
    pub w_coh: f64,
    pub w_ali: f64,
}

impl Default for BoidsWeights {
    fn default() -> Self {
        BoidsWeights {
            w_sep: 0.08,
            w_coh: 1.0,
            w_ali: 0.5,
        }
    }
}

/// Baseline insect behavior and the snag model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsectParams {
    pub free_speed: f64,
    pub turn_gain: f64,
    pub accel_gain: f64,
    pub heading_noise_sigma: f64,
    /// Log-std of the per-individual gain multiplier.
    pub sigma_log: f64,
    /// Time constant with which free speed is approached when unstimulated.
    pub speed_relax_time: f64,
    /// Avoidance turn rate (rad/s) at zero distance; scales linearly with proximity.
    pub avoid_turn_rate: f64,
    pub p_snag: f64,
    pub p_escape_free: f64,
    pub p_escape_stim: f64,
}

impl Default for InsectParams {
    fn default() -> Self {
        InsectParams {
            free_speed: 0.06,
            turn_gain: 1.2,
            accel_gain: 0.08,
            heading_noise_sigma: 1.5,
            sigma_log: 0.3,
            speed_relax_time: 1.0,
            avoid_turn_rate: 50.0,
            p_snag: 0.5,
            p_escape_free: 0.02,
            p_escape_stim: 0.2,
        }
    }
}

/// A fully validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub controller: ControllerChoice,
    pub agents: usize,
    pub params: SimParams,
    pub boids: BoidsWeights,
    pub insect: InsectParams,
    pub terrain: Terrain,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            controller: ControllerChoice::Tgi,
            agents: 20,
            params: SimParams::default(),
            boids: BoidsWeights::default(),
            insect: InsectParams::default(),
            terrain: rock_field(),
        }
    }
}

/// 3.5 m square field: four rocks and two slow hills between the start strip
/// (bottom edge) and the goal (near the top edge). The layout is invented.
fn rock_field() -> Terrain {
    Terrain {
        side: 3.5,
        obstacles: vec![
            Circle::new(1.25, 1.45, 0.2),
            Circle::new(2.35, 1.6, 0.25),
            Circle::new(1.95, 2.3, 0.15),
            Circle::new(0.85, 2.45, 0.18),
        ],
        hills: vec![
            Hill {
                area: Circle::new(2.4, 0.95, 0.4),
                speed_factor: 0.5,
            },
            Hill {
                area: Circle::new(1.3, 2.35, 0.4),
                speed_factor: 0.5,
            },
        ],
        goal: Circle::new(1.75, 3.0, 0.4),
        start_width: 1.0,
        start_depth: 0.5,
    }
}

fn open_field() -> Terrain {
    Terrain {
        obstacles: Vec::new(),
        hills: Vec::new(),
        ..rock_field()
    }
}

/// One failed constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Parse(String),
    #[error("{} config violation(s):\n{}", .0.len(), list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            ConfigError::Parse(_) => &[],
        }
    }
}

pub fn validate_config_str(text: &str) -> Result<Config, ConfigError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    validate_config(&table)
}

/// Validates a parsed key/value tree, filling defaults for absent keys.
/// Every violation is collected, not just the first.
pub fn validate_config(raw: &Table) -> Result<Config, ConfigError> {
    let mut r = Reader::default();
    let d = Config::default();
    let root = Section::root(raw);

    let controller = root.string(&mut r, "controller", d.controller.name());
    let controller = match controller.parse::<ControllerChoice>() {
        Ok(c) => c,
        Err(e) => {
            r.violate("controller", e);
            d.controller
        }
    };
    let agents = root.count(&mut r, "agents", d.agents);
    if agents < 2 {
        r.violate("agents", "agents ≥ 2 (one leader and at least one follower)");
    }
    let seed = root.count(&mut r, "seed", d.params.seed as usize) as u64;

    let sim = root.section(&mut r, "sim");
    let tgi = root.section(&mut r, "tgi");
    let boids = root.section(&mut r, "boids");
    let ent = root.section(&mut r, "entanglement");
    let ins = root.section(&mut r, "insect");
    let ter = root.section(&mut r, "terrain");
    root.finish(
        &mut r,
        &[
            "controller",
            "agents",
            "seed",
            "sim",
            "tgi",
            "boids",
            "entanglement",
            "insect",
            "terrain",
        ],
    );

    let dp = &d.params;
    let target_selection = match tgi.string(&mut r, "target_selection", "nearest").as_str() {
        "nearest" => TargetSelection::Nearest,
        "random" => TargetSelection::Random,
        other => {
            r.violate(
                "tgi.target_selection",
                format!("unknown selection {other:?} (expected nearest or random)"),
            );
            TargetSelection::Nearest
        }
    };
    let params = SimParams {
        dt: sim.num(&mut r, "dt", dp.dt),
        t_max: sim.num(&mut r, "t_max", dp.t_max),
        sensing_range: sim.num(&mut r, "sensing_range", dp.sensing_range),
        free_range: sim.num(&mut r, "free_range", dp.free_range),
        body_radius: sim.num(&mut r, "body_radius", dp.body_radius),
        avoid_distance: sim.num(&mut r, "avoid_distance", dp.avoid_distance),
        v_max: sim.num(&mut r, "v_max", dp.v_max),
        neighbor_threshold: tgi.count(&mut r, "M", dp.neighbor_threshold),
        num_sectors: tgi.count(&mut r, "sectors", dp.num_sectors),
        theta_threshold_deg: tgi.num(&mut r, "theta_threshold_deg", dp.theta_threshold_deg),
        v_threshold: tgi.num(&mut r, "v_threshold", dp.v_threshold),
        accel_gain: tgi.num(&mut r, "k_a", dp.accel_gain),
        steer_gain: tgi.num(&mut r, "k_s", dp.steer_gain),
        entangle_distance: ent.num(&mut r, "distance", dp.entangle_distance),
        entangle_prob: ent.num(&mut r, "probability", dp.entangle_prob),
        entangle_duration: ent.num(&mut r, "duration", dp.entangle_duration),
        seed,
        target_selection,
    };
    sim.finish(
        &mut r,
        &[
            "dt",
            "t_max",
            "sensing_range",
            "free_range",
            "body_radius",
            "avoid_distance",
            "v_max",
        ],
    );
    tgi.finish(
        &mut r,
        &[
            "M",
            "sectors",
            "theta_threshold_deg",
            "v_threshold",
            "k_a",
            "k_s",
            "target_selection",
        ],
    );
    ent.finish(&mut r, &["distance", "probability", "duration"]);

    let boids_w = BoidsWeights {
        w_sep: boids.num(&mut r, "w_sep", d.boids.w_sep),
        w_coh: boids.num(&mut r, "w_coh", d.boids.w_coh),
        w_ali: boids.num(&mut r, "w_ali", d.boids.w_ali),
    };
    boids.finish(&mut r, &["w_sep", "w_coh", "w_ali"]);

    let di = &d.insect;
    let insect = InsectParams {
        free_speed: ins.num(&mut r, "free_speed", di.free_speed),
        turn_gain: ins.num(&mut r, "turn_gain", di.turn_gain),
        accel_gain: ins.num(&mut r, "accel_gain", di.accel_gain),
        heading_noise_sigma: ins.num(&mut r, "heading_noise_sigma", di.heading_noise_sigma),
        sigma_log: ins.num(&mut r, "sigma_log", di.sigma_log),
        speed_relax_time: ins.num(&mut r, "speed_relax_time", di.speed_relax_time),
        avoid_turn_rate: ins.num(&mut r, "avoid_turn_rate", di.avoid_turn_rate),
        p_snag: ins.num(&mut r, "p_snag", di.p_snag),
        p_escape_free: ins.num(&mut r, "p_escape_free", di.p_escape_free),
        p_escape_stim: ins.num(&mut r, "p_escape_stim", di.p_escape_stim),
    };
    ins.finish(
        &mut r,
        &[
            "free_speed",
            "turn_gain",
            "accel_gain",
            "heading_noise_sigma",
            "sigma_log",
            "speed_relax_time",
            "avoid_turn_rate",
            "p_snag",
            "p_escape_free",
            "p_escape_stim",
        ],
    );

    let terrain = read_terrain(&mut r, &ter);

    check_params(&mut r, &params, &boids_w);
    check_insect(&mut r, &insect);
    check_terrain(&mut r, &terrain);

    if r.violations.is_empty() {
        Ok(Config {
            controller,
            agents,
            params,
            boids: boids_w,
            insect,
            terrain,
        })
    } else {
        Err(ConfigError::Invalid(r.violations))
    }
}

fn read_terrain(r: &mut Reader, ter: &Section) -> Terrain {
    let base = match ter.string(r, "preset", ROCK_FIELD).as_str() {
        ROCK_FIELD => rock_field(),
        "open" => open_field(),
        other => {
            r.violate(
                "terrain.preset",
                format!("unknown preset {other:?} (expected rock-field or open)"),
            );
            rock_field()
        }
    };
    let side = ter.num(r, "side", base.side);
    let start_width = ter.num(r, "start_width", base.start_width);
    let start_depth = ter.num(r, "start_depth", base.start_depth);
    let goal = match ter.get("goal") {
        None => base.goal,
        Some(v) => circle_from(r, "terrain.goal", v, false).map_or(base.goal, |(c, _)| c),
    };
    let obstacles = match ter.get("obstacles") {
        None => base.obstacles.clone(),
        Some(v) => circles_from(r, "terrain.obstacles", v, false)
            .into_iter()
            .map(|(c, _)| c)
            .collect(),
    };
    let hills = match ter.get("hills") {
        None => base.hills.clone(),
        Some(v) => circles_from(r, "terrain.hills", v, true)
            .into_iter()
            .map(|(area, f)| Hill {
                area,
                speed_factor: f.unwrap_or(1.0),
            })
            .collect(),
    };
    ter.finish(
        r,
        &[
            "preset",
            "side",
            "start_width",
            "start_depth",
            "goal",
            "obstacles",
            "hills",
        ],
    );
    Terrain {
        side,
        obstacles,
        hills,
        goal,
        start_width,
        start_depth,
    }
}

fn circles_from(r: &mut Reader, field: &str, v: &Value, hill: bool) -> Vec<(Circle, Option<f64>)> {
    match v.as_array() {
        Some(items) => items
            .iter()
            .enumerate()
            .filter_map(|(i, item)| circle_from(r, &format!("{field}[{i}]"), item, hill))
            .collect(),
        None => {
            r.violate(field, "expected an array of circles");
            Vec::new()
        }
    }
}

fn circle_from(r: &mut Reader, field: &str, v: &Value, hill: bool) -> Option<(Circle, Option<f64>)> {
    let Some(t) = v.as_table() else {
        r.violate(field, "expected a table { x, y, r }");
        return None;
    };
    let mut req = |key: &str| -> Option<f64> {
        match t.get(key) {
            None => {
                r.violate(format!("{field}.{key}"), "missing required key");
                None
            }
            Some(v) => as_f64(v).or_else(|| {
                r.violate(format!("{field}.{key}"), "expected a number");
                None
            }),
        }
    };
    let x = req("x");
    let y = req("y");
    let radius = req("r");
    let factor = if hill { req("factor") } else { None };
    let allowed: &[&str] = if hill {
        &["x", "y", "r", "factor"]
    } else {
        &["x", "y", "r"]
    };
    for key in t.keys().filter(|k| !allowed.contains(&k.as_str())) {
        r.violate(format!("{field}.{key}"), "unknown key");
    }
    Some((Circle::new(x?, y?, radius?), if hill { Some(factor?) } else { None }))
}

fn check_params(r: &mut Reader, p: &SimParams, w: &BoidsWeights) {
    if !(p.dt > 0.0 && p.dt <= 0.5) {
        r.violate("sim.dt", format!("0 < dt ≤ 0.5 (got {})", p.dt));
    }
    if !(p.t_max >= 0.0 && p.t_max.is_finite()) {
        r.violate("sim.t_max", format!("t_max ≥ 0 and finite (got {})", p.t_max));
    }
    if !(p.free_range > 0.0) {
        r.violate("sim.free_range", format!("R_f > 0 (got {})", p.free_range));
    }
    if !(p.free_range < p.sensing_range) {
        r.violate(
            "sim.free_range",
            format!(
                "R_f < R_s (free_range {} must be smaller than sensing_range {})",
                p.free_range, p.sensing_range
            ),
        );
    }
    if !p.sensing_range.is_finite() {
        r.violate("sim.sensing_range", "R_s must be finite");
    }
    if p.neighbor_threshold < 1 {
        r.violate("tgi.M", format!("M ≥ 1 (got {})", p.neighbor_threshold));
    }
    if p.num_sectors < 2 {
        r.violate("tgi.sectors", format!("S ≥ 2 (got {})", p.num_sectors));
    }
    if !(0.0..=180.0).contains(&p.theta_threshold_deg) {
        r.violate(
            "tgi.theta_threshold_deg",
            format!("0 ≤ θ_threshold ≤ 180 (got {})", p.theta_threshold_deg),
        );
    }
    if !(p.v_threshold >= 0.0) {
        r.violate("tgi.v_threshold", format!("v_threshold ≥ 0 (got {})", p.v_threshold));
    }
    for (field, g) in [
        ("tgi.k_a", p.accel_gain),
        ("tgi.k_s", p.steer_gain),
        ("boids.w_sep", w.w_sep),
        ("boids.w_coh", w.w_coh),
        ("boids.w_ali", w.w_ali),
    ] {
        if !(g >= 0.0 && g.is_finite()) {
            r.violate(field, format!("gain ≥ 0 (got {g})"));
        }
    }
    if !(p.v_max > 0.0 && p.v_max <= 2.5) {
        r.violate("sim.v_max", format!("0 < v_max ≤ 2.5 V (got {})", p.v_max));
    }
    if !(p.entangle_distance > 0.0) {
        r.violate(
            "entanglement.distance",
            format!("d_ent > 0 (got {})", p.entangle_distance),
        );
    }
    if !(0.0..=1.0).contains(&p.entangle_prob) {
        r.violate(
            "entanglement.probability",
            format!("0 ≤ p_ent ≤ 1 (got {})", p.entangle_prob),
        );
    }
    if !(p.entangle_duration > 0.0 && p.entangle_duration.is_finite()) {
        r.violate(
            "entanglement.duration",
            format!("τ_ent > 0 (got {})", p.entangle_duration),
        );
    }
    if !(p.body_radius > 0.0) {
        r.violate("sim.body_radius", format!("body_radius > 0 (got {})", p.body_radius));
    }
    if !(p.avoid_distance > 0.0) {
        r.violate("sim.avoid_distance", format!("d_avoid > 0 (got {})", p.avoid_distance));
    }
}

fn check_insect(r: &mut Reader, i: &InsectParams) {
    for (key, v) in [
        ("free_speed", i.free_speed),
        ("turn_gain", i.turn_gain),
        ("accel_gain", i.accel_gain),
        ("speed_relax_time", i.speed_relax_time),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            r.violate(format!("insect.{key}"), format!("must be > 0 (got {v})"));
        }
    }
    for (key, v) in [
        ("heading_noise_sigma", i.heading_noise_sigma),
        ("sigma_log", i.sigma_log),
        ("avoid_turn_rate", i.avoid_turn_rate),
        ("p_snag", i.p_snag),
        ("p_escape_free", i.p_escape_free),
        ("p_escape_stim", i.p_escape_stim),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            r.violate(format!("insect.{key}"), format!("must be ≥ 0 (got {v})"));
        }
    }
}

fn check_terrain(r: &mut Reader, t: &Terrain) {
    if !(t.side > 0.0 && t.side.is_finite()) {
        r.violate("terrain.side", format!("side > 0 (got {})", t.side));
        return;
    }
    let touches_bounds = |c: &Circle| {
        let nearest = Vec2::new(c.center.x.clamp(0.0, t.side), c.center.y.clamp(0.0, t.side));
        nearest.distance(c.center) <= c.radius
    };
    for (i, c) in t.obstacles.iter().enumerate() {
        if !(c.radius > 0.0) {
            r.violate(format!("terrain.obstacles[{i}].r"), "radius > 0");
        } else if !touches_bounds(c) {
            r.violate(format!("terrain.obstacles[{i}]"), "circle must intersect the field");
        }
    }
    for (i, h) in t.hills.iter().enumerate() {
        if !(h.area.radius > 0.0) {
            r.violate(format!("terrain.hills[{i}].r"), "radius > 0");
        } else if !touches_bounds(&h.area) {
            r.violate(format!("terrain.hills[{i}]"), "circle must intersect the field");
        }
        if !(h.speed_factor > 0.0 && h.speed_factor <= 1.0) {
            r.violate(
                format!("terrain.hills[{i}].factor"),
                format!("speed_factor in (0, 1] (got {})", h.speed_factor),
            );
        }
    }
    let g = t.goal;
    if !(g.radius > 0.0) {
        r.violate("terrain.goal.r", "radius > 0");
    }
    if !(g.center.x - g.radius >= 0.0
        && g.center.x + g.radius <= t.side
        && g.center.y - g.radius >= 0.0
        && g.center.y + g.radius <= t.side)
    {
        r.violate("terrain.goal", "goal circle must lie within the field");
    }
    if t.obstacles.iter().any(|o| o.center.distance(g.center) < o.radius) {
        r.violate("terrain.goal", "goal center lies inside an obstacle");
    }
    if !(t.start_width > 0.0 && t.start_depth > 0.0) {
        r.violate("terrain.start_width", "start strip dimensions must be > 0");
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

#[derive(Default)]
struct Reader {
    violations: Vec<Violation>,
}

impl Reader {
    fn violate(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

/// A view on one table of the config; absent sections read as empty.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn root(table: &'a Table) -> Self {
        Section {
            path: String::new(),
            table: Some(table),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn section(&self, r: &mut Reader, key: &str) -> Section<'a> {
        let table = match self.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                r.violate(self.field(key), "expected a table");
                None
            }
        };
        Section {
            path: self.field(key),
            table,
        }
    }

    fn num(&self, r: &mut Reader, key: &str, default: f64) -> f64 {
        match self.get(key) {
            None => default,
            Some(v) => as_f64(v).unwrap_or_else(|| {
                r.violate(self.field(key), "expected a number");
                default
            }),
        }
    }

    fn count(&self, r: &mut Reader, key: &str, default: usize) -> usize {
        match self.get(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                r.violate(self.field(key), "expected a non-negative integer");
                default
            }
        }
    }

    fn string(&self, r: &mut Reader, key: &str, default: &str) -> String {
        match self.get(key) {
            None => default.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                r.violate(self.field(key), "expected a string");
                default.to_string()
            }
        }
    }

    /// Flags every key not in `known`.
    fn finish(&self, r: &mut Reader, known: &[&str]) {
        if let Some(t) = self.table {
            for key in t.keys().filter(|k| !known.contains(&k.as_str())) {
                r.violate(self.field(key), "unknown key");
            }
        }
    }
}

impl Config {
    /// Renders the config back to the TOML schema accepted by [`validate_config`].
    pub fn to_toml(&self) -> String {
        fn circle(c: &Circle) -> Value {
            let mut t = Table::new();
            t.insert("x".into(), c.center.x.into());
            t.insert("y".into(), c.center.y.into());
            t.insert("r".into(), c.radius.into());
            Value::Table(t)
        }
        fn table(entries: Vec<(&str, Value)>) -> Value {
            Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
        }
        let p = &self.params;
        let i = &self.insect;
        let t = &self.terrain;
        let mut root = Table::new();
        root.insert("controller".into(), self.controller.name().into());
        root.insert("agents".into(), (self.agents as i64).into());
        root.insert("seed".into(), (p.seed as i64).into());
        root.insert(
            "sim".into(),
            table(vec![
                ("dt", p.dt.into()),
                ("t_max", p.t_max.into()),
                ("sensing_range", p.sensing_range.into()),
                ("free_range", p.free_range.into()),
                ("body_radius", p.body_radius.into()),
                ("avoid_distance", p.avoid_distance.into()),
                ("v_max", p.v_max.into()),
            ]),
        );
        let selection = match p.target_selection {
            TargetSelection::Nearest => "nearest",
            TargetSelection::Random => "random",
        };
        root.insert(
            "tgi".into(),
            table(vec![
                ("M", (p.neighbor_threshold as i64).into()),
                ("sectors", (p.num_sectors as i64).into()),
                ("theta_threshold_deg", p.theta_threshold_deg.into()),
                ("v_threshold", p.v_threshold.into()),
                ("k_a", p.accel_gain.into()),
                ("k_s", p.steer_gain.into()),
                ("target_selection", selection.into()),
            ]),
        );
        root.insert(
            "boids".into(),
            table(vec![
                ("w_sep", self.boids.w_sep.into()),
                ("w_coh", self.boids.w_coh.into()),
                ("w_ali", self.boids.w_ali.into()),
            ]),
        );
        root.insert(
            "entanglement".into(),
            table(vec![
                ("distance", p.entangle_distance.into()),
                ("probability", p.entangle_prob.into()),
                ("duration", p.entangle_duration.into()),
            ]),
        );
        root.insert(
            "insect".into(),
            table(vec![
                ("free_speed", i.free_speed.into()),
                ("turn_gain", i.turn_gain.into()),
                ("accel_gain", i.accel_gain.into()),
                ("heading_noise_sigma", i.heading_noise_sigma.into()),
                ("sigma_log", i.sigma_log.into()),
                ("speed_relax_time", i.speed_relax_time.into()),
                ("avoid_turn_rate", i.avoid_turn_rate.into()),
                ("p_snag", i.p_snag.into()),
                ("p_escape_free", i.p_escape_free.into()),
                ("p_escape_stim", i.p_escape_stim.into()),
            ]),
        );
        let hills = t
            .hills
            .iter()
            .map(|h| {
                let mut v = circle(&h.area);
                if let Value::Table(tt) = &mut v {
                    tt.insert("factor".into(), h.speed_factor.into());
                }
                v
            })
            .collect::<Vec<_>>();
        root.insert(
            "terrain".into(),
            table(vec![
                ("side", t.side.into()),
                ("start_width", t.start_width.into()),
                ("start_depth", t.start_depth.into()),
                ("goal", circle(&t.goal)),
                ("obstacles", Value::Array(t.obstacles.iter().map(circle).collect())),
                ("hills", Value::Array(hills)),
            ]),
        );
        toml::to_string(&root).expect("config tables always serialize")
    }
}
