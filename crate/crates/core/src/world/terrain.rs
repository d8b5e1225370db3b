use serde::{Deserialize, Serialize};

use super::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub const fn new(x: f64, y: f64, radius: f64) -> Self {
        Circle {
            center: Vec2::new(x, y),
            radius,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.center.distance(p) <= self.radius
    }
}

/// A slow-going patch: any agent inside has its speed scaled by `speed_factor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hill {
    pub area: Circle,
    pub speed_factor: f64,
}

/// The bounded field `[0, side] x [0, side]` with its features.
///
/// Controllers never see this; only the insect model (innate sensing) and
/// the engine query it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Terrain {
    pub side: f64,
    pub obstacles: Vec<Circle>,
    pub hills: Vec<Hill>,
    pub goal: Circle,
    /// Extent of the start strip along the edge opposite the goal.
    pub start_width: f64,
    pub start_depth: f64,
}

impl Terrain {
    pub fn in_bounds(&self, p: Vec2) -> bool {
        (0.0..=self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.side), p.y.clamp(0.0, self.side))
    }

    /// Start strip `(min, max)` corners: centered on the field edge farthest
    /// from the goal center.
    pub fn start_zone(&self) -> (Vec2, Vec2) {
        let g = self.goal.center;
        let s = self.side;
        // distance from goal center to each edge: left, right, bottom, top
        let edges = [g.x, s - g.x, g.y, s - g.y];
        let far = (0..4)
            .max_by(|&a, &b| edges[a].total_cmp(&edges[b]).then(b.cmp(&a)))
            .unwrap_or(2);
        let (w, d) = (self.start_width.min(s), self.start_depth.min(s));
        let lo = (s - w) / 2.0;
        match far {
            0 => (Vec2::new(0.0, lo), Vec2::new(d, lo + w)),
            1 => (Vec2::new(s - d, lo), Vec2::new(s, lo + w)),
            2 => (Vec2::new(lo, 0.0), Vec2::new(lo + w, d)),
            _ => (Vec2::new(lo, s - d), Vec2::new(lo + w, s)),
        }
    }
}

/// Product of the speed factors of every hill containing `pos`; 1.0 on open ground.
pub fn terrain_speed_factor(pos: Vec2, terrain: &Terrain) -> f64 {
    debug_assert!(terrain.in_bounds(pos), "speed factor queried outside field: {pos:?}");
    terrain
        .hills
        .iter()
        .filter(|h| h.area.contains(pos))
        .map(|h| h.speed_factor)
        .product()
}

/// Result of [`obstacle_clearance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clearance {
    /// Signed gap to the nearest obstacle edge; negative means penetration.
    /// `f64::INFINITY` when the field has no obstacles.
    pub distance: f64,
    /// Unit vector from the nearest obstacle's center through the query point.
    /// `None` only when there are no obstacles.
    pub direction_away: Option<Vec2>,
}

impl Clearance {
    pub fn is_clear(&self) -> bool {
        self.direction_away.is_none()
    }
}

pub fn obstacle_clearance(pos: Vec2, terrain: &Terrain) -> Clearance {
    let mut best = Clearance {
        distance: f64::INFINITY,
        direction_away: None,
    };
    for obstacle in &terrain.obstacles {
        let offset = pos - obstacle.center;
        let gap = offset.length() - obstacle.radius;
        if best.direction_away.is_none() || gap < best.distance {
            // A point exactly at the center has no preferred exit; use +x.
            let dir = offset.normalized().unwrap_or(Vec2::new(1.0, 0.0));
            best = Clearance {
                distance: gap,
                direction_away: Some(dir),
            };
        }
    }
    best
}

/// Gap to the nearest side of the field, with the inward normal of that side.
pub fn fence_clearance(pos: Vec2, terrain: &Terrain) -> Clearance {
    let s = terrain.side;
    let sides = [
        (pos.x, Vec2::new(1.0, 0.0)),
        (s - pos.x, Vec2::new(-1.0, 0.0)),
        (pos.y, Vec2::new(0.0, 1.0)),
        (s - pos.y, Vec2::new(0.0, -1.0)),
    ];
    let (distance, normal) = sides.into_iter().fold(
        (f64::INFINITY, sides[0].1),
        |best, c| if c.0 < best.0 { c } else { best },
    );
    Clearance {
        distance,
        direction_away: Some(normal),
    }
}

/// Moves `pos` out of any obstacle it penetrates, onto the nearest boundary.
/// Overlapping obstacles are resolved by repeated projection.
pub(crate) fn push_out_of_obstacles(pos: Vec2, terrain: &Terrain) -> Vec2 {
    let mut p = pos;
    for _ in 0..8 {
        let c = obstacle_clearance(p, terrain);
        match c.direction_away {
            Some(dir) if c.distance < 0.0 => p += dir * (-c.distance),
            _ => break,
        }
    }
    p
}
