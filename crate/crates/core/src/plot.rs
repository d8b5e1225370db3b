//! Standalone top-view SVG trajectory plots:
//! follower paths blue, leader path yellow, red rings where stimulation was
//! applied, black dots at the final positions.

use std::fmt::Write;

use crate::engine::TrialLog;

/// Pixels per meter.
pub const SCALE: f64 = 200.0;
pub const FOLLOWER_COLOR: &str = "#1f5fd6";
pub const LEADER_COLOR: &str = "#f2c500";
pub const STIM_COLOR: &str = "#e01010";
/// At most one stimulation mark per agent per this many seconds.
pub const MARK_INTERVAL: f64 = 1.0;

pub fn render_svg(log: &TrialLog) -> String {
    let terrain = &log.config.terrain;
    let side = terrain.side;
    let size = side * SCALE;
    let px = |x: f64| x * SCALE;
    let py = |y: f64| (side - y) * SCALE;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect class="field" x="0" y="0" width="{size}" height="{size}" fill="#f4ead2" stroke="#333" stroke-width="2"/>"##
    );
    for h in &terrain.hills {
        let _ = writeln!(
            svg,
            r##"<circle class="hill" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#c9a66b" fill-opacity="{:.2}"/>"##,
            px(h.area.center.x),
            py(h.area.center.y),
            px(h.area.radius),
            0.25 + 0.5 * (1.0 - h.speed_factor)
        );
    }
    for o in &terrain.obstacles {
        let _ = writeln!(
            svg,
            r##"<circle class="obstacle" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#777" fill-opacity="0.8"/>"##,
            px(o.center.x),
            py(o.center.y),
            px(o.radius)
        );
    }
    let g = terrain.goal;
    let _ = writeln!(
        svg,
        r##"<circle class="goal" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#2a9d3a" stroke-width="2" stroke-dasharray="8 4"/>"##,
        px(g.center.x),
        py(g.center.y),
        px(g.radius)
    );

    let n = log.config.agents;
    // followers first so the leader path is drawn on top
    let order = (1..n).chain(std::iter::once(0));
    for id in order {
        let color = if id == 0 { LEADER_COLOR } else { FOLLOWER_COLOR };
        let mut d = String::new();
        for (k, step) in log.steps.iter().enumerate() {
            let a = &step.agents[id];
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, px(a.x), py(a.y));
        }
        let _ = writeln!(
            svg,
            r#"<path class="{}" data-agent="{id}" d="{}" fill="none" stroke="{color}" stroke-width="{}"/>"#,
            if id == 0 { "leader" } else { "follower" },
            d.trim_end(),
            if id == 0 { 2.5 } else { 1.2 }
        );
    }

    for id in 0..n {
        let mut last_mark = f64::NEG_INFINITY;
        for step in &log.steps {
            let a = &step.agents[id];
            if a.voltage > 0.0 && step.time - last_mark >= MARK_INTERVAL - 1e-9 {
                last_mark = step.time;
                let _ = writeln!(
                    svg,
                    r#"<circle class="stim" cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="{STIM_COLOR}" stroke-width="1"/>"#,
                    px(a.x),
                    py(a.y)
                );
            }
        }
    }

    if let Some(last) = log.steps.last() {
        for a in &last.agents {
            let _ = writeln!(
                svg,
                r#"<circle class="final" cx="{:.2}" cy="{:.2}" r="3.5" fill="black"/>"#,
                px(a.x),
                py(a.y)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
