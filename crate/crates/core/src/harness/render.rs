//! Static SVG frames re-rendered from replay logs.
//!
//! Colors: obstacles red, base blue, roads grey, targets green. Agents use
//! glyphs: quadcopters black circles, observers orange triangles along their
//! heading, provisioners purple squares.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::replay::{read_replay, ReplayError};
use crate::env::EnvState;
use crate::geometry::Vec2;
use crate::world::{AgentState, TargetPhase};

/// Pixels per meter.
const SCALE: f64 = 0.6;
const MARGIN: f64 = 40.0;

fn px(p: Vec2, height: f64) -> (f64, f64) {
    (MARGIN + p.x * SCALE, height - MARGIN - p.y * SCALE)
}

/// One frame of the current world.
pub fn render_svg(env: &EnvState) -> String {
    let world = &env.world;
    let arena = world.map.arena;
    let w = arena.width() * SCALE + 2.0 * MARGIN;
    let h = arena.height() * SCALE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let (ax, ay) = px(Vec2::new(arena.min.x, arena.max.y), h);
    let _ = writeln!(
        s,
        r#"<rect x="{ax:.2}" y="{ay:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
        arena.width() * SCALE,
        arena.height() * SCALE
    );

    if let Some(roads) = &world.map.roads {
        for e in &roads.edges {
            let (x1, y1) = px(roads.nodes[e.a], h);
            let (x2, y2) = px(roads.nodes[e.b], h);
            let _ = writeln!(
                s,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="grey" stroke-width="4"/>"#
            );
        }
    }
    if let Some(base) = world.map.base {
        let fp = base.footprint();
        let (x, y) = px(Vec2::new(fp.min.x, fp.max.y), h);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="blue" fill-opacity="0.6"/>"#,
            fp.width() * SCALE,
            fp.height() * SCALE
        );
    }
    for b in &world.map.obstacles {
        let (x, y) = px(Vec2::new(b.min.x, b.max.y), h);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="red"/>"#,
            b.width() * SCALE,
            b.height() * SCALE
        );
    }
    for t in &world.targets {
        let pos = match t.phase {
            TargetPhase::Carried(by) => world.agent_pos(by),
            _ => t.pos,
        };
        let (x, y) = px(pos, h);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="green"/>"#);
    }
    for (i, a) in world.agents.iter().enumerate() {
        let (x, y) = px(world.agent_pos(i), h);
        match a {
            AgentState::Quad(_) => {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#);
            }
            AgentState::Observer(o) => {
                // screen y points down
                let pts: Vec<String> = [(0.0, 12.0), (2.5, 7.0), (-2.5, 7.0)]
                    .iter()
                    .map(|&(da, r)| {
                        let ang = o.heading + da;
                        format!("{:.2},{:.2}", x + r * ang.cos(), y - r * ang.sin())
                    })
                    .collect();
                let _ = writeln!(s, r#"<polygon points="{}" fill="orange"/>"#, pts.join(" "));
            }
            AgentState::Provisioner(_) => {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="purple"/>"#,
                    x - 5.0,
                    y - 5.0
                );
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.0}" font-family="monospace" font-size="14">{} seed {} step {} return {}</text>"#,
        MARGIN - 12.0,
        world.scenario.id,
        env.seed,
        env.world_step,
        env.cumulative_return
    );
    s.push_str("</svg>\n");
    s
}

/// Re-executes a replay and writes a frame after every `every`-th world
/// step. Returns the written paths in order.
pub fn render_frames(replay: &Path, out_dir: &Path, every: u64) -> Result<Vec<PathBuf>, ReplayError> {
    if every == 0 {
        return Err(ReplayError::Corrupt("frame interval must be positive".into()));
    }
    let log = read_replay(replay)?;
    std::fs::create_dir_all(out_dir)?;
    let mut env = EnvState::reset(&log.header.scenario, log.header.seed)?;
    let mut written = Vec::new();
    for rec in &log.records {
        if rec.agent != env.current_agent_id() {
            return Err(ReplayError::Corrupt(format!("record for {} out of turn", rec.agent)));
        }
        let outcome = env.step(&rec.action)?;
        if outcome.info.world_advanced && env.world_step % every == 0 {
            let path = out_dir.join(format!("frame_{:06}.svg", env.world_step));
            std::fs::write(&path, render_svg(&env))?;
            written.push(path);
        }
    }
    Ok(written)
}
