//! Per-episode map generation: road network, base area, obstacles and
//! target spawn points.
//!
//! Draws happen in a fixed order (roads, base, obstacles) from the episode
//! stream, so a map is a pure function of `(seed, scenario)` and is never
//! serialized structurally.

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec2};
use crate::rng::RngStream;
use crate::scenario::ScenarioConfig;

pub const ARENA_SIZE: f64 = 1000.0;
pub const GRID_SIDE: usize = 5;
pub const GRID_PITCH: f64 = 200.0;
pub const NODE_JITTER: f64 = 40.0;
pub const EXTRA_EDGE_PROBABILITY: f64 = 0.5;
pub const MAX_ROAD_NODES: usize = GRID_SIDE * GRID_SIDE;
/// Number of 4-neighbour pairs in the grid.
pub const MAX_ROAD_EDGES: usize = 2 * GRID_SIDE * (GRID_SIDE - 1);

pub const BASE_HALF_EXTENT: f64 = 20.0;
pub const OBSTACLE_MIN_SIDE: f64 = 40.0;
pub const OBSTACLE_MAX_SIDE: f64 = 120.0;
pub const OBSTACLE_CLEARANCE: f64 = 25.0;
pub const BASE_CLEARANCE: f64 = 25.0;
pub const ROAD_CLEARANCE: f64 = 10.0;
pub const OBSTACLE_ATTEMPTS: usize = 200;

pub const TARGET_CLEARANCE: f64 = 10.0;
pub const TARGET_ATTEMPTS: usize = 500;

pub fn arena() -> Aabb {
    Aabb::new(Vec2::ZERO, Vec2::new(ARENA_SIZE, ARENA_SIZE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadGraph {
    pub nodes: Vec<Vec2>,
    pub edges: Vec<RoadEdge>,
    /// Incident edge indices per node, sorted by outgoing bearing.
    pub adjacency: Vec<Vec<usize>>,
}

impl RoadGraph {
    /// Builds a graph from nodes and `(a, b)` pairs, computing lengths and
    /// the bearing-sorted adjacency.
    pub fn from_edges(nodes: Vec<Vec2>, pairs: &[(usize, usize)]) -> Self {
        let edges: Vec<RoadEdge> = pairs
            .iter()
            .map(|&(a, b)| RoadEdge { a, b, length: nodes[a].distance(nodes[b]) })
            .collect();
        let mut graph = Self { adjacency: vec![Vec::new(); nodes.len()], nodes, edges };
        for (i, e) in graph.edges.iter().enumerate() {
            graph.adjacency[e.a].push(i);
            graph.adjacency[e.b].push(i);
        }
        for node in 0..graph.nodes.len() {
            let mut adj = std::mem::take(&mut graph.adjacency[node]);
            adj.sort_by(|&x, &y| {
                graph
                    .outgoing_bearing(node, x)
                    .total_cmp(&graph.outgoing_bearing(node, y))
                    .then(x.cmp(&y))
            });
            graph.adjacency[node] = adj;
        }
        graph
    }

    pub fn other_end(&self, edge: usize, node: usize) -> usize {
        let e = &self.edges[edge];
        if e.a == node {
            e.b
        } else {
            e.a
        }
    }

    /// Bearing of `edge` leaving `node`.
    pub fn outgoing_bearing(&self, node: usize, edge: usize) -> f64 {
        (self.nodes[self.other_end(edge, node)] - self.nodes[node]).bearing()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn point_on_edge(&self, edge: usize, progress: f64) -> Vec2 {
        let e = &self.edges[edge];
        self.nodes[e.a].lerp(self.nodes[e.b], progress)
    }

    /// Distance from `p` to the nearest road segment.
    pub fn distance_to_road(&self, p: Vec2) -> f64 {
        self.edges
            .iter()
            .map(|e| crate::geometry::segment_point_distance(self.nodes[e.a], self.nodes[e.b], p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &e in &self.adjacency[n] {
                let m = self.other_end(e, n);
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseArea {
    pub center: Vec2,
    pub half_extent: f64,
}

impl BaseArea {
    pub fn footprint(&self) -> Aabb {
        Aabb::from_center(self.center, self.half_extent)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.footprint().contains(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMap {
    pub arena: Aabb,
    pub base: Option<BaseArea>,
    pub obstacles: Vec<Aabb>,
    pub roads: Option<RoadGraph>,
    /// Boxes skipped because rejection sampling ran out of attempts.
    pub dropped_obstacles: usize,
}

impl ScenarioMap {
    pub fn empty() -> Self {
        Self { arena: arena(), base: None, obstacles: Vec::new(), roads: None, dropped_obstacles: 0 }
    }

    /// Distance to the closest obstacle point, or infinity without obstacles.
    pub fn nearest_obstacle_distance(&self, p: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|b| b.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Jittered 5x5 grid; random spanning tree plus coin-flipped extra edges.
pub fn generate_road_graph(rng: &mut RngStream, arena: &Aabb) -> RoadGraph {
    let span = GRID_PITCH * (GRID_SIDE - 1) as f64;
    let origin = Vec2::new(
        arena.min.x + (arena.width() - span) / 2.0,
        arena.min.y + (arena.height() - span) / 2.0,
    );
    let mut nodes = Vec::with_capacity(MAX_ROAD_NODES);
    for row in 0..GRID_SIDE {
        for col in 0..GRID_SIDE {
            let jx = rng.uniform_range(-NODE_JITTER, NODE_JITTER);
            let jy = rng.uniform_range(-NODE_JITTER, NODE_JITTER);
            nodes.push(Vec2::new(
                origin.x + col as f64 * GRID_PITCH + jx,
                origin.y + row as f64 * GRID_PITCH + jy,
            ));
        }
    }

    let mut candidates = Vec::with_capacity(MAX_ROAD_EDGES);
    for row in 0..GRID_SIDE {
        for col in 0..GRID_SIDE {
            let i = row * GRID_SIDE + col;
            if col + 1 < GRID_SIDE {
                candidates.push((i, i + 1));
            }
            if row + 1 < GRID_SIDE {
                candidates.push((i, i + GRID_SIDE));
            }
        }
    }
    rng.shuffle(&mut candidates);

    let mut sets = DisjointSet((0..MAX_ROAD_NODES).collect());
    let mut chosen = Vec::with_capacity(MAX_ROAD_EDGES);
    let mut leftover = Vec::new();
    for &(a, b) in &candidates {
        if sets.union(a, b) {
            chosen.push((a, b));
        } else {
            leftover.push((a, b));
        }
    }
    for pair in leftover {
        if rng.uniform() < EXTRA_EDGE_PROBABILITY {
            chosen.push(pair);
        }
    }
    chosen.sort_unstable();
    RoadGraph::from_edges(nodes, &chosen)
}

fn obstacle_fits(candidate: &Aabb, placed: &[Aabb], base: Option<&BaseArea>, roads: Option<&RoadGraph>) -> bool {
    if placed.iter().any(|b| b.distance_to_aabb(candidate) < OBSTACLE_CLEARANCE) {
        return false;
    }
    if let Some(base) = base {
        if base.footprint().distance_to_aabb(candidate) < BASE_CLEARANCE {
            return false;
        }
    }
    if let Some(roads) = roads {
        let near_road = roads.edges.iter().any(|e| {
            candidate.distance_to_segment(roads.nodes[e.a], roads.nodes[e.b]) < ROAD_CLEARANCE
        });
        if near_road {
            return false;
        }
    }
    true
}

pub fn generate_map(rng: &mut RngStream, scenario: &ScenarioConfig) -> ScenarioMap {
    let challenge = scenario.challenge;
    let arena = arena();
    let roads = challenge.has_roads().then(|| generate_road_graph(rng, &arena));

    let base = challenge.has_base().then(|| {
        let x = rng.uniform_range(200.0, 800.0);
        let y = rng.uniform_range(200.0, 800.0);
        BaseArea { center: Vec2::new(x, y), half_extent: BASE_HALF_EXTENT }
    });

    let wanted = challenge.obstacle_count();
    let mut obstacles = Vec::with_capacity(wanted);
    let mut dropped = 0;
    for _ in 0..wanted {
        let mut placed = false;
        for _ in 0..OBSTACLE_ATTEMPTS {
            let w = rng.uniform_range(OBSTACLE_MIN_SIDE, OBSTACLE_MAX_SIDE);
            let h = rng.uniform_range(OBSTACLE_MIN_SIDE, OBSTACLE_MAX_SIDE);
            let x = rng.uniform_range(arena.min.x, arena.max.x - w);
            let y = rng.uniform_range(arena.min.y, arena.max.y - h);
            let candidate = Aabb::new(Vec2::new(x, y), Vec2::new(x + w, y + h));
            if obstacle_fits(&candidate, &obstacles, base.as_ref(), roads.as_ref()) {
                obstacles.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            dropped += 1;
        }
    }

    ScenarioMap { arena, base, obstacles, roads, dropped_obstacles: dropped }
}

/// Uniform spawn point clear of obstacles and outside the base. Returns the
/// point and whether it was accepted (false when the attempt budget ran out
/// and the last sample was kept anyway).
pub fn spawn_target(rng: &mut RngStream, map: &ScenarioMap) -> (Vec2, bool) {
    let mut p = Vec2::ZERO;
    for _ in 0..TARGET_ATTEMPTS {
        p = Vec2::new(
            rng.uniform_range(map.arena.min.x, map.arena.max.x),
            rng.uniform_range(map.arena.min.y, map.arena.max.y),
        );
        let in_base = map.base.is_some_and(|b| b.contains(p));
        if !in_base && map.nearest_obstacle_distance(p) >= TARGET_CLEARANCE {
            return (p, true);
        }
    }
    (p, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::lookup_scenario;

    fn union_find_connected(g: &RoadGraph) -> bool {
        let mut parent: Vec<usize> = (0..g.nodes.len()).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        for e in &g.edges {
            let (ra, rb) = (root(&mut parent, e.a), root(&mut parent, e.b));
            parent[ra] = rb;
        }
        let r0 = root(&mut parent, 0);
        (0..g.nodes.len()).all(|i| root(&mut parent, i) == r0)
    }

    #[test]
    fn road_graph_shape() {
        for seed in 0..100 {
            let mut rng = RngStream::seed(seed);
            let g = generate_road_graph(&mut rng, &arena());
            assert_eq!(g.nodes.len(), 25);
            assert!(g.edges.len() >= 24 && g.edges.len() <= MAX_ROAD_EDGES);
            assert!(union_find_connected(&g));
            assert!(g.is_connected());
            for (i, n) in g.nodes.iter().enumerate() {
                let cx = 100.0 + (i % 5) as f64 * 200.0;
                let cy = 100.0 + (i / 5) as f64 * 200.0;
                assert!((n.x - cx).abs() <= 40.0 && (n.y - cy).abs() <= 40.0);
            }
            for (i, e) in g.edges.iter().enumerate() {
                assert_ne!(e.a, e.b);
                assert_eq!(e.length, g.nodes[e.a].distance(g.nodes[e.b]));
                assert!(g.adjacency[e.a].contains(&i) && g.adjacency[e.b].contains(&i));
            }
            for node in 0..25 {
                assert!(g.degree(node) <= 4);
                let bearings: Vec<f64> =
                    g.adjacency[node].iter().map(|&e| g.outgoing_bearing(node, e)).collect();
                assert!(bearings.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn simple_fleet_map_is_bare() {
        let s = lookup_scenario("simple_fleet_3q1o").unwrap();
        let m = generate_map(&mut RngStream::seed(3), &s);
        assert!(m.obstacles.is_empty() && m.base.is_none() && m.roads.is_none());
    }

    #[test]
    fn fleet_map_deterministic_and_clear() {
        let s = lookup_scenario("fleet_10q3o").unwrap();
        for seed in 0..30 {
            let a = generate_map(&mut RngStream::seed(seed), &s);
            let b = generate_map(&mut RngStream::seed(seed), &s);
            assert_eq!(a, b);
            assert!(a.base.is_some() && a.roads.is_none());
            assert_eq!(a.obstacles.len() + a.dropped_obstacles, 8);
            assert!(!a.obstacles.is_empty());
            let base = a.base.unwrap().footprint();
            assert!(a.arena.contains(base.min) && a.arena.contains(base.max));
            for (i, o) in a.obstacles.iter().enumerate() {
                assert!(base.distance_to_aabb(o) >= BASE_CLEARANCE);
                for p in &a.obstacles[i + 1..] {
                    assert!(o.distance_to_aabb(p) >= OBSTACLE_CLEARANCE);
                }
            }
        }
    }

    #[test]
    fn complex_map_has_connected_roads() {
        let s = lookup_scenario("complex_fleet_5q2o1p").unwrap();
        let m = generate_map(&mut RngStream::seed(11), &s);
        let roads = m.roads.as_ref().unwrap();
        assert_eq!(roads.nodes.len(), 25);
        assert!(roads.is_connected());
        assert!(m.base.is_some());
    }

    #[test]
    fn spawn_on_empty_map_is_first_sample() {
        let map = ScenarioMap::empty();
        let mut rng = RngStream::seed(9);
        let (p, ok) = spawn_target(&mut rng, &map);
        let mut probe = RngStream::seed(9);
        let expected = Vec2::new(probe.uniform() * 1000.0, probe.uniform() * 1000.0);
        assert!(ok);
        assert_eq!(p, expected);
        assert_eq!(spawn_target(&mut RngStream::seed(9), &map).0, p);
    }

    #[test]
    fn spawns_avoid_obstacles() {
        let s = lookup_scenario("complex_fleet_3q1o1p").unwrap();
        let mut rng = RngStream::seed(21);
        let map = generate_map(&mut rng, &s);
        for _ in 0..10_000 {
            let (p, ok) = spawn_target(&mut rng, &map);
            assert!(ok);
            assert!(map.obstacles.iter().all(|b| !b.contains(p)));
            assert!(!map.base.unwrap().contains(p));
        }
    }
}
