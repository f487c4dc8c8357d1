use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::netlist::Circuit;
use crate::placement::{port_net, GridBox, Point, SchematicLayout, WirePolyline};
use crate::render::{terminal_positions, RenderError};

use super::{ConnectionTask, WiringError};

/// A unit step on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    E,
    W,
    N,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::W, Dir::N, Dir::S];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::E => (1, 0),
            Dir::W => (-1, 0),
            Dir::N => (0, -1),
            Dir::S => (0, 1),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Dir::E => 1,
            Dir::W => 2,
            Dir::N => 4,
            Dir::S => 8,
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::E => Dir::W,
            Dir::W => Dir::E,
            Dir::N => Dir::S,
            Dir::S => Dir::N,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Dir::E | Dir::W)
    }

    pub fn between(a: Point, b: Point) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| {
            let (dx, dy) = d.delta();
            a.x + dx == b.x && a.y + dy == b.y
        })
    }

    fn step(self, p: Point) -> Point {
        let (dx, dy) = self.delta();
        Point::new(p.x + dx, p.y + dy)
    }
}

/// Direction mask of a straight horizontal pass.
pub const HORIZONTAL: u8 = 1 | 2;
/// Direction mask of a straight vertical pass.
pub const VERTICAL: u8 = 4 | 8;

/// Mutable routing state for one layout.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoutingGrid {
    pub width: i32,
    pub height: i32,
    /// Symbol-box points, minus terminal anchors.
    pub obstacles: BTreeSet<Point>,
    /// Terminal anchors and the net they belong to, `None` if unconnected.
    pub anchors: BTreeMap<Point, Option<String>>,
    /// For each wired point, the nets on it and the directions they leave in.
    pub occupied: BTreeMap<Point, BTreeMap<String, u8>>,
}

impl RoutingGrid {
    pub fn new(width: i32, height: i32) -> Self {
        RoutingGrid {
            width,
            height,
            ..Default::default()
        }
    }

    pub fn from_layout(c: &Circuit, l: &SchematicLayout) -> Result<Self, RenderError> {
        let mut g = RoutingGrid::new(l.grid.width, l.grid.height);
        for comp in &l.components {
            g.block_box(comp.bbox());
        }
        for a in terminal_positions(l)? {
            let net = match port_net(&a.component) {
                Some(n) if c.device(&a.component).is_none() => c.net(n).map(|_| n.to_string()),
                _ => c
                    .device(&a.component)
                    .and_then(|d| d.net_of(a.role))
                    .map(str::to_string),
            };
            g.add_anchor(a.point, net);
        }
        Ok(g)
    }

    pub fn block_box(&mut self, b: GridBox) {
        for x in b.x0..=b.x1 {
            for y in b.y0..=b.y1 {
                let p = Point::new(x, y);
                if !self.anchors.contains_key(&p) {
                    self.obstacles.insert(p);
                }
            }
        }
    }

    pub fn add_anchor(&mut self, p: Point, net: Option<String>) {
        self.obstacles.remove(&p);
        // two anchors on one point belong to touching symbols; keep it closed
        // to everyone unless both agree on the net
        match self.anchors.get(&p) {
            Some(existing) if *existing != net => {
                self.anchors.insert(p, None);
            }
            _ => {
                self.anchors.insert(p, net);
            }
        }
    }

    pub fn in_bounds(&self, p: Point) -> bool {
        p.x >= 0 && p.y >= 0 && p.x <= self.width && p.y <= self.height
    }

    /// Record a routed polyline.
    pub fn mark(&mut self, net: &str, points: &[Point]) {
        let w = WirePolyline::new(net, points.to_vec());
        for (a, b) in w.unit_edges() {
            let d = Dir::between(a, b).expect("unit edge");
            *self.occupied.entry(a).or_default().entry(net.to_string()).or_default() |= d.bit();
            *self.occupied.entry(b).or_default().entry(net.to_string()).or_default() |= d.opposite().bit();
        }
    }

    fn foreign<'a>(&'a self, p: Point, net: &'a str) -> impl Iterator<Item = (&'a String, &'a u8)> + 'a {
        self.occupied
            .get(&p)
            .into_iter()
            .flatten()
            .filter(move |(n, _)| n.as_str() != net)
    }

    fn own_mask(&self, p: Point, net: &str) -> u8 {
        self.occupied.get(&p).and_then(|m| m.get(net)).copied().unwrap_or(0)
    }
}

const FREE: u8 = 0;
const BLOCKED: u8 = 1;
const H_ONLY: u8 = 2;
const V_ONLY: u8 = 3;
const INF: u32 = u32::MAX;

/// Per-point passability for one net, flattened row-major.
struct CostMap {
    w: i32,
    h: i32,
    code: Vec<u8>,
}

impl CostMap {
    fn build(grid: &RoutingGrid, net: &str) -> CostMap {
        let (w, h) = (grid.width + 1, grid.height + 1);
        let mut code = vec![FREE; (w * h).max(0) as usize];
        let idx = |p: Point| (p.y * w + p.x) as usize;
        for p in &grid.obstacles {
            if grid.in_bounds(*p) {
                code[idx(*p)] = BLOCKED;
            }
        }
        for (p, owner) in &grid.anchors {
            if grid.in_bounds(*p) && owner.as_deref() != Some(net) {
                code[idx(*p)] = BLOCKED;
            }
        }
        for p in grid.occupied.keys() {
            if !grid.in_bounds(*p) || code[idx(*p)] == BLOCKED {
                continue;
            }
            let others: Vec<u8> = grid.foreign(*p, net).map(|(_, m)| *m).collect();
            let own = grid.own_mask(*p, net);
            code[idx(*p)] = match others.as_slice() {
                [] => FREE,
                [m] if *m == HORIZONTAL && (own == 0 || own == VERTICAL) => V_ONLY,
                [m] if *m == VERTICAL && (own == 0 || own == HORIZONTAL) => H_ONLY,
                _ => BLOCKED,
            };
        }
        CostMap { w, h, code }
    }

    fn in_bounds(&self, p: Point) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.w && p.y < self.h
    }

    fn at(&self, p: Point) -> u8 {
        self.code[(p.y * self.w + p.x) as usize]
    }

    fn state(&self, p: Point, d: Option<Dir>) -> usize {
        let di = d.map(|d| d as usize).unwrap_or(4);
        ((p.y * self.w + p.x) as usize) * 5 + di
    }

    /// Next point when leaving `p` (entered moving `d_in`) in direction `d`.
    fn step(&self, p: Point, d_in: Option<Dir>, d: Dir) -> Option<Point> {
        if let Some(din) = d_in {
            if d == din.opposite() {
                return None;
            }
            if matches!(self.at(p), H_ONLY | V_ONLY) && d != din {
                return None;
            }
        }
        let q = d.step(p);
        if !self.in_bounds(q) {
            return None;
        }
        match self.at(q) {
            BLOCKED => None,
            H_ONLY if !d.is_horizontal() => None,
            V_ONLY if d.is_horizontal() => None,
            _ => Some(q),
        }
    }
}

fn bend(d_in: Option<Dir>, d: Dir) -> u32 {
    match d_in {
        Some(x) if x != d => 2,
        _ => 0,
    }
}

const DIRS_IN: [Option<Dir>; 5] = [Some(Dir::E), Some(Dir::W), Some(Dir::N), Some(Dir::S), None];

/// Cheapest path from `start` to `goal` under unit step cost plus a penalty
/// of 2 per bend. Among equal-cost paths the walk from `start` prefers
/// horizontal moves, then lower y, then lower x. Returns every unit point.
fn search(map: &CostMap, start: Point, goal: Point) -> Option<Vec<Point>> {
    if !map.in_bounds(start) || !map.in_bounds(goal) || map.at(start) != FREE || map.at(goal) != FREE {
        return None;
    }
    if start == goal {
        return Some(vec![start]);
    }
    // cost-to-go field, filled backward from the goal
    let mut dist = vec![INF; map.code.len() * 5];
    let mut heap = BinaryHeap::new();
    for d in Dir::ALL {
        let s = map.state(goal, Some(d));
        dist[s] = 0;
        heap.push(Reverse((0u32, goal, d)));
    }
    let start_state = map.state(start, None);
    while let Some(Reverse((v, q, dq))) = heap.pop() {
        if v > dist[map.state(q, Some(dq))] {
            continue;
        }
        if v >= dist[start_state] {
            break;
        }
        let p = dq.opposite().step(q);
        if !map.in_bounds(p) || p == goal {
            continue;
        }
        for d_in in DIRS_IN {
            if d_in.is_none() && p != start {
                continue;
            }
            if map.step(p, d_in, dq) != Some(q) {
                continue;
            }
            let cost = v + 1 + bend(d_in, dq);
            let s = map.state(p, d_in);
            if cost < dist[s] {
                dist[s] = cost;
                if let Some(d) = d_in {
                    heap.push(Reverse((cost, p, d)));
                }
            }
        }
    }
    if dist[start_state] == INF {
        return None;
    }

    let mut path = vec![start];
    let (mut p, mut d_in) = (start, None);
    while p != goal {
        let here = dist[map.state(p, d_in)];
        let mut options: Vec<(bool, i32, i32, Dir, Point)> = Dir::ALL
            .into_iter()
            .filter_map(|d| map.step(p, d_in, d).map(|q| (!d.is_horizontal(), q.y, q.x, d, q)))
            .collect();
        options.sort();
        let (_, _, _, d, q) = options.into_iter().find(|&(_, _, _, d, q)| {
            let rest = dist[map.state(q, Some(d))];
            rest != INF && rest + 1 + bend(d_in, d) == here
        })?;
        path.push(q);
        p = q;
        d_in = Some(d);
    }
    Some(path)
}

/// Keep only the endpoints and corners of a unit-step path.
pub(crate) fn corners(path: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for &p in path {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            if (a.x == b.x && b.x == p.x) || (a.y == b.y && b.y == p.y) {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

fn unit_points(points: &[Point]) -> Vec<Point> {
    let w = WirePolyline::new("", points.to_vec());
    let mut out = vec![points[0]];
    out.extend(w.unit_edges().into_iter().map(|(_, b)| b));
    out
}

/// How many already-routed cells to try before giving up on a terminal.
const CANDIDATES: usize = 12;

/// Connect the task's terminals: the second to the first, then each further
/// terminal to the nearest cell already routed for this net. A lone terminal
/// gets a two-unit stub into free space.
pub fn route_net(task: &ConnectionTask, grid: &mut RoutingGrid) -> Result<Vec<WirePolyline>, WiringError> {
    let net = task.net.as_str();
    let unroutable = |partial: Vec<WirePolyline>| WiringError::Unroutable {
        net: net.to_string(),
        partial,
    };
    let Some(first) = task.terminals.first() else {
        return Ok(Vec::new());
    };
    let map = CostMap::build(grid, net);

    if task.terminals.len() == 1 {
        let p = first.point;
        for d in [Dir::W, Dir::E, Dir::N, Dir::S] {
            let Some(q) = map.step(p, None, d) else { continue };
            let Some(r) = map.step(q, Some(d), d) else { continue };
            if map.in_bounds(p) && map.at(p) == FREE && map.at(q) == FREE && map.at(r) == FREE {
                let pts = vec![p, r];
                grid.mark(net, &pts);
                return Ok(vec![WirePolyline::new(net, pts)]);
            }
        }
        return Err(unroutable(Vec::new()));
    }

    let mut tree: BTreeSet<Point> = BTreeSet::from([first.point]);
    let mut wires = Vec::new();
    let mut failed = false;
    for t in &task.terminals[1..] {
        if tree.contains(&t.point) {
            continue;
        }
        let mut candidates: Vec<Point> = tree
            .iter()
            .copied()
            .filter(|p| map.in_bounds(*p) && map.at(*p) == FREE)
            .collect();
        candidates.sort_by_key(|p| (p.manhattan(t.point), p.x, p.y));
        let found = candidates
            .into_iter()
            .take(CANDIDATES)
            .find_map(|g| search(&map, g, t.point));
        match found {
            Some(path) => {
                let pts = corners(&path);
                if pts.len() >= 2 {
                    grid.mark(net, &pts);
                    tree.extend(unit_points(&pts));
                    wires.push(WirePolyline::new(net, pts));
                }
            }
            None => failed = true,
        }
    }
    if failed {
        Err(unroutable(wires))
    } else {
        Ok(wires)
    }
}
