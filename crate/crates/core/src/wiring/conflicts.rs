use std::collections::{BTreeMap, BTreeSet};

use crate::placement::{Point, WirePolyline};

use super::router::{corners, Dir, HORIZONTAL, VERTICAL};
use super::OTHER_RANK;

type Edge = (Point, Point);

fn norm(a: Point, b: Point) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConflictOutcome {
    pub wires: Vec<WirePolyline>,
    /// Nets that lost geometry and may be disconnected.
    pub flagged: BTreeSet<String>,
}

fn masks(edges: &BTreeSet<Edge>) -> BTreeMap<Point, u8> {
    let mut m: BTreeMap<Point, u8> = BTreeMap::new();
    for &(a, b) in edges {
        let d = Dir::between(a, b).expect("unit edge");
        *m.entry(a).or_default() |= d.bit();
        *m.entry(b).or_default() |= d.opposite().bit();
    }
    m
}

/// Two nets may share a point only as a clean perpendicular crossing.
fn compatible(mine: u8, theirs: &[u8]) -> bool {
    match theirs {
        [] => true,
        [t] => (*t == HORIZONTAL && mine == VERTICAL) || (*t == VERTICAL && mine == HORIZONTAL),
        _ => false,
    }
}

/// Resolve geometry shared between nets. Nets are taken in rank order (ties by
/// name); each keeps only the unit edges that neither overlap an earlier
/// net's edge nor touch an earlier net other than by a straight perpendicular
/// crossing. Duplicate edges merge, and each net's edges are re-chained into
/// canonical polylines.
pub fn remove_conflicts(wires: &[WirePolyline], ranks: &BTreeMap<String, u8>) -> ConflictOutcome {
    let mut by_net: BTreeMap<&str, BTreeSet<Edge>> = BTreeMap::new();
    for w in wires {
        let set = by_net.entry(w.net.as_str()).or_default();
        for (a, b) in w.unit_edges() {
            set.insert(norm(a, b));
        }
    }
    let mut order: Vec<&str> = by_net.keys().copied().collect();
    order.sort_by_key(|n| (ranks.get(*n).copied().unwrap_or(OTHER_RANK), *n));

    let mut taken: BTreeSet<Edge> = BTreeSet::new();
    let mut point_use: BTreeMap<Point, Vec<u8>> = BTreeMap::new();
    let mut out = ConflictOutcome::default();
    for net in order {
        let mut mine = by_net[net].clone();
        loop {
            let before = mine.len();
            mine.retain(|e| !taken.contains(e));
            let bad: BTreeSet<Point> = masks(&mine)
                .into_iter()
                .filter(|(p, m)| !compatible(*m, point_use.get(p).map(Vec::as_slice).unwrap_or(&[])))
                .map(|(p, _)| p)
                .collect();
            mine.retain(|(a, b)| !bad.contains(a) && !bad.contains(b));
            if mine.len() == before {
                break;
            }
            out.flagged.insert(net.to_string());
        }
        for (p, m) in masks(&mine) {
            point_use.entry(p).or_default().push(m);
        }
        taken.extend(mine.iter().copied());
        out.wires.extend(chain_edges(net, &mine));
    }
    out
}

/// Turn a set of unit edges into polylines that break only at endpoints and
/// junctions, with corners as the only interior points. Output is canonical:
/// each polyline starts at its smaller end, and polylines are sorted.
pub fn chain_edges(net: &str, edges: &BTreeSet<Edge>) -> Vec<WirePolyline> {
    let mut adj: BTreeMap<Point, BTreeSet<Point>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    }
    let mut used: BTreeSet<Edge> = BTreeSet::new();
    let mut paths: Vec<Vec<Point>> = Vec::new();
    let walk = |start: Point, next: Point, used: &mut BTreeSet<Edge>| {
        let mut path = vec![start, next];
        used.insert(norm(start, next));
        let (mut prev, mut cur) = (start, next);
        while adj[&cur].len() == 2 {
            let Some(&n) = adj[&cur].iter().find(|&&n| n != prev && !used.contains(&norm(cur, n))) else {
                break;
            };
            used.insert(norm(cur, n));
            path.push(n);
            prev = cur;
            cur = n;
        }
        path
    };
    for (&p, nbrs) in &adj {
        if nbrs.len() == 2 {
            continue;
        }
        for &n in nbrs {
            if !used.contains(&norm(p, n)) {
                paths.push(walk(p, n, &mut used));
            }
        }
    }
    // whatever is left forms closed loops
    for &(a, b) in edges {
        if !used.contains(&(a, b)) {
            paths.push(walk(a, b, &mut used));
        }
    }
    let mut out: Vec<WirePolyline> = paths
        .into_iter()
        .map(|p| {
            let mut c = corners(&p);
            if c.last() < c.first() {
                c.reverse();
            }
            WirePolyline::new(net, c)
        })
        .collect();
    out.sort_by(|a, b| a.points.cmp(&b.points));
    out
}
