//! Correctness verdicts and computable aesthetics proxies for a layout.

mod summary;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::netlist::{Circuit, TerminalRole};
use crate::placement::{port_id, validate_layout, Point, SchematicLayout, Violation};
use crate::render::symbols::terminal_positions;
use crate::substructure::SubstructureMatch;
use crate::wiring::{Dir, RoutingReport};

pub use summary::{format_table, summarize_trials, RunSummary, TrialRecord};

/// Composite weights: symmetry, alignment, crossing score, length score.
pub const WEIGHTS: [f64; 4] = [0.4, 0.3, 0.2, 0.1];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ConnectivityFailure {
    pub net: String,
    /// Terminal pairs (`DEVICE:ROLE`) that are not joined by wire.
    pub missing: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ShortCircuit {
    pub nets: (String, String),
    pub cell: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aesthetics {
    pub symmetry: f64,
    pub alignment: f64,
    pub crossings: usize,
    pub total_wire_length: i64,
    pub bends: usize,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub correct: bool,
    pub connectivity_failures: Vec<ConnectivityFailure>,
    pub overlap_violations: Vec<Violation>,
    pub short_circuits: Vec<ShortCircuit>,
    pub aesthetics: Option<Aesthetics>,
}

impl EvalReport {
    pub fn violation_count(&self) -> usize {
        self.connectivity_failures
            .iter()
            .map(|f| f.missing.len())
            .sum::<usize>()
            + self.overlap_violations.len()
            + self.short_circuits.len()
    }

    pub fn composite(&self) -> f64 {
        self.aesthetics.as_ref().map(|a| a.composite).unwrap_or(0.0)
    }

    pub fn summary(&self) -> String {
        format!(
            "{} connectivity failure(s), {} overlap(s), {} short(s)",
            self.connectivity_failures.len(),
            self.overlap_violations.len(),
            self.short_circuits.len()
        )
    }

    /// Apply a point map to every coordinate in the report. Used to compare
    /// reports of transformed layouts.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> EvalReport {
        let mut out = self.clone();
        for s in &mut out.short_circuits {
            s.cell = f(s.cell);
        }
        for v in &mut out.overlap_violations {
            if let Violation::WireThroughSymbol { x, y, .. } = v {
                let p = f(Point::new(*x, *y));
                *x = p.x;
                *y = p.y;
            }
        }
        out.short_circuits.sort();
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-point direction masks of each net's wires.
fn point_masks(l: &SchematicLayout) -> BTreeMap<Point, BTreeMap<&str, u8>> {
    let mut out: BTreeMap<Point, BTreeMap<&str, u8>> = BTreeMap::new();
    for w in &l.wires {
        for (a, b) in w.unit_edges() {
            let Some(d) = Dir::between(a, b) else { continue };
            *out.entry(a).or_default().entry(w.net.as_str()).or_default() |= d.bit();
            *out.entry(b).or_default().entry(w.net.as_str()).or_default() |= d.opposite().bit();
        }
    }
    out
}

const HORIZONTAL: u8 = 1 | 2;
const VERTICAL: u8 = 4 | 8;

/// Two nets meeting at a point as a straight perpendicular crossing.
fn clean_crossing(nets: &BTreeMap<&str, u8>) -> bool {
    let masks: Vec<u8> = nets.values().copied().collect();
    matches!(masks.as_slice(), [a, b] if (*a == HORIZONTAL && *b == VERTICAL) || (*a == VERTICAL && *b == HORIZONTAL))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = x;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connectivity, overlap and short-circuit verdicts.
pub fn check_correctness(l: &SchematicLayout, c: &Circuit) -> EvalReport {
    let overlap_violations = validate_layout(l, c);
    let masks = point_masks(l);

    // every terminal the circuit needs, located where placed
    let anchors: BTreeMap<(String, TerminalRole), Point> = terminal_positions(l)
        .map(|v| v.into_iter().map(|a| ((a.component, a.role), a.point)).collect())
        .unwrap_or_default();
    let mut wanted: BTreeMap<&str, Vec<(String, Option<Point>)>> = BTreeMap::new();
    let mut owner: BTreeMap<Point, BTreeSet<&str>> = BTreeMap::new();
    for net in &c.nets {
        let list = wanted.entry(net.name.as_str()).or_default();
        for (dev, role) in &net.terminals {
            let p = anchors.get(&(dev.clone(), *role)).copied();
            list.push((format!("{dev}:{role}"), p));
        }
        let pid = port_id(&net.name);
        if let Some(&p) = anchors.get(&(pid.clone(), TerminalRole::Pin)) {
            list.push((format!("{pid}:PIN"), Some(p)));
        }
        for p in list.iter().filter_map(|(_, p)| *p) {
            owner.entry(p).or_default().insert(net.name.as_str());
        }
    }

    // nodes are (point, net) pairs; contacts other than clean crossings fuse
    // everything at the point
    let mut ids: BTreeMap<(Point, &str), usize> = BTreeMap::new();
    for (p, nets) in &masks {
        for n in nets.keys() {
            let next = ids.len();
            ids.insert((*p, n), next);
        }
    }
    let mut uf = UnionFind::new(ids.len());
    for w in &l.wires {
        for (a, b) in w.unit_edges() {
            uf.union(ids[&(a, w.net.as_str())], ids[&(b, w.net.as_str())]);
        }
    }
    let mut shorts: BTreeSet<ShortCircuit> = BTreeSet::new();
    for (p, nets) in &masks {
        if nets.len() > 1 && !clean_crossing(nets) {
            let names: Vec<&str> = nets.keys().copied().collect();
            for i in 0..names.len() {
                for j in i + 1..names.len() {
                    shorts.insert(ShortCircuit {
                        nets: (names[i].to_string(), names[j].to_string()),
                        cell: *p,
                    });
                }
                uf.union(ids[&(*p, names[0])], ids[&(*p, names[i])]);
            }
        }
    }
    // a terminal touches every wire ending on it; foreign wires there short
    for (p, own) in &owner {
        let Some(nets) = masks.get(p) else { continue };
        let mut all: BTreeSet<&str> = own.clone();
        all.extend(nets.keys().copied());
        let names: Vec<&str> = all.into_iter().collect();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                shorts.insert(ShortCircuit {
                    nets: (names[i].to_string(), names[j].to_string()),
                    cell: *p,
                });
            }
        }
        let first = nets.keys().next().copied().expect("non-empty");
        for n in nets.keys() {
            uf.union(ids[&(*p, first)], ids[&(*p, *n)]);
        }
    }

    let mut failures = Vec::new();
    for (net, terms) in &wanted {
        if terms.len() < 2 {
            continue;
        }
        // component of a terminal: any wire node at its point, else itself
        let mut comp = |p: Option<Point>| -> Option<Result<usize, Point>> {
            let p = p?;
            Some(match masks.get(&p).and_then(|m| m.keys().next()) {
                Some(n) => Ok(uf.find(ids[&(p, *n)])),
                None => Err(p),
            })
        };
        let (ref_name, ref_point) = &terms[0];
        let root = comp(*ref_point);
        let mut missing = Vec::new();
        for (name, p) in &terms[1..] {
            let here = comp(*p);
            let joined = match (&root, &here) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            };
            if !joined {
                missing.push((ref_name.clone(), name.clone()));
            }
        }
        if !missing.is_empty() {
            failures.push(ConnectivityFailure {
                net: net.to_string(),
                missing,
            });
        }
    }

    let short_circuits: Vec<ShortCircuit> = shorts.into_iter().collect();
    EvalReport {
        correct: failures.is_empty() && overlap_violations.is_empty() && short_circuits.is_empty(),
        connectivity_failures: failures,
        overlap_violations,
        short_circuits,
        aesthetics: None,
    }
}

/// Correctness plus aesthetics in one report.
pub fn evaluate(l: &SchematicLayout, c: &Circuit, matches: &[SubstructureMatch]) -> EvalReport {
    let mut r = check_correctness(l, c);
    r.aesthetics = Some(score_aesthetics(l, matches));
    r
}

/// Pair structures whose members are exact mirror images of each other:
/// same row, same kind, orientations related by a horizontal flip.
fn mirrored_pair(l: &SchematicLayout, a: &str, b: &str) -> bool {
    match (l.component(a), l.component(b)) {
        (Some(a), Some(b)) => {
            a.kind == b.kind && a.y == b.y && a.x != b.x && b.orientation == a.orientation.reflected()
        }
        _ => false,
    }
}

pub fn score_aesthetics(l: &SchematicLayout, matches: &[SubstructureMatch]) -> Aesthetics {
    let pairs: Vec<(&str, &str)> = matches
        .iter()
        .filter(|m| m.kind.is_pair())
        .filter_map(|m| m.pair())
        .collect();
    let symmetry = if pairs.is_empty() {
        1.0
    } else {
        pairs.iter().filter(|(a, b)| mirrored_pair(l, a, b)).count() as f64 / pairs.len() as f64
    };

    let centres: Vec<(i32, i32)> = l.components.iter().map(|c| c.bbox().center2()).collect();
    let alignment = if centres.len() <= 1 {
        1.0
    } else {
        let aligned = centres
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                centres
                    .iter()
                    .enumerate()
                    .any(|(j, o)| j != *i && (o.0 == c.0 || o.1 == c.1))
            })
            .count();
        aligned as f64 / centres.len() as f64
    };

    let masks = point_masks(l);
    let crossings = masks.values().filter(|nets| clean_crossing(nets)).count();
    let total_wire_length: i64 = l.wires.iter().map(|w| w.length() as i64).sum();
    let bends = l.wires.iter().map(|w| w.points.len().saturating_sub(2)).sum();

    let n = l.wires.len();
    let pair_count = n * n.saturating_sub(1) / 2;
    let crossing_score = if pair_count == 0 {
        1.0
    } else {
        1.0 - (crossings as f64 / pair_count as f64).min(1.0)
    };
    let mut bounds: BTreeMap<&str, (i32, i32, i32, i32)> = BTreeMap::new();
    for w in &l.wires {
        for p in &w.points {
            let e = bounds.entry(w.net.as_str()).or_insert((p.x, p.x, p.y, p.y));
            e.0 = e.0.min(p.x);
            e.1 = e.1.max(p.x);
            e.2 = e.2.min(p.y);
            e.3 = e.3.max(p.y);
        }
    }
    let lower_bound: i64 = bounds.values().map(|b| (b.1 - b.0 + b.3 - b.2) as i64).sum();
    let length_score = if total_wire_length == 0 {
        1.0
    } else {
        (lower_bound as f64 / total_wire_length as f64).min(1.0)
    };
    let composite =
        WEIGHTS[0] * symmetry + WEIGHTS[1] * alignment + WEIGHTS[2] * crossing_score + WEIGHTS[3] * length_score;
    Aesthetics {
        symmetry,
        alignment,
        crossings,
        total_wire_length,
        bends,
        composite,
    }
}

/// Nets the router could not finish, as reported during wiring.
pub fn unroutable_nets(r: &RoutingReport) -> Vec<String> {
    r.unroutable().into_iter().map(str::to_string).collect()
}
