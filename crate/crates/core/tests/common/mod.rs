#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use schemgen::eval::EvalReport;
use schemgen::netlist::{parse_netlist, Circuit, TerminalRole};
use schemgen::placement::{initial_place, port_net, validate_layout, Point, SchematicLayout, WirePolyline};
use schemgen::render::terminal_positions;
use schemgen::substructure::detect;
use schemgen::wiring::wire_layout;

pub const FIXTURES: [&str; 3] = ["inverter", "ota5t", "telescopic"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.sp"))
}

pub fn fixture(name: &str) -> Circuit {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_netlist(&text).expect("fixture parses")
}

/// Deterministic placement followed by routing.
pub fn wired(c: &Circuit) -> SchematicLayout {
    let m = detect(c);
    let placed = initial_place(c, &m).expect("placement fits");
    wire_layout(c, &placed).expect("routing runs").0
}

const SIGNALS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Random netlist text with `1..=max_devices` elements, mostly MOS.
pub fn random_netlist(rng: &mut impl Rng, max_devices: usize, mos_only: bool) -> String {
    let n = rng.gen_range(1..=max_devices);
    let signals = &SIGNALS[..rng.gen_range(2..=SIGNALS.len())];
    let pick = |rng: &mut dyn rand::RngCore| -> String {
        let r = rng.gen_range(0..10);
        match r {
            0 => "VDD".into(),
            1 => "GND".into(),
            _ => signals.choose(rng).expect("non-empty").to_string(),
        }
    };
    let mut text = String::from("* random\n");
    let mut used = BTreeSet::new();
    for i in 1..=n {
        let kind = if mos_only { 0 } else { rng.gen_range(0..8) };
        let line = match kind {
            0..=4 => {
                let pmos = rng.gen_bool(0.5);
                let d = pick(rng);
                let g = pick(rng);
                let s = pick(rng);
                let b = if pmos { "VDD" } else { "GND" };
                used.extend([d.clone(), g.clone(), s.clone()]);
                format!("M{i} {d} {g} {s} {b} {}", if pmos { "PMOS" } else { "NMOS" })
            }
            5 => {
                let (a, b) = (pick(rng), pick(rng));
                used.extend([a.clone(), b.clone()]);
                format!("R{i} {a} {b} 1k")
            }
            6 => {
                let (a, b) = (pick(rng), pick(rng));
                used.extend([a.clone(), b.clone()]);
                format!("C{i} {a} {b} 1p")
            }
            _ => {
                let (a, b) = (pick(rng), pick(rng));
                used.extend([a.clone(), b.clone()]);
                format!("I{i} {a} {b} 1u")
            }
        };
        text.push_str(&line);
        text.push('\n');
    }
    let ports: Vec<&String> = used
        .iter()
        .filter(|n| n.as_str() != "VDD" && n.as_str() != "GND")
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    if !ports.is_empty() {
        text.push_str(".ports");
        for p in ports {
            text.push(' ');
            text.push_str(p);
        }
        text.push('\n');
    }
    text
}

pub fn random_circuit(rng: &mut impl Rng, max_devices: usize, mos_only: bool) -> Circuit {
    loop {
        let text = random_netlist(rng, max_devices, mos_only);
        if let Ok(c) = parse_netlist(&text) {
            return c;
        }
    }
}

fn random_point(rng: &mut impl Rng, l: &SchematicLayout) -> Point {
    Point::new(rng.gen_range(0..=l.grid.width), rng.gen_range(0..=l.grid.height))
}

/// A placed and routed random circuit, then (usually) damaged in one of
/// several ways so that both correct and incorrect layouts occur.
pub fn random_layout(rng: &mut impl Rng, max_devices: usize) -> (Circuit, SchematicLayout) {
    loop {
        let c = random_circuit(rng, max_devices, false);
        let m = detect(&c);
        let Ok(placed) = initial_place(&c, &m) else { continue };
        let Ok((mut l, _)) = wire_layout(&c, &placed) else {
            continue;
        };
        match rng.gen_range(0..7) {
            0 => {}
            1 if !l.wires.is_empty() => {
                let i = rng.gen_range(0..l.wires.len());
                l.wires.remove(i);
            }
            2 if !l.components.is_empty() => {
                let i = rng.gen_range(0..l.components.len());
                l.components[i].x += rng.gen_range(-3..=3);
                l.components[i].y += rng.gen_range(-3..=3);
            }
            3 => {
                let net = c.nets.choose(rng).map(|n| n.name.clone()).unwrap_or_else(|| "A".into());
                let a = random_point(rng, &l);
                let b = random_point(rng, &l);
                l.wires.push(WirePolyline::new(net, vec![a, Point::new(b.x, a.y), b]));
            }
            4 if !l.wires.is_empty() && !c.nets.is_empty() => {
                let i = rng.gen_range(0..l.wires.len());
                l.wires[i].net = c.nets.choose(rng).expect("non-empty").name.clone();
            }
            5 if !l.wires.is_empty() => {
                let i = rng.gen_range(0..l.wires.len());
                let (dx, dy) = (rng.gen_range(-2..=2), rng.gen_range(-2..=2));
                for p in &mut l.wires[i].points {
                    p.x += dx;
                    p.y += dy;
                }
            }
            _ => {
                // a wire from a terminal of one net onto another net's anchor
                if let Ok(anchors) = terminal_positions(&l) {
                    if anchors.len() >= 2 {
                        let a = anchors.choose(rng).expect("non-empty").point;
                        let b = anchors.choose(rng).expect("non-empty").point;
                        let net = c.nets.choose(rng).map(|n| n.name.clone()).unwrap_or_else(|| "A".into());
                        l.wires.push(WirePolyline::new(net, vec![a, Point::new(b.x, a.y), b]));
                    }
                }
            }
        }
        l.wires.retain(|w| w.is_well_formed());
        return (c, l);
    }
}

/// What the reference checker decides about a layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub failing_nets: BTreeSet<String>,
    pub shorts: BTreeSet<(String, String, Point)>,
    pub correct: bool,
}

/// Every grid point a polyline covers, with the axis of travel at that point
/// (bit 0 horizontal, bit 1 vertical), computed by walking each segment.
fn coverage(w: &WirePolyline) -> Vec<(Point, u8, Option<Point>)> {
    let mut out = Vec::new();
    for seg in w.points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let steps = (b.x - a.x).abs() + (b.y - a.y).abs();
        let (sx, sy) = ((b.x - a.x).signum(), (b.y - a.y).signum());
        let axis = if sy == 0 { 1 } else { 2 };
        let mut prev: Option<Point> = None;
        for k in 0..=steps {
            let p = Point::new(a.x + sx * k, a.y + sy * k);
            out.push((p, axis, prev));
            prev = Some(p);
        }
    }
    out
}

/// Per point, per net: which sides of the point the net's wires leave by
/// (bit order W, E, N, S).
fn sides(l: &SchematicLayout) -> BTreeMap<Point, BTreeMap<String, [bool; 4]>> {
    let mut out: BTreeMap<Point, BTreeMap<String, [bool; 4]>> = BTreeMap::new();
    for w in &l.wires {
        for (p, _, prev) in coverage(w) {
            let Some(q) = prev else { continue };
            if q == p {
                continue;
            }
            let (dx, dy) = (p.x - q.x, p.y - q.y);
            // q -> p: q leaves toward p, p leaves toward q
            let side = |dx: i32, dy: i32| match (dx, dy) {
                (-1, 0) => 0,
                (1, 0) => 1,
                (0, -1) => 2,
                _ => 3,
            };
            out.entry(q).or_default().entry(w.net.clone()).or_default()[side(dx, dy)] = true;
            out.entry(p).or_default().entry(w.net.clone()).or_default()[side(-dx, -dy)] = true;
        }
    }
    out
}

/// Exactly two nets, one running straight east-west and the other straight
/// north-south.
fn is_crossing(nets: &BTreeMap<String, [bool; 4]>) -> bool {
    if nets.len() != 2 {
        return false;
    }
    let v: Vec<&[bool; 4]> = nets.values().collect();
    let h = |s: &[bool; 4]| s[0] && s[1] && !s[2] && !s[3];
    let vt = |s: &[bool; 4]| !s[0] && !s[1] && s[2] && s[3];
    (h(v[0]) && vt(v[1])) || (vt(v[0]) && h(v[1]))
}

/// Brute-force reference: flood fill over (point, net) cells.
pub fn oracle(l: &SchematicLayout, c: &Circuit) -> OracleVerdict {
    let at = sides(l);

    let mut terms: BTreeMap<String, Vec<Option<Point>>> = BTreeMap::new();
    let anchors: Vec<(String, TerminalRole, Point)> = terminal_positions(l)
        .map(|v| v.into_iter().map(|a| (a.component, a.role, a.point)).collect())
        .unwrap_or_default();
    let find = |dev: &str, role: TerminalRole| {
        anchors
            .iter()
            .find(|(d, r, _)| d == dev && *r == role)
            .map(|(_, _, p)| *p)
    };
    let mut owners: BTreeMap<Point, BTreeSet<String>> = BTreeMap::new();
    for net in &c.nets {
        let list = terms.entry(net.name.clone()).or_default();
        for (dev, role) in &net.terminals {
            list.push(find(dev, *role));
        }
        for (d, r, p) in &anchors {
            if *r == TerminalRole::Pin && port_net(d) == Some(net.name.as_str()) && c.device(d).is_none() {
                list.push(Some(*p));
            }
        }
        for p in list.iter().flatten() {
            owners.entry(*p).or_default().insert(net.name.clone());
        }
    }

    let mut shorts = BTreeSet::new();
    let mut fused: BTreeSet<Point> = BTreeSet::new();
    for (p, nets) in &at {
        let own = owners.get(p);
        let mut everyone: BTreeSet<&String> = nets.keys().collect();
        if let Some(o) = own {
            everyone.extend(o.iter());
        }
        let bad = (nets.len() > 1 && !is_crossing(nets)) || own.is_some();
        if bad {
            fused.insert(*p);
            let names: Vec<&String> = everyone.into_iter().collect();
            for i in 0..names.len() {
                for j in i + 1..names.len() {
                    shorts.insert((names[i].clone(), names[j].clone(), *p));
                }
            }
        }
    }

    // adjacency between (point, net) cells
    let mut adj: BTreeMap<(Point, String), Vec<(Point, String)>> = BTreeMap::new();
    for w in &l.wires {
        for (p, _, prev) in coverage(w) {
            let Some(q) = prev else { continue };
            adj.entry((p, w.net.clone())).or_default().push((q, w.net.clone()));
            adj.entry((q, w.net.clone())).or_default().push((p, w.net.clone()));
        }
    }
    for p in &fused {
        let nets: Vec<&String> = at[p].keys().collect();
        for a in &nets {
            for b in &nets {
                if a != b {
                    adj.entry((*p, (*a).clone())).or_default().push((*p, (*b).clone()));
                }
            }
        }
    }

    let mut failing = BTreeSet::new();
    for (net, list) in &terms {
        if list.len() < 2 {
            continue;
        }
        let Some(start) = list[0] else {
            failing.insert(net.clone());
            continue;
        };
        let mut seen: BTreeSet<(Point, String)> = BTreeSet::new();
        let mut queue: VecDeque<(Point, String)> = VecDeque::new();
        for n in at
            .get(&start)
            .map(|m| m.keys().cloned().collect::<Vec<_>>())
            .unwrap_or_default()
        {
            queue.push_back((start, n));
        }
        while let Some(node) = queue.pop_front() {
            if !seen.insert(node.clone()) {
                continue;
            }
            for next in adj.get(&node).into_iter().flatten() {
                if !seen.contains(next) {
                    queue.push_back(next.clone());
                }
            }
        }
        let reached: BTreeSet<Point> = seen.iter().map(|(p, _)| *p).collect();
        let ok = list[1..]
            .iter()
            .all(|p| matches!(p, Some(p) if *p == start || reached.contains(p)));
        if !ok {
            failing.insert(net.clone());
        }
    }

    let correct = failing.is_empty() && shorts.is_empty() && validate_layout(l, c).is_empty();
    OracleVerdict {
        failing_nets: failing,
        shorts,
        correct,
    }
}

/// The report's verdict in the oracle's terms.
pub fn verdict_of(r: &EvalReport) -> OracleVerdict {
    OracleVerdict {
        failing_nets: r.connectivity_failures.iter().map(|f| f.net.clone()).collect(),
        shorts: r
            .short_circuits
            .iter()
            .map(|s| (s.nets.0.clone(), s.nets.1.clone(), s.cell))
            .collect(),
        correct: r.correct,
    }
}

/// Length of a shortest 4-connected path on an empty `w`x`h` grid
/// (coordinates `0..=w`, `0..=h`), by breadth-first search.
pub fn bfs_distance(w: i32, h: i32, from: Point, to: Point, blocked: &BTreeSet<Point>) -> Option<u32> {
    let mut dist: BTreeMap<Point, u32> = BTreeMap::new();
    let mut q = VecDeque::from([from]);
    dist.insert(from, 0);
    while let Some(p) = q.pop_front() {
        if p == to {
            return dist.get(&p).copied();
        }
        let d = dist[&p];
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = Point::new(p.x + dx, p.y + dy);
            if n.x < 0 || n.y < 0 || n.x > w || n.y > h || blocked.contains(&n) || dist.contains_key(&n) {
                continue;
            }
            dist.insert(n, d + 1);
            q.push_back(n);
        }
    }
    None
}

/// Unit edges used by more than one net.
pub fn shared_edges(l: &SchematicLayout) -> Vec<(Point, Point)> {
    let mut owners: BTreeMap<(Point, Point), BTreeSet<&str>> = BTreeMap::new();
    for w in &l.wires {
        for (p, _, prev) in coverage(w) {
            let Some(q) = prev else { continue };
            let e = if p < q { (p, q) } else { (q, p) };
            owners.entry(e).or_default().insert(w.net.as_str());
        }
    }
    owners
        .into_iter()
        .filter(|(_, n)| n.len() > 1)
        .map(|(e, _)| e)
        .collect()
}
