use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::netlist::Circuit;
use crate::render::symbols::{builtin, orient_i};

use super::{port_net, ComponentKind, GridBox, Point, SchematicLayout, WirePolyline};

/// A structural problem found in a layout. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Violation {
    Overlap {
        a: String,
        b: String,
    },
    OutOfBounds {
        id: String,
    },
    DuplicateId {
        id: String,
    },
    UnknownDevice {
        id: String,
    },
    KindMismatch {
        id: String,
        expected: String,
        found: String,
    },
    MissingDevice {
        id: String,
    },
    WireTooShort {
        wire: usize,
    },
    NonRectilinear {
        wire: usize,
        segment: usize,
    },
    WireOutOfBounds {
        wire: usize,
    },
    UnknownNet {
        wire: usize,
        net: String,
    },
    WireThroughSymbol {
        wire: usize,
        net: String,
        component: String,
        x: i32,
        y: i32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { a, b } => write!(f, "symbols {a} and {b} overlap"),
            Violation::OutOfBounds { id } => write!(f, "{id} lies outside the grid"),
            Violation::DuplicateId { id } => write!(f, "component id {id} appears more than once"),
            Violation::UnknownDevice { id } => write!(f, "{id} is not a device or port of the circuit"),
            Violation::KindMismatch { id, expected, found } => {
                write!(f, "{id} is a {expected} but placed as {found}")
            }
            Violation::MissingDevice { id } => write!(f, "device {id} is not placed"),
            Violation::WireTooShort { wire } => write!(f, "wire {wire} has fewer than two points"),
            Violation::NonRectilinear { wire, segment } => {
                write!(f, "wire {wire} segment {segment} is diagonal or zero-length")
            }
            Violation::WireOutOfBounds { wire } => write!(f, "wire {wire} leaves the grid"),
            Violation::UnknownNet { wire, net } => write!(f, "wire {wire} names unknown net {net}"),
            Violation::WireThroughSymbol {
                wire,
                net,
                component,
                x,
                y,
            } => write!(f, "wire {wire} ({net}) enters symbol {component} at ({x}, {y})"),
        }
    }
}

/// Closed-box intersection test.
pub fn boxes_overlap(a: &GridBox, b: &GridBox) -> bool {
    a.intersects(b)
}

/// Checks that need no circuit: overlaps, bounds, ids, wire shape, and wires
/// entering a symbol anywhere other than one of its anchors.
pub fn validate_structure(l: &SchematicLayout) -> Vec<Violation> {
    check(l, None)
}

/// All structural checks plus agreement with the circuit: every device
/// placed exactly once with the right kind, ports only for existing nets,
/// wires only on existing nets and entering symbols only at anchors of
/// their own net.
pub fn validate_layout(l: &SchematicLayout, c: &Circuit) -> Vec<Violation> {
    check(l, Some(c))
}

fn check(l: &SchematicLayout, c: Option<&Circuit>) -> Vec<Violation> {
    let mut out = Vec::new();
    let table = builtin();

    let mut seen = BTreeSet::new();
    for comp in &l.components {
        if !seen.insert(comp.id.as_str()) {
            out.push(Violation::DuplicateId { id: comp.id.clone() });
        }
    }

    let boxes: Vec<GridBox> = l.components.iter().map(|c| c.bbox()).collect();
    for (comp, b) in l.components.iter().zip(&boxes) {
        if b.x0 < 0 || b.y0 < 0 || b.x1 > l.grid.width || b.y1 > l.grid.height {
            out.push(Violation::OutOfBounds { id: comp.id.clone() });
        }
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes_overlap(&boxes[i], &boxes[j]) {
                out.push(Violation::Overlap {
                    a: l.components[i].id.clone(),
                    b: l.components[j].id.clone(),
                });
            }
        }
    }

    if let Some(c) = c {
        for comp in &l.components {
            match comp.kind {
                ComponentKind::Port => {
                    let known = port_net(&comp.id).is_some_and(|n| c.net(n).is_some());
                    if !known {
                        out.push(Violation::UnknownDevice { id: comp.id.clone() });
                    }
                }
                kind => match c.device(&comp.id) {
                    None => out.push(Violation::UnknownDevice { id: comp.id.clone() }),
                    Some(d) if ComponentKind::from(d.kind) != kind => out.push(Violation::KindMismatch {
                        id: comp.id.clone(),
                        expected: d.kind.to_string(),
                        found: kind.to_string(),
                    }),
                    Some(_) => {}
                },
            }
        }
        for d in &c.devices {
            if l.component(&d.name).is_none() {
                out.push(Violation::MissingDevice { id: d.name.clone() });
            }
        }
    }

    // anchor point -> nets allowed to touch it (None = unknown without a circuit)
    let mut anchor_nets: BTreeMap<(usize, Point), Option<String>> = BTreeMap::new();
    for (ci, comp) in l.components.iter().enumerate() {
        let Some(sym) = table.get(comp.kind) else { continue };
        for (&role, &(u, v)) in &sym.anchors {
            let (dx, dy) = orient_i(u, v, sym.width, sym.height, comp.orientation);
            let net = if comp.kind == ComponentKind::Port {
                port_net(&comp.id).map(str::to_string)
            } else {
                c.and_then(|c| c.device(&comp.id))
                    .and_then(|d| d.net_of(role))
                    .map(str::to_string)
            };
            anchor_nets.insert((ci, Point::new(comp.x + dx, comp.y + dy)), net);
        }
    }

    for (wi, w) in l.wires.iter().enumerate() {
        if w.points.len() < 2 {
            out.push(Violation::WireTooShort { wire: wi });
        }
        for (si, seg) in w.points.windows(2).enumerate() {
            if (seg[0].x == seg[1].x) == (seg[0].y == seg[1].y) {
                out.push(Violation::NonRectilinear { wire: wi, segment: si });
            }
        }
        if w.points.iter().any(|p| !l.in_bounds(*p)) {
            out.push(Violation::WireOutOfBounds { wire: wi });
        }
        if let Some(c) = c {
            if c.net(&w.net).is_none() {
                out.push(Violation::UnknownNet {
                    wire: wi,
                    net: w.net.clone(),
                });
            }
        }

        // cells in walk order, so the reported cell follows the wire
        let mut cells: Vec<Point> = w.points.first().copied().into_iter().collect();
        for seg in w.points.windows(2) {
            let single = WirePolyline::new(w.net.clone(), seg.to_vec());
            cells.extend(single.unit_edges().into_iter().map(|(_, b)| b));
            cells.push(seg[1]);
        }
        let mut reported = BTreeSet::new();
        for p in cells {
            for (ci, b) in boxes.iter().enumerate() {
                if !b.contains(p) {
                    continue;
                }
                let allowed = match anchor_nets.get(&(ci, p)) {
                    Some(Some(net)) => *net == w.net,
                    Some(None) => c.is_none(),
                    None => false,
                };
                if !allowed && reported.insert(ci) {
                    out.push(Violation::WireThroughSymbol {
                        wire: wi,
                        net: w.net.clone(),
                        component: l.components[ci].id.clone(),
                        x: p.x,
                        y: p.y,
                    });
                }
            }
        }
    }
    out
}
