//! Net-by-net rectilinear wiring of a placed layout.
//!
//! Nets are connected in priority order (supplies, then by the most important
//! terminal role on the net), each by a bend-penalised shortest-path search on
//! the integer grid. A final pass strips any geometry two nets would share.

mod conflicts;
mod router;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::netlist::{Circuit, NetClass, TerminalRole};
use crate::placement::{port_id, Point, SchematicLayout, WirePolyline};
use crate::render::{terminal_positions, RenderError};

pub use conflicts::{chain_edges, remove_conflicts, ConflictOutcome};
pub use router::{route_net, Dir, RoutingGrid};

/// Rank of a net with no device terminal of a ranked role.
pub const OTHER_RANK: u8 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WiringError {
    #[error("net {net} could not be fully routed")]
    Unroutable { net: String, partial: Vec<WirePolyline> },
    #[error(transparent)]
    Symbol(#[from] RenderError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TerminalPoint {
    pub device: String,
    pub role: TerminalRole,
    pub net: String,
    pub point: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectionTask {
    pub net: String,
    pub terminals: Vec<TerminalPoint>,
    pub priority_rank: u8,
}

/// Ordering of terminal roles inside a task and for ranking nets.
pub fn role_priority(role: TerminalRole) -> u8 {
    match role {
        TerminalRole::Gate => 0,
        TerminalRole::Drain => 1,
        TerminalRole::Source => 2,
        TerminalRole::Bulk => 3,
        TerminalRole::Pos => 4,
        TerminalRole::Neg => 5,
        TerminalRole::Pin => 6,
    }
}

fn role_rank(role: TerminalRole) -> u8 {
    match role {
        TerminalRole::Gate => 2,
        TerminalRole::Drain => 3,
        TerminalRole::Source => 4,
        TerminalRole::Bulk => 5,
        _ => OTHER_RANK,
    }
}

/// Rank of one net: 0 for power, 1 for ground, otherwise the best role on it.
pub fn net_rank(c: &Circuit, net: &str) -> u8 {
    match c.net_class(net) {
        Some(NetClass::Power) => 0,
        Some(NetClass::Ground) => 1,
        _ => c
            .net(net)
            .map(|n| {
                n.terminals
                    .iter()
                    .map(|(_, r)| role_rank(*r))
                    .min()
                    .unwrap_or(OTHER_RANK)
            })
            .unwrap_or(OTHER_RANK),
    }
}

/// Connection tasks for every net in routing order, terminals without
/// coordinates (points are filled in by [`connection_tasks`]).
pub fn priority_order(c: &Circuit) -> Vec<ConnectionTask> {
    let mut tasks: Vec<ConnectionTask> = c
        .nets
        .iter()
        .map(|n| {
            let mut terminals: Vec<TerminalPoint> = n
                .terminals
                .iter()
                .map(|(dev, role)| TerminalPoint {
                    device: dev.clone(),
                    role: *role,
                    net: n.name.clone(),
                    point: Point::new(0, 0),
                })
                .collect();
            terminals.sort_by(|a, b| (role_priority(a.role), &a.device).cmp(&(role_priority(b.role), &b.device)));
            ConnectionTask {
                net: n.name.clone(),
                terminals,
                priority_rank: net_rank(c, &n.name),
            }
        })
        .collect();
    tasks.sort_by(|a, b| (a.priority_rank, &a.net).cmp(&(b.priority_rank, &b.net)));
    tasks
}

/// Tasks with terminal coordinates taken from the placement. Terminals of
/// devices absent from the layout are dropped; placed port symbols add a PIN
/// terminal to their net.
pub fn connection_tasks(c: &Circuit, l: &SchematicLayout) -> Result<Vec<ConnectionTask>, RenderError> {
    let anchors: BTreeMap<(String, TerminalRole), Point> = terminal_positions(l)?
        .into_iter()
        .map(|a| ((a.component, a.role), a.point))
        .collect();
    let mut tasks = priority_order(c);
    for t in &mut tasks {
        let mut located: Vec<TerminalPoint> = t
            .terminals
            .drain(..)
            .filter_map(|mut tp| {
                anchors.get(&(tp.device.clone(), tp.role)).map(|&p| {
                    tp.point = p;
                    tp
                })
            })
            .collect();
        let pid = port_id(&t.net);
        if let Some(&p) = anchors.get(&(pid.clone(), TerminalRole::Pin)) {
            located.push(TerminalPoint {
                device: pid,
                role: TerminalRole::Pin,
                net: t.net.clone(),
                point: p,
            });
        }
        t.terminals = located;
    }
    Ok(tasks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RouteFlag {
    Unroutable,
    ConflictRemoved,
}

impl fmt::Display for RouteFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteFlag::Unroutable => "UNROUTABLE",
            RouteFlag::ConflictRemoved => "CONFLICT_REMOVED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetReport {
    pub net: String,
    pub rank: u8,
    pub length: i32,
    pub bends: usize,
    pub flags: Vec<RouteFlag>,
}

/// Per-net routing summary, in routing order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RoutingReport {
    pub nets: Vec<NetReport>,
}

impl RoutingReport {
    pub fn flagged(&self) -> impl Iterator<Item = &NetReport> {
        self.nets.iter().filter(|n| !n.flags.is_empty())
    }

    pub fn unroutable(&self) -> BTreeSet<&str> {
        self.nets
            .iter()
            .filter(|n| n.flags.contains(&RouteFlag::Unroutable))
            .map(|n| n.net.as_str())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("rank  net                length  bends  flags\n");
        for n in &self.nets {
            let flags: Vec<String> = n.flags.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                s,
                "{:<5} {:<18} {:>6} {:>6}  {}",
                n.rank,
                n.net,
                n.length,
                n.bends,
                if flags.is_empty() {
                    "-".to_string()
                } else {
                    flags.join(",")
                }
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Route every net of `c` on the placement `l`, replacing any existing wires.
pub fn wire_layout(c: &Circuit, l: &SchematicLayout) -> Result<(SchematicLayout, RoutingReport), WiringError> {
    let mut out = l.clone();
    out.wires.clear();
    if l.components.is_empty() {
        return Ok((out, RoutingReport::default()));
    }
    let tasks = connection_tasks(c, l)?;
    let mut grid = RoutingGrid::from_layout(c, l)?;
    let mut wires = Vec::new();
    let mut flags: BTreeMap<String, BTreeSet<RouteFlag>> = BTreeMap::new();
    let mut ranks: BTreeMap<String, u8> = BTreeMap::new();
    for t in &tasks {
        ranks.insert(t.net.clone(), t.priority_rank);
        match route_net(t, &mut grid) {
            Ok(ws) => wires.extend(ws),
            Err(WiringError::Unroutable { net, partial }) => {
                log::warn!("net {net} left partially routed");
                wires.extend(partial);
                flags.entry(net).or_default().insert(RouteFlag::Unroutable);
            }
            Err(e) => return Err(e),
        }
    }
    let cleaned = remove_conflicts(&wires, &ranks);
    for net in &cleaned.flagged {
        flags.entry(net.clone()).or_default().insert(RouteFlag::ConflictRemoved);
    }
    out.wires = cleaned.wires;

    let nets = tasks
        .iter()
        .map(|t| {
            let mine = out.wires.iter().filter(|w| w.net == t.net);
            let (length, bends) = mine.fold((0, 0), |(len, b), w| {
                (len + w.length(), b + w.points.len().saturating_sub(2))
            });
            NetReport {
                net: t.net.clone(),
                rank: t.priority_rank,
                length,
                bends,
                flags: flags
                    .get(&t.net)
                    .map(|f| f.iter().copied().collect())
                    .unwrap_or_default(),
            }
        })
        .collect();
    Ok((out, RoutingReport { nets }))
}
