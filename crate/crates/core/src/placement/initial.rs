//! Deterministic seed placement.
//!
//! Rows follow supply proximity: devices conducting to a power net go on top,
//! devices conducting to ground at the bottom, everything else in between by
//! its distance to either rail. Pair structures share a row and are reflected
//! about the vertical centerline; lone devices are centered.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::netlist::{Circuit, Device, NetClass, TerminalRole};
use crate::substructure::{SubstructureKind, SubstructureMatch};

use super::{port_id, ComponentKind, Grid, Orientation, PlacedComponent, Rotation, SchematicLayout, MIN_CLEARANCE};

const TOP_MARGIN: i32 = 4;
const BOTTOM_MARGIN: i32 = 4;
const ROW_GAP: i32 = 6;
const MIN_ROW_GAP: i32 = 4;
/// Half the empty span between the two members of the innermost pair.
const PAIR_HALF_GAP: i32 = 4;
const UNIT_GAP: i32 = 4;
/// Keeps devices clear of the port columns at both margins.
const SIDE_MARGIN: i32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlacementError {
    #[error("placement does not fit the {width}x{height} grid: {reason}")]
    Overflow { width: i32, height: i32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlaceOptions {
    pub grid: Grid,
}

/// x coordinate of the vertical symmetry axis.
pub fn centerline_x(grid: &Grid) -> i32 {
    grid.width / 2
}

pub fn initial_place(c: &Circuit, matches: &[SubstructureMatch]) -> Result<SchematicLayout, PlacementError> {
    initial_place_with(c, matches, PlaceOptions::default())
}

fn conduction_nets(d: &Device) -> impl Iterator<Item = &str> {
    d.terminals
        .iter()
        .filter(|t| !matches!(t.role, TerminalRole::Gate | TerminalRole::Bulk))
        .map(|t| t.net.as_str())
}

fn distances(c: &Circuit, rail: NetClass) -> BTreeMap<&str, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for d in &c.devices {
        if conduction_nets(d).any(|n| c.net_class(n) == Some(rail)) {
            dist.insert(d.name.as_str(), 0);
            queue.push_back(d);
        }
    }
    while let Some(d) = queue.pop_front() {
        let here = dist[d.name.as_str()];
        for net in conduction_nets(d).filter(|n| !c.is_supply(n)) {
            for e in &c.devices {
                if !dist.contains_key(e.name.as_str()) && conduction_nets(e).any(|m| m == net) {
                    dist.insert(e.name.as_str(), here + 1);
                    queue.push_back(e);
                }
            }
        }
    }
    dist
}

fn row_key(name: &str, dp: &BTreeMap<&str, u32>, dg: &BTreeMap<&str, u32>) -> i64 {
    const FAR: i64 = 64;
    let p = dp.get(name).map(|&v| v as i64);
    let g = dg.get(name).map(|&v| v as i64);
    match (p, g) {
        (Some(0), Some(0)) => 0,
        (Some(0), _) => -10_000,
        (_, Some(0)) => 10_000,
        (p, g) => p.unwrap_or(FAR) - g.unwrap_or(FAR),
    }
}

#[derive(Debug, Clone)]
enum Unit {
    Pair { left: String, right: String },
    Single(String),
}

fn size_of(kind: ComponentKind) -> (i32, i32) {
    let sym = crate::render::symbols::builtin()
        .get(kind)
        .expect("built-in symbol table covers every component kind");
    sym.oriented_size(Orientation::IDENTITY)
}

pub fn initial_place_with(
    c: &Circuit,
    matches: &[SubstructureMatch],
    opts: PlaceOptions,
) -> Result<SchematicLayout, PlacementError> {
    let grid = opts.grid;
    let overflow = |reason: String| PlacementError::Overflow {
        width: grid.width,
        height: grid.height,
        reason,
    };
    let mut layout = SchematicLayout::empty(grid);
    if c.devices.is_empty() {
        return Ok(layout);
    }

    let dp = distances(c, NetClass::Power);
    let dg = distances(c, NetClass::Ground);
    let mut keys: BTreeMap<&str, i64> = c
        .devices
        .iter()
        .map(|d| (d.name.as_str(), row_key(&d.name, &dp, &dg)))
        .collect();

    // pair structures from the matcher, in priority then name order
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut paired: BTreeSet<String> = BTreeSet::new();
    let mut pair_matches: Vec<&SubstructureMatch> = matches.iter().filter(|m| m.kind.is_pair()).collect();
    pair_matches.sort_by_key(|m| (m.kind.priority(), m.members.clone()));
    for m in pair_matches {
        let Some((a, b)) = m.pair() else { continue };
        if c.device(a).is_none() || c.device(b).is_none() || paired.contains(a) || paired.contains(b) {
            continue;
        }
        let k = keys[a].min(keys[b]);
        keys.insert(c.device(a).unwrap().name.as_str(), k);
        keys.insert(c.device(b).unwrap().name.as_str(), k);
        paired.insert(a.to_string());
        paired.insert(b.to_string());
        pairs.push((a.to_string(), b.to_string()));
    }
    let _ = SubstructureKind::DifferentialPair;

    // rows: distinct keys, compressed if the grid is too short
    let distinct: Vec<i64> = keys.values().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let max_rows = ((grid.height - TOP_MARGIN - BOTTOM_MARGIN + MIN_ROW_GAP) / (6 + MIN_ROW_GAP)).max(1) as usize;
    let n_rows = distinct.len().min(max_rows);
    let row_of_key: BTreeMap<i64, usize> = distinct
        .iter()
        .enumerate()
        .map(|(rank, &k)| (k, rank * n_rows / distinct.len()))
        .collect();
    let mut rows: Vec<Vec<&Device>> = vec![Vec::new(); n_rows];
    let mut devices: Vec<&Device> = c.devices.iter().collect();
    devices.sort_by(|a, b| a.name.cmp(&b.name));
    for d in devices {
        rows[row_of_key[&keys[d.name.as_str()]]].push(d);
    }

    // twins: unpaired same-kind MOS devices sharing a gate net within a row
    for row in &rows {
        let mut groups: BTreeMap<(ComponentKind, &str), Vec<&str>> = BTreeMap::new();
        for d in row.iter().filter(|d| d.kind.is_mos() && !paired.contains(&d.name)) {
            groups
                .entry((d.kind.into(), d.gate().unwrap_or("")))
                .or_default()
                .push(&d.name);
        }
        for names in groups.values() {
            for chunk in names.chunks_exact(2) {
                paired.insert(chunk[0].to_string());
                paired.insert(chunk[1].to_string());
                pairs.push((chunk[0].to_string(), chunk[1].to_string()));
            }
        }
    }

    let pairs = orient_pairs(c, pairs);

    // vertical layout
    let heights: Vec<i32> = rows
        .iter()
        .map(|r| r.iter().map(|d| size_of(d.kind.into()).1).max().unwrap_or(0))
        .collect();
    let body: i32 = heights.iter().sum();
    let gaps = n_rows as i32 - 1;
    let avail = grid.height - TOP_MARGIN - BOTTOM_MARGIN;
    let row_gap = (MIN_ROW_GAP..=ROW_GAP)
        .rev()
        .find(|g| body + gaps * g <= avail)
        .ok_or_else(|| overflow(format!("{n_rows} rows need {} units", body + gaps * MIN_ROW_GAP)))?;

    let axis = centerline_x(&grid);
    let mut y = TOP_MARGIN;
    for (ri, row) in rows.iter().enumerate() {
        let in_row: BTreeSet<&str> = row.iter().map(|d| d.name.as_str()).collect();
        let mut units: Vec<Unit> = pairs
            .iter()
            .filter(|(a, _)| in_row.contains(a.as_str()))
            .map(|(a, b)| Unit::Pair {
                left: a.clone(),
                right: b.clone(),
            })
            .collect();
        units.extend(
            row.iter()
                .filter(|d| !paired.contains(&d.name))
                .map(|d| Unit::Single(d.name.clone())),
        );

        let singles: Vec<&String> = units
            .iter()
            .filter_map(|u| match u {
                Unit::Single(n) => Some(n),
                _ => None,
            })
            .collect();
        let widths: Vec<i32> = singles
            .iter()
            .map(|n| size_of(c.device(n).unwrap().kind.into()).0)
            .collect();
        let block = if singles.is_empty() {
            0
        } else {
            widths.iter().sum::<i32>() + UNIT_GAP * (singles.len() as i32 - 1)
        };
        let mut x = axis - block / 2;
        for (name, w) in singles.iter().zip(&widths) {
            let kind: ComponentKind = c.device(name).unwrap().kind.into();
            layout.components.push(PlacedComponent::new(name.as_str(), kind, x, y));
            x += w + UNIT_GAP;
        }

        let mut half = if singles.is_empty() {
            PAIR_HALF_GAP
        } else {
            (block + 1) / 2 + UNIT_GAP
        };
        for u in &units {
            let Unit::Pair { left, right } = u else { continue };
            let kind: ComponentKind = c.device(left).unwrap().kind.into();
            let w = size_of(kind).0;
            layout
                .components
                .push(PlacedComponent::new(left.as_str(), kind, axis - half - w, y));
            layout.components.push(
                PlacedComponent::new(right.as_str(), c.device(right).unwrap().kind.into(), axis + half, y)
                    .with_orientation(Orientation::new(Rotation::R0, true)),
            );
            half += w + UNIT_GAP;
        }
        y += heights[ri] + row_gap;
    }

    for comp in &layout.components {
        let b = comp.bbox();
        if b.x0 < SIDE_MARGIN || b.x1 > grid.width - SIDE_MARGIN || b.y1 > grid.height {
            return Err(overflow(format!("{} does not fit its row", comp.id)));
        }
    }

    place_ports(c, &mut layout).map_err(overflow)?;
    Ok(layout)
}

/// Decide which member of each pair goes left, keeping connected devices on
/// the same side as the pairs already oriented.
fn orient_pairs(c: &Circuit, pairs: Vec<(String, String)>) -> Vec<(String, String)> {
    let signal_nets = |name: &str| -> BTreeSet<String> {
        c.device(name)
            .map(|d| {
                d.terminals
                    .iter()
                    .filter(|t| !c.is_supply(&t.net))
                    .map(|t| t.net.clone())
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut left_nets: BTreeSet<String> = BTreeSet::new();
    let mut right_nets: BTreeSet<String> = BTreeSet::new();
    let mut done: Vec<Option<(String, String)>> = vec![None; pairs.len()];
    for _ in 0..pairs.len() {
        let mut pick = None;
        for (i, (a, b)) in pairs.iter().enumerate() {
            if done[i].is_some() {
                continue;
            }
            let (na, nb) = (signal_nets(a), signal_nets(b));
            let keep = na.intersection(&left_nets).count() + nb.intersection(&right_nets).count();
            let swap = na.intersection(&right_nets).count() + nb.intersection(&left_nets).count();
            if keep + swap > 0 {
                pick = Some((i, swap > keep));
                break;
            }
            if pick.is_none() {
                pick = Some((i, false));
            }
        }
        let Some((i, swap)) = pick else { break };
        let (a, b) = pairs[i].clone();
        let (l, r) = if swap { (b, a) } else { (a, b) };
        left_nets.extend(signal_nets(&l));
        right_nets.extend(signal_nets(&r));
        done[i] = Some((l, r));
    }
    done.into_iter().flatten().collect()
}

fn place_ports(c: &Circuit, layout: &mut SchematicLayout) -> Result<(), String> {
    let grid = layout.grid;
    let anchors = crate::render::symbols::terminal_positions(layout).map_err(|e| e.to_string())?;
    let (pw, ph) = size_of(ComponentKind::Port);
    for net in &c.io_ports {
        if c.net_class(net) != Some(NetClass::Io) {
            continue;
        }
        let Some(n) = c.net(net) else { continue };
        let input = n.terminals.iter().all(|(_, r)| *r == TerminalRole::Gate);
        let target = n
            .terminals
            .iter()
            .find_map(|(dev, role)| anchors.iter().find(|a| a.component == *dev && a.role == *role))
            .map(|a| a.point.y)
            .unwrap_or(grid.height / 2);
        let (x, orientation) = if input {
            (1, Orientation::IDENTITY)
        } else {
            (grid.width - 1 - pw, Orientation::new(Rotation::R0, true))
        };
        let mut placed = false;
        for step in 0..grid.height {
            for dy in [step, -step] {
                let y = target - ph / 2 + dy;
                if y < 0 || y + ph > grid.height {
                    continue;
                }
                let cand = PlacedComponent::new(port_id(net), ComponentKind::Port, x, y).with_orientation(orientation);
                let b = cand.bbox();
                let clear = layout.components.iter().all(|o| {
                    let ob = o.bbox();
                    b.x1 + MIN_CLEARANCE <= ob.x0
                        || ob.x1 + MIN_CLEARANCE <= b.x0
                        || b.y1 + MIN_CLEARANCE <= ob.y0
                        || ob.y1 + MIN_CLEARANCE <= b.y0
                });
                if clear {
                    layout.components.push(cand);
                    placed = true;
                    break;
                }
            }
            if placed {
                break;
            }
        }
        if !placed {
            return Err(format!("no room for port {net}"));
        }
    }
    Ok(())
}
