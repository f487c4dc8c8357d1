//! Recognition of the six analog building blocks used to seed placement and
//! to pick few-shot examples.
//!
//! Rules are polarity-agnostic. Multi-device patterns are claimed greedily in
//! priority order; every MOS device left over gets a single-device match.

mod library;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netlist::{Circuit, Device, NetClass, TerminalRole};

pub use library::{example_library, load_library_from, AssetError, ExampleAsset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubstructureKind {
    SingleCascode,
    SingleCurrentSource,
    DiodeConnected,
    TwoTransistorCascode,
    DifferentialPair,
    CurrentMirror,
}

impl SubstructureKind {
    /// The six kinds in catalogue order.
    pub const ALL: [SubstructureKind; 6] = [
        SubstructureKind::SingleCascode,
        SubstructureKind::SingleCurrentSource,
        SubstructureKind::DiodeConnected,
        SubstructureKind::TwoTransistorCascode,
        SubstructureKind::DifferentialPair,
        SubstructureKind::CurrentMirror,
    ];

    /// Overlap-resolution priority, highest first.
    pub const PRIORITY: [SubstructureKind; 6] = [
        SubstructureKind::DifferentialPair,
        SubstructureKind::CurrentMirror,
        SubstructureKind::TwoTransistorCascode,
        SubstructureKind::DiodeConnected,
        SubstructureKind::SingleCurrentSource,
        SubstructureKind::SingleCascode,
    ];

    pub fn priority(self) -> usize {
        Self::PRIORITY.iter().position(|k| *k == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SubstructureKind::SingleCascode => "SINGLE_CASCODE",
            SubstructureKind::SingleCurrentSource => "SINGLE_CURRENT_SOURCE",
            SubstructureKind::DiodeConnected => "DIODE_CONNECTED",
            SubstructureKind::TwoTransistorCascode => "TWO_TRANSISTOR_CASCODE",
            SubstructureKind::DifferentialPair => "DIFFERENTIAL_PAIR",
            SubstructureKind::CurrentMirror => "CURRENT_MIRROR",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            SubstructureKind::SingleCascode => "Single Cascode",
            SubstructureKind::SingleCurrentSource => "Single Current Source",
            SubstructureKind::DiodeConnected => "Diode Connected",
            SubstructureKind::TwoTransistorCascode => "Two-Transistor Cascode",
            SubstructureKind::DifferentialPair => "Differential Pair",
            SubstructureKind::CurrentMirror => "Current Mirror",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }

    pub fn is_pair(self) -> bool {
        matches!(
            self,
            SubstructureKind::DifferentialPair | SubstructureKind::CurrentMirror
        )
    }

    pub fn is_multi_device(self) -> bool {
        matches!(
            self,
            SubstructureKind::DifferentialPair
                | SubstructureKind::CurrentMirror
                | SubstructureKind::TwoTransistorCascode
        )
    }
}

impl fmt::Display for SubstructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MemberRole {
    Left,
    Right,
    Reference,
    Output,
    /// Lower device of a cascode stack: its drain feeds the cascode's source.
    Input,
    Cascode,
    Device,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstructureMatch {
    pub kind: SubstructureKind,
    pub members: Vec<(String, MemberRole)>,
    pub shared_nets: Vec<String>,
}

impl SubstructureMatch {
    pub fn member(&self, role: MemberRole) -> Option<&str> {
        self.members.iter().find(|(_, r)| *r == role).map(|(d, _)| d.as_str())
    }

    pub fn device_names(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|(d, _)| d.as_str())
    }

    /// The two members of a pair structure as (left-or-reference, right-or-output).
    pub fn pair(&self) -> Option<(&str, &str)> {
        match self.kind {
            SubstructureKind::DifferentialPair => {
                Some((self.member(MemberRole::Left)?, self.member(MemberRole::Right)?))
            }
            SubstructureKind::CurrentMirror => {
                Some((self.member(MemberRole::Reference)?, self.member(MemberRole::Output)?))
            }
            _ => None,
        }
    }
}

fn nets(d: &Device) -> (&str, &str, &str) {
    (
        d.net_of(TerminalRole::Drain).unwrap_or(""),
        d.net_of(TerminalRole::Gate).unwrap_or(""),
        d.net_of(TerminalRole::Source).unwrap_or(""),
    )
}

fn is_diode(d: &Device) -> bool {
    let (dr, g, _) = nets(d);
    dr == g
}

/// Gate net that carries nothing but gate terminals.
fn gate_only_net(c: &Circuit, net: &str) -> bool {
    c.net(net)
        .is_some_and(|n| n.terminals.iter().all(|(_, r)| *r == TerminalRole::Gate))
}

fn supply(c: &Circuit, net: &str) -> bool {
    matches!(c.net_class(net), Some(NetClass::Power) | Some(NetClass::Ground))
}

/// Re-check a match against its defining rule, looking only at the devices
/// it names.
pub fn rule_holds(m: &SubstructureMatch, c: &Circuit) -> bool {
    let mut names = BTreeSet::new();
    let mut devs = Vec::new();
    for (name, _) in &m.members {
        if !names.insert(name) {
            return false;
        }
        match c.device(name) {
            Some(d) if d.kind.is_mos() => devs.push(d),
            _ => return false,
        }
    }
    let by_role = |r: MemberRole| m.member(r).and_then(|n| c.device(n));
    match m.kind {
        SubstructureKind::DiodeConnected => devs.len() == 1 && is_diode(devs[0]),
        SubstructureKind::SingleCascode => devs.len() == 1,
        SubstructureKind::SingleCurrentSource => {
            if devs.len() != 1 {
                return false;
            }
            let (dr, g, s) = nets(devs[0]);
            supply(c, s) && dr != g && gate_only_net(c, g)
        }
        SubstructureKind::DifferentialPair => {
            let (Some(a), Some(b)) = (by_role(MemberRole::Left), by_role(MemberRole::Right)) else {
                return false;
            };
            let (ad, ag, as_) = nets(a);
            let (bd, bg, bs) = nets(b);
            devs.len() == 2
                && a.kind == b.kind
                && as_ == bs
                && !supply(c, as_)
                && ag != bg
                && ad != bd
                && !is_diode(a)
                && !is_diode(b)
        }
        SubstructureKind::CurrentMirror => {
            let (Some(r), Some(o)) = (by_role(MemberRole::Reference), by_role(MemberRole::Output)) else {
                return false;
            };
            devs.len() == 2 && r.kind == o.kind && r.gate() == o.gate() && is_diode(r) && !is_diode(o)
        }
        SubstructureKind::TwoTransistorCascode => {
            let (Some(lo), Some(hi)) = (by_role(MemberRole::Input), by_role(MemberRole::Cascode)) else {
                return false;
            };
            devs.len() == 2
                && lo.kind == hi.kind
                && lo.drain() == hi.source()
                && !supply(c, lo.drain().unwrap_or(""))
                && lo.gate() != hi.gate()
        }
    }
}

fn index_by(c: &Circuit, role: TerminalRole) -> BTreeMap<&str, Vec<&Device>> {
    let mut idx: BTreeMap<&str, Vec<&Device>> = BTreeMap::new();
    for d in c.mos_devices() {
        if let Some(n) = d.net_of(role) {
            idx.entry(n).or_default().push(d);
        }
    }
    for v in idx.values_mut() {
        v.sort_by(|a, b| a.name.cmp(&b.name));
    }
    idx
}

/// Recognise building blocks. Output is ordered by kind priority, then by
/// member names; every MOS device appears in at least one match.
pub fn detect(c: &Circuit) -> Vec<SubstructureMatch> {
    let by_source = index_by(c, TerminalRole::Source);
    let by_gate = index_by(c, TerminalRole::Gate);

    let mut dp = Vec::new();
    for (&net, devs) in &by_source {
        if supply(c, net) {
            continue;
        }
        for (i, a) in devs.iter().enumerate() {
            for b in &devs[i + 1..] {
                let (ad, ag, _) = nets(a);
                let (bd, bg, _) = nets(b);
                if a.kind == b.kind && ag != bg && ad != bd && !is_diode(a) && !is_diode(b) {
                    dp.push(SubstructureMatch {
                        kind: SubstructureKind::DifferentialPair,
                        members: vec![(a.name.clone(), MemberRole::Left), (b.name.clone(), MemberRole::Right)],
                        shared_nets: vec![net.to_string()],
                    });
                }
            }
        }
    }

    let mut cm = Vec::new();
    for (&net, devs) in &by_gate {
        for r in devs.iter().filter(|d| is_diode(d)) {
            for o in devs.iter().filter(|d| !is_diode(d) && d.kind == r.kind) {
                cm.push(SubstructureMatch {
                    kind: SubstructureKind::CurrentMirror,
                    members: vec![
                        (r.name.clone(), MemberRole::Reference),
                        (o.name.clone(), MemberRole::Output),
                    ],
                    shared_nets: vec![net.to_string()],
                });
            }
        }
    }

    let mut tc = Vec::new();
    for lo in c.mos_devices() {
        let (ld, lg, _) = nets(lo);
        if supply(c, ld) {
            continue;
        }
        for hi in by_source.get(ld).into_iter().flatten() {
            if hi.name != lo.name && hi.kind == lo.kind && hi.gate() != Some(lg) {
                tc.push(SubstructureMatch {
                    kind: SubstructureKind::TwoTransistorCascode,
                    members: vec![
                        (lo.name.clone(), MemberRole::Input),
                        (hi.name.clone(), MemberRole::Cascode),
                    ],
                    shared_nets: vec![ld.to_string()],
                });
            }
        }
    }

    let mut consumed: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for mut group in [dp, cm, tc] {
        group.sort_by_key(sort_key);
        for m in group {
            if m.device_names().any(|d| consumed.contains(d)) {
                continue;
            }
            consumed.extend(m.device_names().map(str::to_string));
            out.push(m);
        }
    }

    let mut singles: Vec<&Device> = c.mos_devices().filter(|d| !consumed.contains(&d.name)).collect();
    singles.sort_by(|a, b| a.name.cmp(&b.name));
    for d in singles {
        let (dr, g, s) = nets(d);
        let (kind, shared) = if dr == g {
            (SubstructureKind::DiodeConnected, vec![g.to_string()])
        } else if supply(c, s) && gate_only_net(c, g) {
            (
                SubstructureKind::SingleCurrentSource,
                vec![s.to_string(), g.to_string()],
            )
        } else {
            (SubstructureKind::SingleCascode, vec![])
        };
        out.push(SubstructureMatch {
            kind,
            members: vec![(d.name.clone(), MemberRole::Device)],
            shared_nets: shared,
        });
    }

    out.sort_by_key(|m| (m.kind.priority(), sort_key(m)));
    out
}

fn sort_key(m: &SubstructureMatch) -> Vec<String> {
    let mut names: Vec<String> = m.device_names().map(str::to_string).collect();
    names.sort();
    names
}
