//! SPICE-subset netlist parser and connectivity model.
//!
//! Supported input:
//!
//! ```text
//! * full-line comment
//! M<name> drain gate source bulk <model> [KEY=value ...]   ; model starting with P/N
//! R<name> n+ n- [value] [KEY=value ...]
//! C<name> n+ n- [value] [KEY=value ...]
//! V<name> n+ n- [DC 1.8 ...]
//! I<name> n+ n- [DC 10u ...]
//! + continuation of the previous card
//! .ports in out        ; external pins, in declaration order
//! .end                 ; optional
//! ```
//!
//! Identifiers are case-insensitive and normalized to upper case. Parameter
//! values are kept verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Net names recognised as positive supply.
pub const POWER_ALIASES: &[&str] = &["VDD", "VCC", "VDD!", "AVDD"];
/// Net names recognised as ground.
pub const GROUND_ALIASES: &[&str] = &["GND", "VSS", "0", "GND!", "AGND"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DeviceKind {
    Nmos,
    Pmos,
    Resistor,
    Capacitor,
    Vsource,
    Isource,
}

impl DeviceKind {
    pub fn is_mos(self) -> bool {
        matches!(self, DeviceKind::Nmos | DeviceKind::Pmos)
    }

    /// Terminal roles in card order.
    pub fn roles(self) -> &'static [TerminalRole] {
        use TerminalRole::*;
        if self.is_mos() {
            &[Drain, Gate, Source, Bulk]
        } else {
            &[Pos, Neg]
        }
    }

    pub fn letter(self) -> char {
        match self {
            DeviceKind::Nmos | DeviceKind::Pmos => 'M',
            DeviceKind::Resistor => 'R',
            DeviceKind::Capacitor => 'C',
            DeviceKind::Vsource => 'V',
            DeviceKind::Isource => 'I',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Nmos => "NMOS",
            DeviceKind::Pmos => "PMOS",
            DeviceKind::Resistor => "RESISTOR",
            DeviceKind::Capacitor => "CAPACITOR",
            DeviceKind::Vsource => "VSOURCE",
            DeviceKind::Isource => "ISOURCE",
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Role of a terminal on its device. `Pin` is the single terminal of an
/// I/O port symbol and never appears on a netlist device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TerminalRole {
    Drain,
    Gate,
    Source,
    Bulk,
    Pos,
    Neg,
    Pin,
}

impl TerminalRole {
    pub const ALL: [TerminalRole; 7] = [
        TerminalRole::Drain,
        TerminalRole::Gate,
        TerminalRole::Source,
        TerminalRole::Bulk,
        TerminalRole::Pos,
        TerminalRole::Neg,
        TerminalRole::Pin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerminalRole::Drain => "DRAIN",
            TerminalRole::Gate => "GATE",
            TerminalRole::Source => "SOURCE",
            TerminalRole::Bulk => "BULK",
            TerminalRole::Pos => "POS",
            TerminalRole::Neg => "NEG",
            TerminalRole::Pin => "PIN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for TerminalRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NetClass {
    Power,
    Ground,
    Signal,
    Io,
}

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalRef {
    pub role: TerminalRole,
    pub net: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    pub terminals: Vec<TerminalRef>,
    /// MOS model name as written (upper-cased).
    pub model: Option<String>,
    /// Bare value tokens after the terminals (R/C value, source value).
    pub value: Option<String>,
    pub params: BTreeMap<String, String>,
    pub span: Span,
}

impl Device {
    pub fn net_of(&self, role: TerminalRole) -> Option<&str> {
        self.terminals.iter().find(|t| t.role == role).map(|t| t.net.as_str())
    }

    pub fn gate(&self) -> Option<&str> {
        self.net_of(TerminalRole::Gate)
    }

    pub fn drain(&self) -> Option<&str> {
        self.net_of(TerminalRole::Drain)
    }

    pub fn source(&self) -> Option<&str> {
        self.net_of(TerminalRole::Source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub terminals: BTreeSet<(String, TerminalRole)>,
    pub klass: NetClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub devices: Vec<Device>,
    /// Nets in order of first appearance.
    pub nets: Vec<Net>,
    pub io_ports: Vec<String>,
    pub source_text: String,
}

/// A diagnostic rendered as `line:col: code: message`; callers prefix the file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.span.line, self.span.col, self.code, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetlistError {
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    DuplicateDevice {
        name: String,
        line: usize,
        col: usize,
        first_line: usize,
    },
    Arity {
        name: String,
        kind: DeviceKind,
        expected: usize,
        found: usize,
        line: usize,
        col: usize,
    },
    EmptyNetlist,
    AmbiguousNet {
        net: String,
    },
}

impl NetlistError {
    pub fn diagnostic(&self) -> Diagnostic {
        let at = |line: usize, col: usize| Span { line, col };
        match self {
            NetlistError::Syntax { line, col, message } => Diagnostic {
                span: at(*line, *col),
                code: "syntax",
                message: message.clone(),
            },
            NetlistError::DuplicateDevice {
                name,
                line,
                col,
                first_line,
            } => Diagnostic {
                span: at(*line, *col),
                code: "duplicate-device",
                message: format!("device {name} already declared on line {first_line}"),
            },
            NetlistError::Arity {
                name,
                kind,
                expected,
                found,
                line,
                col,
            } => Diagnostic {
                span: at(*line, *col),
                code: "arity",
                message: format!("{name} ({kind}) expects {expected} terminals, found {found}"),
            },
            NetlistError::EmptyNetlist => Diagnostic {
                span: at(1, 1),
                code: "empty-netlist",
                message: "no element cards found".into(),
            },
            NetlistError::AmbiguousNet { net } => Diagnostic {
                span: at(1, 1),
                code: "ambiguous-net",
                message: format!("net {net} matches both power and ground aliases"),
            },
        }
    }
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.diagnostic().fmt(f)
    }
}

impl std::error::Error for NetlistError {}

/// Power / ground alias sets used by [`classify_nets_with`].
#[derive(Debug, Clone)]
pub struct AliasTable {
    pub power: BTreeSet<String>,
    pub ground: BTreeSet<String>,
}

impl Default for AliasTable {
    fn default() -> Self {
        AliasTable {
            power: POWER_ALIASES.iter().map(|s| s.to_string()).collect(),
            ground: GROUND_ALIASES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    span: Span,
}

#[derive(Debug)]
struct Card<'a> {
    tokens: Vec<Token<'a>>,
}

fn tokenize_line(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let code = match line.find(';') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut start: Option<usize> = None;
    for (i, ch) in code.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &code[s..i],
                    span: Span {
                        line: line_no,
                        col: code[..s].chars().count() + 1,
                    },
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &code[s..],
            span: Span {
                line: line_no,
                col: code[..s].chars().count() + 1,
            },
        });
    }
    out
}

fn split_cards(text: &str) -> Result<Vec<Card<'_>>, NetlistError> {
    let mut cards: Vec<Card<'_>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let mut tokens = tokenize_line(line, line_no);
        if tokens.is_empty() {
            continue;
        }
        if let Some(rest) = tokens[0].text.strip_prefix('+') {
            let Some(last) = cards.last_mut() else {
                return Err(NetlistError::Syntax {
                    line: line_no,
                    col: tokens[0].span.col,
                    message: "continuation line without a preceding card".into(),
                });
            };
            if rest.is_empty() {
                tokens.remove(0);
            } else {
                tokens[0].text = rest;
                tokens[0].span.col += 1;
            }
            last.tokens.extend(tokens);
        } else {
            cards.push(Card { tokens });
        }
    }
    Ok(cards)
}

/// Parse a netlist. Warnings (skipped dot-cards) are discarded; see
/// [`parse_netlist_with_warnings`].
pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    parse_netlist_with_warnings(text).map(|(c, _)| c)
}

pub fn parse_netlist_with_warnings(text: &str) -> Result<(Circuit, Vec<Diagnostic>), NetlistError> {
    let cards = split_cards(text)?;
    let mut warnings = Vec::new();
    let mut devices: Vec<Device> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut ports: Vec<(String, Span)> = Vec::new();

    for card in &cards {
        let head = &card.tokens[0];
        if head.text.starts_with('.') {
            let directive = head.text.to_ascii_uppercase();
            match directive.as_str() {
                ".END" => break,
                ".PORTS" => {
                    for tok in &card.tokens[1..] {
                        let name = tok.text.to_ascii_uppercase();
                        if !ports.iter().any(|(p, _)| *p == name) {
                            ports.push((name, tok.span));
                        }
                    }
                }
                ".SUBCKT" | ".ENDS" => {
                    return Err(NetlistError::Syntax {
                        line: head.span.line,
                        col: head.span.col,
                        message: "hierarchical subcircuits are not supported".into(),
                    })
                }
                _ => warnings.push(Diagnostic {
                    span: head.span,
                    code: "skipped-directive",
                    message: format!("ignoring unsupported directive {}", directive),
                }),
            }
            continue;
        }
        let device = parse_element(card)?;
        if let Some(&first_line) = seen.get(&device.name) {
            return Err(NetlistError::DuplicateDevice {
                name: device.name,
                line: head.span.line,
                col: head.span.col,
                first_line,
            });
        }
        seen.insert(device.name.clone(), head.span.line);
        devices.push(device);
    }

    if devices.is_empty() {
        return Err(NetlistError::EmptyNetlist);
    }

    let mut nets: Vec<Net> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for d in &devices {
        for t in &d.terminals {
            let i = *index.entry(t.net.clone()).or_insert_with(|| {
                nets.push(Net {
                    name: t.net.clone(),
                    terminals: BTreeSet::new(),
                    klass: NetClass::Signal,
                });
                nets.len() - 1
            });
            nets[i].terminals.insert((d.name.clone(), t.role));
        }
    }

    for (p, span) in &ports {
        if !index.contains_key(p) {
            return Err(NetlistError::Syntax {
                line: span.line,
                col: span.col,
                message: format!("port {p} is not connected to any device"),
            });
        }
    }

    let circuit = Circuit {
        devices,
        nets,
        io_ports: ports.into_iter().map(|(p, _)| p).collect(),
        source_text: text.to_string(),
    };
    let circuit = classify_nets(circuit)?;
    Ok((circuit, warnings))
}

fn parse_element(card: &Card<'_>) -> Result<Device, NetlistError> {
    let head = &card.tokens[0];
    let name = head.text.to_ascii_uppercase();
    let letter = name.chars().next().unwrap_or(' ');
    let syntax = |tok: &Token<'_>, message: String| NetlistError::Syntax {
        line: tok.span.line,
        col: tok.span.col,
        message,
    };

    let mut bare: Vec<&Token<'_>> = Vec::new();
    let mut params = BTreeMap::new();
    for tok in &card.tokens[1..] {
        if let Some((k, v)) = tok.text.split_once('=') {
            if k.is_empty() || v.is_empty() {
                return Err(syntax(tok, format!("malformed parameter `{}`", tok.text)));
            }
            params.insert(k.to_ascii_uppercase(), v.to_string());
        } else {
            if !params.is_empty() {
                return Err(syntax(tok, format!("positional token `{}` after parameters", tok.text)));
            }
            bare.push(tok);
        }
    }

    let (kind, n_terms) = match letter {
        'M' => {
            // polarity comes from the model token, which follows the 4 nets
            if bare.len() != 5 {
                let found = bare.len().saturating_sub(1);
                return Err(NetlistError::Arity {
                    name,
                    kind: DeviceKind::Nmos,
                    expected: 4,
                    found,
                    line: head.span.line,
                    col: head.span.col,
                });
            }
            let model = bare[4].text.to_ascii_uppercase();
            let kind = match model.chars().next() {
                Some('P') => DeviceKind::Pmos,
                Some('N') => DeviceKind::Nmos,
                _ => {
                    return Err(syntax(
                        bare[4],
                        format!("cannot infer MOS polarity from model `{}`", bare[4].text),
                    ))
                }
            };
            (kind, 4)
        }
        'R' => (DeviceKind::Resistor, 2),
        'C' => (DeviceKind::Capacitor, 2),
        'V' => (DeviceKind::Vsource, 2),
        'I' => (DeviceKind::Isource, 2),
        _ => return Err(syntax(head, format!("unsupported element `{}`", head.text))),
    };

    if bare.len() < n_terms {
        return Err(NetlistError::Arity {
            name,
            kind,
            expected: n_terms,
            found: bare.len(),
            line: head.span.line,
            col: head.span.col,
        });
    }
    if matches!(kind, DeviceKind::Resistor | DeviceKind::Capacitor) && bare.len() > n_terms + 1 {
        return Err(NetlistError::Arity {
            name,
            kind,
            expected: n_terms,
            found: bare.len() - 1,
            line: head.span.line,
            col: head.span.col,
        });
    }

    let terminals = kind
        .roles()
        .iter()
        .zip(&bare)
        .map(|(&role, tok)| TerminalRef {
            role,
            net: tok.text.to_ascii_uppercase(),
            span: tok.span,
        })
        .collect();

    let (model, value) = if kind.is_mos() {
        (Some(bare[4].text.to_ascii_uppercase()), None)
    } else {
        let rest: Vec<&str> = bare[n_terms..].iter().map(|t| t.text).collect();
        (None, (!rest.is_empty()).then(|| rest.join(" ")))
    };

    Ok(Device {
        name,
        kind,
        terminals,
        model,
        value,
        params,
        span: head.span,
    })
}

/// Assign net classes from the default alias tables.
pub fn classify_nets(c: Circuit) -> Result<Circuit, NetlistError> {
    classify_nets_with(c, &AliasTable::default())
}

pub fn classify_nets_with(mut c: Circuit, aliases: &AliasTable) -> Result<Circuit, NetlistError> {
    for net in &mut c.nets {
        let p = aliases.power.contains(&net.name);
        let g = aliases.ground.contains(&net.name);
        net.klass = match (p, g) {
            (true, true) => return Err(NetlistError::AmbiguousNet { net: net.name.clone() }),
            (true, false) => NetClass::Power,
            (false, true) => NetClass::Ground,
            _ if c.io_ports.contains(&net.name) => NetClass::Io,
            _ => NetClass::Signal,
        };
    }
    Ok(c)
}

/// Class a bare net name would receive under the default alias tables.
pub fn alias_class(name: &str) -> NetClass {
    let upper = name.to_ascii_uppercase();
    if POWER_ALIASES.contains(&upper.as_str()) {
        NetClass::Power
    } else if GROUND_ALIASES.contains(&upper.as_str()) {
        NetClass::Ground
    } else {
        NetClass::Signal
    }
}

/// Terminals grouped by the net they sit on.
pub fn net_groups(c: &Circuit) -> BTreeMap<String, BTreeSet<(String, TerminalRole)>> {
    let mut groups: BTreeMap<String, BTreeSet<(String, TerminalRole)>> = BTreeMap::new();
    for d in &c.devices {
        for t in &d.terminals {
            groups
                .entry(t.net.clone())
                .or_default()
                .insert((d.name.clone(), t.role));
        }
    }
    groups
}

impl Circuit {
    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn net(&self, name: &str) -> Option<&Net> {
        self.nets.iter().find(|n| n.name == name)
    }

    pub fn net_class(&self, name: &str) -> Option<NetClass> {
        self.net(name).map(|n| n.klass)
    }

    pub fn is_supply(&self, net: &str) -> bool {
        matches!(self.net_class(net), Some(NetClass::Power) | Some(NetClass::Ground))
    }

    pub fn mos_devices(&self) -> impl Iterator<Item = &Device> {
        self.devices.iter().filter(|d| d.kind.is_mos())
    }

    /// Compare everything except source positions and the original text.
    pub fn same_structure(&self, other: &Circuit) -> bool {
        fn strip(c: &Circuit) -> Circuit {
            let mut c = c.clone();
            c.source_text.clear();
            for d in &mut c.devices {
                d.span = Span::default();
                for t in &mut d.terminals {
                    t.span = Span::default();
                }
            }
            c
        }
        strip(self) == strip(other)
    }

    /// Canonical netlist text; re-parses to a structurally identical circuit.
    pub fn to_netlist_text(&self) -> String {
        let mut out = String::new();
        for d in &self.devices {
            out.push_str(&d.name);
            for t in &d.terminals {
                out.push(' ');
                out.push_str(&t.net);
            }
            if let Some(m) = &d.model {
                out.push(' ');
                out.push_str(m);
            }
            if let Some(v) = &d.value {
                out.push(' ');
                out.push_str(v);
            }
            for (k, v) in &d.params {
                out.push_str(&format!(" {k}={v}"));
            }
            out.push('\n');
        }
        if !self.io_ports.is_empty() {
            out.push_str(".ports");
            for p in &self.io_ports {
                out.push(' ');
                out.push_str(p);
            }
            out.push('\n');
        }
        out.push_str(".end\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INVERTER: &str = "M1 out in vdd vdd PMOS W=2u L=180n\nM2 out in gnd gnd NMOS W=1u L=180n";

    #[test]
    fn inverter_incidence_matches_hand_table() {
        let c = parse_netlist(INVERTER).unwrap();
        assert_eq!(c.devices.len(), 2);
        let names: Vec<_> = c.nets.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["OUT", "IN", "VDD", "GND"]);
        // hand-enumerated terminal -> net table
        let table = [
            ("M1", TerminalRole::Drain, "OUT"),
            ("M1", TerminalRole::Gate, "IN"),
            ("M1", TerminalRole::Source, "VDD"),
            ("M1", TerminalRole::Bulk, "VDD"),
            ("M2", TerminalRole::Drain, "OUT"),
            ("M2", TerminalRole::Gate, "IN"),
            ("M2", TerminalRole::Source, "GND"),
            ("M2", TerminalRole::Bulk, "GND"),
        ];
        for (dev, role, net) in table {
            assert_eq!(c.device(dev).unwrap().net_of(role), Some(net));
            assert!(c.net(net).unwrap().terminals.contains(&(dev.to_string(), role)));
        }
        let total: usize = c.nets.iter().map(|n| n.terminals.len()).sum();
        assert_eq!(total, table.len());
        assert_eq!(c.net_class("VDD"), Some(NetClass::Power));
        assert_eq!(c.net_class("GND"), Some(NetClass::Ground));
        assert_eq!(c.net_class("IN"), Some(NetClass::Signal));
        assert_eq!(c.device("M1").unwrap().params["W"], "2u");
    }

    #[test]
    fn groups_follow_shared_names() {
        let c = parse_netlist(INVERTER).unwrap();
        let g = net_groups(&c);
        let expected: BTreeSet<_> = [
            ("M1".to_string(), TerminalRole::Gate),
            ("M2".to_string(), TerminalRole::Gate),
        ]
        .into_iter()
        .collect();
        assert_eq!(g["IN"], expected);
        // bulk tied to source: both roles of one device in one group
        assert!(g["VDD"].contains(&("M1".into(), TerminalRole::Source)));
        assert!(g["VDD"].contains(&("M1".into(), TerminalRole::Bulk)));
    }

    #[test]
    fn single_device_groups_are_nonempty() {
        let c = parse_netlist("R1 a b 1k").unwrap();
        let g = net_groups(&c);
        assert_eq!(g.len(), 2);
        assert!(g.values().all(|s| s.len() == 1));
    }

    #[test]
    fn empty_and_comment_only_inputs() {
        assert_eq!(parse_netlist(""), Err(NetlistError::EmptyNetlist));
        assert_eq!(
            parse_netlist("* nothing\n\n; still nothing\n.end\n"),
            Err(NetlistError::EmptyNetlist)
        );
    }

    #[test]
    fn duplicate_device_is_rejected() {
        let err = parse_netlist("M1 a b c d NMOS\nM1 e f g h NMOS").unwrap_err();
        assert!(matches!(err, NetlistError::DuplicateDevice { ref name, line: 2, first_line: 1, .. } if name == "M1"));
        // names are case-insensitive
        assert!(matches!(
            parse_netlist("r1 a b\nR1 c d"),
            Err(NetlistError::DuplicateDevice { .. })
        ));
    }

    #[test]
    fn arity_errors() {
        let err = parse_netlist("M1 a b c NMOS").unwrap_err();
        assert!(matches!(
            err,
            NetlistError::Arity {
                expected: 4,
                found: 3,
                ..
            }
        ));
        let err = parse_netlist("R1 a").unwrap_err();
        assert!(matches!(
            err,
            NetlistError::Arity {
                expected: 2,
                found: 1,
                ..
            }
        ));
        let err = parse_netlist("M1 a b c d e NMOS").unwrap_err();
        assert!(matches!(err, NetlistError::Arity { found: 5, .. }));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_netlist("R1 a b 1k\n  Q1 c b e npn").unwrap_err();
        assert_eq!(
            err,
            NetlistError::Syntax {
                line: 2,
                col: 3,
                message: "unsupported element `Q1`".into()
            }
        );
        let d = err.diagnostic();
        assert_eq!(d.to_string(), "2:3: syntax: unsupported element `Q1`");
        assert!(matches!(
            parse_netlist("M1 a b c d XMOD"),
            Err(NetlistError::Syntax { line: 1, col: 12, .. })
        ));
        assert!(matches!(
            parse_netlist("+ a b"),
            Err(NetlistError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_netlist("R1 a b R=1k 5"),
            Err(NetlistError::Syntax { .. })
        ));
    }

    #[test]
    fn continuation_comments_and_directives() {
        let text = "* title\n.option post\nM1 d g s b nch ; trailing\n+ W=1u\n+L=2u\n.ports g d\n.end\nR9 x y\n";
        let (c, warnings) = parse_netlist_with_warnings(text).unwrap();
        assert_eq!(c.devices.len(), 1);
        let m1 = &c.devices[0];
        assert_eq!(m1.kind, DeviceKind::Nmos);
        assert_eq!(m1.params["W"], "1u");
        assert_eq!(m1.params["L"], "2u");
        assert_eq!(m1.span, Span { line: 3, col: 1 });
        assert_eq!(m1.terminals[1].span, Span { line: 3, col: 6 });
        assert_eq!(c.io_ports, ["G", "D"]);
        assert_eq!(c.net_class("G"), Some(NetClass::Io));
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].code, "skipped-directive");
        assert_eq!(warnings[0].span.line, 2);
    }

    #[test]
    fn subckt_is_rejected() {
        assert!(matches!(
            parse_netlist(".subckt inv a y\nM1 y a 0 0 nmos\n.ends"),
            Err(NetlistError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn port_must_name_a_used_net() {
        assert!(matches!(
            parse_netlist("R1 a b\n.ports c"),
            Err(NetlistError::Syntax { line: 2, col: 8, .. })
        ));
    }

    #[test]
    fn classification_tables() {
        for name in ["VDD", "vcc", "VDD!", "avdd"] {
            assert_eq!(alias_class(name), NetClass::Power, "{name}");
        }
        for name in ["gnd", "VSS", "0", "GND!", "agnd"] {
            assert_eq!(alias_class(name), NetClass::Ground, "{name}");
        }
        assert_eq!(alias_class("vmid"), NetClass::Signal);

        let c = parse_netlist("R1 vdd! 0\nR2 vmid 0\n.ports vdd! vmid").unwrap();
        assert_eq!(c.net_class("VDD!"), Some(NetClass::Power));
        assert_eq!(c.net_class("0"), Some(NetClass::Ground));
        // declared port keeps its supply class
        assert_eq!(c.net_class("VMID"), Some(NetClass::Io));
    }

    #[test]
    fn ambiguous_alias_tables() {
        let c = parse_netlist("R1 rail 0").unwrap();
        let mut aliases = AliasTable::default();
        aliases.power.insert("RAIL".into());
        aliases.ground.insert("RAIL".into());
        assert_eq!(
            classify_nets_with(c, &aliases),
            Err(NetlistError::AmbiguousNet { net: "RAIL".into() })
        );
    }

    #[test]
    fn sources_keep_their_spec_text() {
        let c = parse_netlist("V1 vdd 0 DC 1.8\nI1 a 0").unwrap();
        assert_eq!(c.devices[0].value.as_deref(), Some("DC 1.8"));
        assert_eq!(c.devices[1].value, None);
        assert_eq!(c.devices[0].kind, DeviceKind::Vsource);
    }

    #[test]
    fn canonical_text_reparses() {
        let text = "m1 out in vdd vdd pch w=2u\nR1 out x 10k\nC1 x 0 1p\nV1 vdd 0 DC 1.8\n.ports in out\n";
        let c = parse_netlist(text).unwrap();
        let again = parse_netlist(&c.to_netlist_text()).unwrap();
        assert!(c.same_structure(&again));
    }
}
