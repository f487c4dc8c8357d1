//! Symbol table: box sizes, terminal anchors and drawing strokes per kind,
//! plus the orientation transform shared by routing, rendering and checks.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::netlist::TerminalRole;
use crate::placement::{ComponentKind, Orientation, Point, Rotation, SchematicLayout};

use super::RenderError;

const BUILTIN_TABLE: &str = include_str!("../../assets/symbols.toml");

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stroke {
    /// x1, y1, x2, y2
    Line([f64; 4]),
    /// cx, cy, r
    Circle([f64; 3]),
    /// x1, y1, x2, y2, radius (SVG arc, small sweep)
    Arc([f64; 5]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDef {
    pub kind: ComponentKind,
    pub width: i32,
    pub height: i32,
    pub anchors: BTreeMap<TerminalRole, (i32, i32)>,
    pub strokes: Vec<Stroke>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    version: u32,
    symbol: Vec<RawSymbol>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymbol {
    kind: String,
    width: i32,
    height: i32,
    anchors: BTreeMap<String, [i32; 2]>,
    #[serde(default)]
    strokes: Vec<Stroke>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    pub version: u32,
    symbols: BTreeMap<ComponentKind, SymbolDef>,
}

impl SymbolTable {
    /// Parse and check a symbol table: known kinds, anchors on the box
    /// boundary, one record per kind.
    pub fn from_toml(text: &str) -> Result<SymbolTable, String> {
        let raw: RawTable = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut symbols = BTreeMap::new();
        for s in raw.symbol {
            let kind = ComponentKind::parse(&s.kind).ok_or_else(|| format!("unknown symbol kind {}", s.kind))?;
            if s.width <= 0 || s.height <= 0 {
                return Err(format!("{}: box must be positive", s.kind));
            }
            let mut anchors = BTreeMap::new();
            for (role, [u, v]) in s.anchors {
                let role =
                    TerminalRole::parse(&role).ok_or_else(|| format!("{}: unknown terminal role {role}", s.kind))?;
                let inside = (0..=s.width).contains(&u) && (0..=s.height).contains(&v);
                let on_edge = u == 0 || v == 0 || u == s.width || v == s.height;
                if !(inside && on_edge) {
                    return Err(format!("{}: anchor {role} ({u}, {v}) is off the box boundary", s.kind));
                }
                anchors.insert(role, (u, v));
            }
            let def = SymbolDef {
                kind,
                width: s.width,
                height: s.height,
                anchors,
                strokes: s.strokes,
            };
            if symbols.insert(kind, def).is_some() {
                return Err(format!("duplicate symbol for {kind}"));
            }
        }
        Ok(SymbolTable {
            version: raw.version,
            symbols,
        })
    }

    pub fn get(&self, kind: ComponentKind) -> Option<&SymbolDef> {
        self.symbols.get(&kind)
    }

    pub fn require(&self, kind: ComponentKind) -> Result<&SymbolDef, RenderError> {
        self.get(kind).ok_or(RenderError::UnknownKind(kind))
    }

    pub fn kinds(&self) -> impl Iterator<Item = ComponentKind> + '_ {
        self.symbols.keys().copied()
    }
}

/// The table bundled with the crate.
pub fn builtin() -> &'static SymbolTable {
    static TABLE: OnceLock<SymbolTable> = OnceLock::new();
    TABLE.get_or_init(|| SymbolTable::from_toml(BUILTIN_TABLE).expect("bundled symbol table is valid"))
}

impl SymbolDef {
    /// Box size after orientation.
    pub fn oriented_size(&self, o: Orientation) -> (i32, i32) {
        match o.rotation {
            Rotation::R0 | Rotation::R180 => (self.width, self.height),
            Rotation::R90 | Rotation::R270 => (self.height, self.width),
        }
    }

    /// Local offset of an anchor after orientation, relative to the
    /// oriented box's top-left corner.
    pub fn oriented_anchor(&self, role: TerminalRole, o: Orientation) -> Option<(i32, i32)> {
        self.anchors
            .get(&role)
            .map(|&(u, v)| orient_i(u, v, self.width, self.height, o))
    }
}

/// Orient a local offset `(u, v)` within a `w × h` box: flip horizontally
/// first (if mirrored), then rotate clockwise in 90° steps. The result is
/// relative to the top-left corner of the oriented box.
pub fn orient_i(u: i32, v: i32, w: i32, h: i32, o: Orientation) -> (i32, i32) {
    let u = if o.mirrored { w - u } else { u };
    match o.rotation {
        Rotation::R0 => (u, v),
        Rotation::R90 => (h - v, u),
        Rotation::R180 => (w - u, h - v),
        Rotation::R270 => (v, w - u),
    }
}

/// Floating-point twin of [`orient_i`] for stroke geometry.
pub fn orient_f(u: f64, v: f64, w: f64, h: f64, o: Orientation) -> (f64, f64) {
    let u = if o.mirrored { w - u } else { u };
    match o.rotation {
        Rotation::R0 => (u, v),
        Rotation::R90 => (h - v, u),
        Rotation::R180 => (w - u, h - v),
        Rotation::R270 => (v, w - u),
    }
}

/// A terminal anchor located on the grid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TerminalAnchor {
    pub component: String,
    pub role: TerminalRole,
    pub point: Point,
}

/// Grid positions of every terminal anchor in the layout, in component order
/// then symbol-table role order.
pub fn terminal_positions(l: &SchematicLayout) -> Result<Vec<TerminalAnchor>, RenderError> {
    terminal_positions_with(l, builtin())
}

pub fn terminal_positions_with(l: &SchematicLayout, table: &SymbolTable) -> Result<Vec<TerminalAnchor>, RenderError> {
    let mut out = Vec::new();
    for c in &l.components {
        let sym = table.require(c.kind)?;
        for (&role, &(u, v)) in &sym.anchors {
            let (dx, dy) = orient_i(u, v, sym.width, sym.height, c.orientation);
            out.push(TerminalAnchor {
                component: c.id.clone(),
                role,
                point: Point::new(c.x + dx, c.y + dy),
            });
        }
    }
    Ok(out)
}
