//! The schematic layout document and the deterministic initial placer.
//!
//! A layout lives on an integer grid. Component positions are the top-left
//! corner of the (oriented) symbol box; wires are rectilinear polylines
//! through grid points.

mod document;
mod initial;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netlist::DeviceKind;
use crate::render::symbols::{self, SymbolDef};

pub use document::{read_layout, write_layout, SchemaError, SchemaWarning};
pub use initial::{centerline_x, initial_place, initial_place_with, PlaceOptions, PlacementError};
pub use validate::{boxes_overlap, validate_layout, validate_structure, Violation};

pub const DEFAULT_WIDTH: i32 = 64;
pub const DEFAULT_HEIGHT: i32 = 64;
/// Minimum empty grid units the placer leaves between symbol boxes.
pub const MIN_CLEARANCE: i32 = 2;

const PORT_PREFIX: &str = "PORT_";

/// Layout id of the I/O port symbol for `net`.
pub fn port_id(net: &str) -> String {
    format!("{PORT_PREFIX}{net}")
}

/// Net carried by a port component id.
pub fn port_net(id: &str) -> Option<&str> {
    id.strip_prefix(PORT_PREFIX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }

    pub fn manhattan(self, other: Point) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[i32; 2]>::deserialize(d)?;
        Ok(Point { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(deg: i64) -> Option<Self> {
        match deg {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    /// Rotation by `-self`.
    pub fn inverse(self) -> Self {
        match self {
            Rotation::R0 => Rotation::R0,
            Rotation::R90 => Rotation::R270,
            Rotation::R180 => Rotation::R180,
            Rotation::R270 => Rotation::R90,
        }
    }

    pub fn quarter_turns(self) -> u8 {
        (self.degrees() / 90) as u8
    }
}

/// Symbol orientation: the horizontal flip (if any) is applied before the
/// clockwise rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Orientation {
    pub rotation: Rotation,
    pub mirrored: bool,
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation {
        rotation: Rotation::R0,
        mirrored: false,
    };

    pub fn new(rotation: Rotation, mirrored: bool) -> Self {
        Orientation { rotation, mirrored }
    }

    /// All eight orientations.
    pub fn all() -> impl Iterator<Item = Orientation> {
        [false, true]
            .into_iter()
            .flat_map(|m| Rotation::ALL.into_iter().map(move |r| Orientation::new(r, m)))
    }

    /// Orientation of this symbol after the whole drawing is reflected
    /// about a vertical axis.
    pub fn reflected(self) -> Self {
        Orientation {
            rotation: self.rotation.inverse(),
            mirrored: !self.mirrored,
        }
    }
}

/// Symbol kind in a layout: a netlist device kind or an I/O port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ComponentKind {
    Nmos,
    Pmos,
    Resistor,
    Capacitor,
    Vsource,
    Isource,
    Port,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 7] = [
        ComponentKind::Nmos,
        ComponentKind::Pmos,
        ComponentKind::Resistor,
        ComponentKind::Capacitor,
        ComponentKind::Vsource,
        ComponentKind::Isource,
        ComponentKind::Port,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Nmos => "NMOS",
            ComponentKind::Pmos => "PMOS",
            ComponentKind::Resistor => "RESISTOR",
            ComponentKind::Capacitor => "CAPACITOR",
            ComponentKind::Vsource => "VSOURCE",
            ComponentKind::Isource => "ISOURCE",
            ComponentKind::Port => "PORT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn device_kind(self) -> Option<DeviceKind> {
        Some(match self {
            ComponentKind::Nmos => DeviceKind::Nmos,
            ComponentKind::Pmos => DeviceKind::Pmos,
            ComponentKind::Resistor => DeviceKind::Resistor,
            ComponentKind::Capacitor => DeviceKind::Capacitor,
            ComponentKind::Vsource => DeviceKind::Vsource,
            ComponentKind::Isource => DeviceKind::Isource,
            ComponentKind::Port => return None,
        })
    }
}

impl From<DeviceKind> for ComponentKind {
    fn from(k: DeviceKind) -> Self {
        match k {
            DeviceKind::Nmos => ComponentKind::Nmos,
            DeviceKind::Pmos => ComponentKind::Pmos,
            DeviceKind::Resistor => ComponentKind::Resistor,
            DeviceKind::Capacitor => ComponentKind::Capacitor,
            DeviceKind::Vsource => ComponentKind::Vsource,
            DeviceKind::Isource => ComponentKind::Isource,
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed axis-aligned box on the grid: `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl GridBox {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn intersects(&self, o: &GridBox) -> bool {
        self.x0 <= o.x1 && o.x0 <= self.x1 && self.y0 <= o.y1 && o.y0 <= self.y1
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0
    }

    /// Box centre in doubled coordinates (keeps integer arithmetic exact).
    pub fn center2(&self) -> (i32, i32) {
        (self.x0 + self.x1, self.y0 + self.y1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedComponent {
    pub id: String,
    pub kind: ComponentKind,
    pub x: i32,
    pub y: i32,
    pub orientation: Orientation,
}

impl PlacedComponent {
    pub fn new(id: impl Into<String>, kind: ComponentKind, x: i32, y: i32) -> Self {
        PlacedComponent {
            id: id.into(),
            kind,
            x,
            y,
            orientation: Orientation::IDENTITY,
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn symbol(&self) -> Option<&'static SymbolDef> {
        symbols::builtin().get(self.kind)
    }

    /// Occupied symbol box, using the built-in symbol table.
    pub fn bbox(&self) -> GridBox {
        let sym = self
            .symbol()
            .expect("built-in symbol table covers every component kind");
        self.bbox_for(sym)
    }

    pub fn bbox_for(&self, sym: &SymbolDef) -> GridBox {
        let (w, h) = sym.oriented_size(self.orientation);
        GridBox {
            x0: self.x,
            y0: self.y,
            x1: self.x + w,
            y1: self.y + h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePolyline {
    pub net: String,
    pub points: Vec<Point>,
}

impl WirePolyline {
    pub fn new(net: impl Into<String>, points: Vec<Point>) -> Self {
        WirePolyline {
            net: net.into(),
            points,
        }
    }

    /// Rectilinear with no zero-length segments and at least two points.
    pub fn is_well_formed(&self) -> bool {
        self.points.len() >= 2 && self.points.windows(2).all(|w| (w[0].x == w[1].x) != (w[0].y == w[1].y))
    }

    /// Unit steps along the polyline. Only meaningful for well-formed wires;
    /// diagonal segments are skipped.
    pub fn unit_edges(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.x != b.x && a.y != b.y {
                continue;
            }
            let dx = (b.x - a.x).signum();
            let dy = (b.y - a.y).signum();
            let mut p = a;
            while p != b {
                let q = Point::new(p.x + dx, p.y + dy);
                out.push((p, q));
                p = q;
            }
        }
        out
    }

    pub fn length(&self) -> i32 {
        self.points.windows(2).map(|w| w[0].manhattan(w[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub net: String,
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub width: i32,
    pub height: i32,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SchematicLayout {
    pub grid: Grid,
    pub components: Vec<PlacedComponent>,
    pub wires: Vec<WirePolyline>,
    pub labels: Vec<Label>,
}

impl SchematicLayout {
    pub fn empty(grid: Grid) -> Self {
        SchematicLayout {
            grid,
            ..Default::default()
        }
    }

    pub fn component(&self, id: &str) -> Option<&PlacedComponent> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn component_mut(&mut self, id: &str) -> Option<&mut PlacedComponent> {
        self.components.iter_mut().find(|c| c.id == id)
    }

    pub fn in_bounds(&self, p: Point) -> bool {
        p.x >= 0 && p.y >= 0 && p.x <= self.grid.width && p.y <= self.grid.height
    }

    /// Shift every component, wire and label.
    pub fn translated(&self, dx: i32, dy: i32) -> SchematicLayout {
        let mut out = self.clone();
        for c in &mut out.components {
            c.x += dx;
            c.y += dy;
        }
        for w in &mut out.wires {
            for p in &mut w.points {
                p.x += dx;
                p.y += dy;
            }
        }
        for l in &mut out.labels {
            l.x += dx;
            l.y += dy;
        }
        out
    }

    /// Reflect the whole drawing about the vertical line `x = axis`.
    pub fn reflected_about(&self, axis: i32) -> SchematicLayout {
        let mut out = self.clone();
        for c in &mut out.components {
            let b = c.bbox();
            c.x = 2 * axis - b.x1;
            c.orientation = c.orientation.reflected();
        }
        for w in &mut out.wires {
            for p in &mut w.points {
                p.x = 2 * axis - p.x;
            }
        }
        for l in &mut out.labels {
            l.x = 2 * axis - l.x;
        }
        out
    }
}
