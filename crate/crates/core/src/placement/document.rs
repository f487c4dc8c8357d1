//! `layout.json` reader and canonical writer.
//!
//! The reader walks the JSON tree by hand so every schema error carries a
//! JSON-pointer path. Unknown fields are tolerated and reported as warnings.

use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{ComponentKind, Grid, Label, Orientation, PlacedComponent, Point, Rotation, SchematicLayout, WirePolyline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    /// JSON pointer to the offending value (`""` for the document root).
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaWarning {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn err(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.to_string(),
        message: message.into(),
    }
}

struct Reader {
    warnings: Vec<SchemaWarning>,
}

impl Reader {
    fn object<'a>(&mut self, v: &'a Value, path: &str, known: &[&str]) -> Result<&'a Map<String, Value>, SchemaError> {
        let obj = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                self.warnings.push(SchemaWarning {
                    path: format!("{path}/{key}"),
                    message: "unknown field ignored".into(),
                });
            }
        }
        Ok(obj)
    }
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, SchemaError> {
    obj.get(key)
        .ok_or_else(|| err(&format!("{path}/{key}"), "missing required field"))
}

fn int(v: &Value, path: &str) -> Result<i32, SchemaError> {
    v.as_i64()
        .and_then(|i| i32::try_from(i).ok())
        .ok_or_else(|| err(path, "expected an integer"))
}

fn string(v: &Value, path: &str) -> Result<String, SchemaError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| err(path, "expected a string"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, SchemaError> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

/// Parse a layout document.
pub fn read_layout(bytes: &[u8]) -> Result<(SchematicLayout, Vec<SchemaWarning>), SchemaError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    let mut r = Reader { warnings: vec![] };
    let top = r.object(&root, "", &["grid", "components", "wires", "labels"])?;

    let gv = field(top, "", "grid")?;
    let g = r.object(gv, "/grid", &["width", "height", "unit"])?;
    let grid = Grid {
        width: int(field(g, "/grid", "width")?, "/grid/width")?,
        height: int(field(g, "/grid", "height")?, "/grid/height")?,
    };
    if grid.width <= 0 || grid.height <= 0 {
        return Err(err("/grid", "width and height must be positive"));
    }

    let mut components = Vec::new();
    for (i, cv) in array(field(top, "", "components")?, "/components")?.iter().enumerate() {
        let path = format!("/components/{i}");
        let c = r.object(cv, &path, &["id", "kind", "x", "y", "rot", "mirror"])?;
        let id = string(field(c, &path, "id")?, &format!("{path}/id"))?;
        let kind_s = string(field(c, &path, "kind")?, &format!("{path}/kind"))?;
        let kind = ComponentKind::parse(&kind_s)
            .ok_or_else(|| err(&format!("{path}/kind"), format!("unknown component kind {kind_s:?}")))?;
        let x = int(field(c, &path, "x")?, &format!("{path}/x"))?;
        let y = int(field(c, &path, "y")?, &format!("{path}/y"))?;
        let rot_path = format!("{path}/rot");
        let rot = field(c, &path, "rot")?
            .as_i64()
            .and_then(Rotation::from_degrees)
            .ok_or_else(|| err(&rot_path, "expected one of 0, 90, 180, 270"))?;
        let mirror_path = format!("{path}/mirror");
        let mirror = field(c, &path, "mirror")?
            .as_bool()
            .ok_or_else(|| err(&mirror_path, "expected a boolean"))?;
        components.push(PlacedComponent {
            id,
            kind,
            x,
            y,
            orientation: Orientation::new(rot, mirror),
        });
    }

    let mut wires = Vec::new();
    for (i, wv) in array(field(top, "", "wires")?, "/wires")?.iter().enumerate() {
        let path = format!("/wires/{i}");
        let w = r.object(wv, &path, &["net", "points"])?;
        let net = string(field(w, &path, "net")?, &format!("{path}/net"))?;
        let mut points = Vec::new();
        for (j, pv) in array(field(w, &path, "points")?, &format!("{path}/points"))?
            .iter()
            .enumerate()
        {
            let ppath = format!("{path}/points/{j}");
            let pair = array(pv, &ppath)?;
            if pair.len() != 2 {
                return Err(err(&ppath, "expected [x, y]"));
            }
            points.push(Point::new(
                int(&pair[0], &format!("{ppath}/0"))?,
                int(&pair[1], &format!("{ppath}/1"))?,
            ));
        }
        wires.push(WirePolyline { net, points });
    }

    let mut labels = Vec::new();
    if let Some(lv) = top.get("labels") {
        for (i, v) in array(lv, "/labels")?.iter().enumerate() {
            let path = format!("/labels/{i}");
            let l = r.object(v, &path, &["net", "x", "y"])?;
            labels.push(Label {
                net: string(field(l, &path, "net")?, &format!("{path}/net"))?,
                x: int(field(l, &path, "x")?, &format!("{path}/x"))?,
                y: int(field(l, &path, "y")?, &format!("{path}/y"))?,
            });
        }
    }

    Ok((
        SchematicLayout {
            grid,
            components,
            wires,
            labels,
        },
        r.warnings,
    ))
}

fn js(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Canonical serialization: fixed key order, two-space indent, components
/// sorted by id, one record per line.
pub fn write_layout(l: &SchematicLayout) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(
        out,
        "  \"grid\": {{\"width\": {}, \"height\": {}}},",
        l.grid.width, l.grid.height
    );

    let mut comps: Vec<&PlacedComponent> = l.components.iter().collect();
    comps.sort_by(|a, b| a.id.cmp(&b.id));
    out.push_str("  \"components\": [");
    for (i, c) in comps.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {{\"id\": {}, \"kind\": {}, \"x\": {}, \"y\": {}, \"rot\": {}, \"mirror\": {}}}",
            js(&c.id),
            js(c.kind.as_str()),
            c.x,
            c.y,
            c.orientation.rotation.degrees(),
            c.orientation.mirrored
        );
    }
    out.push_str(if comps.is_empty() { "],\n" } else { "\n  ],\n" });

    out.push_str("  \"wires\": [");
    for (i, w) in l.wires.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let pts: Vec<String> = w.points.iter().map(|p| format!("[{}, {}]", p.x, p.y)).collect();
        let _ = write!(out, "    {{\"net\": {}, \"points\": [{}]}}", js(&w.net), pts.join(", "));
    }
    out.push_str(if l.wires.is_empty() { "],\n" } else { "\n  ],\n" });

    out.push_str("  \"labels\": [");
    for (i, lb) in l.labels.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {{\"net\": {}, \"x\": {}, \"y\": {}}}",
            js(&lb.net),
            lb.x,
            lb.y
        );
    }
    out.push_str(if l.labels.is_empty() { "]\n" } else { "\n  ]\n" });
    out.push_str("}\n");
    out
}
