//! SVG rendering of schematic layouts.
//!
//! Output is byte-stable: every number is printed with one decimal place and
//! elements are emitted in layout order.

pub mod symbols;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::placement::{validate_structure, ComponentKind, PlacedComponent, Point, SchematicLayout, Violation};

pub use symbols::{terminal_positions, terminal_positions_with, SymbolDef, SymbolTable, TerminalAnchor};

use symbols::{orient_f, Stroke};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("no symbol defined for component kind {0}")]
    UnknownKind(ComponentKind),
    #[error("unit_px must be at least 4, got {0}")]
    UnitTooSmall(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    pub unit_px: u32,
    pub show_labels: bool,
    pub show_grid: bool,
    pub highlight: BTreeSet<String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            unit_px: 10,
            show_labels: true,
            show_grid: false,
            highlight: BTreeSet::new(),
        }
    }
}

const STYLE: &str = "\
.background{fill:#ffffff}\
.gridline{stroke:#eeeeee;stroke-width:0.5}\
.component line,.component circle,.component path{stroke:#000000;stroke-width:1.5;fill:none}\
.component.accent line,.component.accent circle,.component.accent path{stroke:#d62728}\
.component.warning line,.component.warning circle,.component.warning path{stroke:#ff7f0e;stroke-dasharray:3 2}\
.terminal{fill:#1f77b4}\
.wire{stroke:#2a2a2a;stroke-width:1.5;fill:none;stroke-linecap:square}\
.junction{fill:#2a2a2a}\
.label{font-family:monospace;font-size:10px;fill:#444444}\
.net-label{font-family:monospace;font-size:10px;fill:#2ca02c}";

/// Fixed one-decimal formatting, with negative zero folded to zero.
fn num(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Points where one net's wires meet with three or more branches.
pub fn junction_points(l: &SchematicLayout) -> Vec<(String, Point)> {
    let mut degree: BTreeMap<(&str, Point), BTreeSet<(Point, Point)>> = BTreeMap::new();
    for w in &l.wires {
        for (a, b) in w.unit_edges() {
            let e = if a <= b { (a, b) } else { (b, a) };
            degree.entry((w.net.as_str(), a)).or_default().insert(e);
            degree.entry((w.net.as_str(), b)).or_default().insert(e);
        }
    }
    degree
        .into_iter()
        .filter(|(_, edges)| edges.len() >= 3)
        .map(|((net, p), _)| (net.to_string(), p))
        .collect()
}

pub fn render_svg(l: &SchematicLayout, opts: &RenderOptions) -> Result<String, RenderError> {
    render_svg_with(l, opts, symbols::builtin())
}

pub fn render_svg_with(l: &SchematicLayout, opts: &RenderOptions, table: &SymbolTable) -> Result<String, RenderError> {
    if opts.unit_px < 4 {
        return Err(RenderError::UnitTooSmall(opts.unit_px));
    }
    for c in &l.components {
        table.require(c.kind)?;
    }
    let u = opts.unit_px as f64;
    let px = |v: f64| num(v * u);
    let (w, h) = (l.grid.width as f64 * u, l.grid.height as f64 * u);

    let mut warned: BTreeSet<&str> = BTreeSet::new();
    let violations = validate_structure(l);
    for v in &violations {
        match v {
            Violation::Overlap { a, b } => {
                warned.insert(a.as_str());
                warned.insert(b.as_str());
            }
            Violation::OutOfBounds { id } => {
                warned.insert(id.as_str());
            }
            _ => {}
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0.0 0.0 {} {}">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(s, "<style>{STYLE}</style>");
    let _ = writeln!(
        s,
        r#"<rect class="background" x="0.0" y="0.0" width="{}" height="{}"/>"#,
        num(w),
        num(h)
    );

    if opts.show_grid {
        s.push_str("<g class=\"grid\">\n");
        for x in 0..=l.grid.width {
            let _ = writeln!(
                s,
                r#"<line class="gridline" x1="{}" y1="0.0" x2="{}" y2="{}"/>"#,
                px(x as f64),
                px(x as f64),
                num(h)
            );
        }
        for y in 0..=l.grid.height {
            let _ = writeln!(
                s,
                r#"<line class="gridline" x1="0.0" y1="{}" x2="{}" y2="{}"/>"#,
                px(y as f64),
                num(w),
                px(y as f64)
            );
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g class=\"wires\">\n");
    for wire in &l.wires {
        let pts: Vec<String> = wire
            .points
            .iter()
            .map(|p| format!("{},{}", px(p.x as f64), px(p.y as f64)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="wire" data-net="{}" points="{}"/>"#,
            escape(&wire.net),
            pts.join(" ")
        );
    }
    for (net, p) in junction_points(l) {
        let _ = writeln!(
            s,
            r#"<circle class="junction" data-net="{}" cx="{}" cy="{}" r="{}"/>"#,
            escape(&net),
            px(p.x as f64),
            px(p.y as f64),
            num(0.4 * u)
        );
    }
    s.push_str("</g>\n");

    let mut ordered: Vec<&PlacedComponent> = l.components.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    for c in ordered {
        let sym = table.require(c.kind)?;
        let (sw, sh) = (sym.width as f64, sym.height as f64);
        let o = c.orientation;
        let at = |lx: f64, ly: f64| {
            let (dx, dy) = orient_f(lx, ly, sw, sh, o);
            ((c.x as f64 + dx) * u, (c.y as f64 + dy) * u)
        };
        let mut class = format!("component {}", c.kind.as_str().to_ascii_lowercase());
        if opts.highlight.contains(&c.id) {
            class.push_str(" accent");
        }
        if warned.contains(c.id.as_str()) {
            class.push_str(" warning");
        }
        let _ = writeln!(
            s,
            r#"<g id="{}" class="{}" data-kind="{}" data-x="{}" data-y="{}" data-rot="{}" data-mirror="{}">"#,
            escape(&c.id),
            class,
            c.kind.as_str(),
            c.x,
            c.y,
            o.rotation.degrees(),
            o.mirrored
        );
        for stroke in &sym.strokes {
            match *stroke {
                Stroke::Line([x1, y1, x2, y2]) => {
                    let (a, b) = at(x1, y1);
                    let (cx, cy) = at(x2, y2);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                        num(a),
                        num(b),
                        num(cx),
                        num(cy)
                    );
                }
                Stroke::Circle([cx, cy, r]) => {
                    let (a, b) = at(cx, cy);
                    let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="{}"/>"#, num(a), num(b), num(r * u));
                }
                Stroke::Arc([x1, y1, x2, y2, r]) => {
                    let (a, b) = at(x1, y1);
                    let (cx, cy) = at(x2, y2);
                    let sweep = if o.mirrored { 0 } else { 1 };
                    let _ = writeln!(
                        s,
                        r#"<path d="M {} {} A {} {} 0 0 {} {} {}"/>"#,
                        num(a),
                        num(b),
                        num(r * u),
                        num(r * u),
                        sweep,
                        num(cx),
                        num(cy)
                    );
                }
            }
        }
        for (&role, &(lu, lv)) in &sym.anchors {
            let (dx, dy) = symbols::orient_i(lu, lv, sym.width, sym.height, o);
            let (gx, gy) = (c.x + dx, c.y + dy);
            let _ = writeln!(
                s,
                r#"<circle class="terminal" data-terminal="{}:{}:{}:{}" cx="{}" cy="{}" r="{}"/>"#,
                escape(&c.id),
                role.as_str(),
                gx,
                gy,
                px(gx as f64),
                px(gy as f64),
                num(0.2 * u)
            );
        }
        if opts.show_labels {
            let b = c.bbox_for(sym);
            let _ = writeln!(
                s,
                r#"<text class="label" x="{}" y="{}">{}</text>"#,
                px(b.x0 as f64),
                px(b.y0 as f64 - 0.3),
                escape(&c.id)
            );
        }
        s.push_str("</g>\n");
    }

    if opts.show_labels {
        for label in &l.labels {
            let _ = writeln!(
                s,
                r#"<text class="net-label" x="{}" y="{}">{}</text>"#,
                px(label.x as f64),
                px(label.y as f64),
                escape(&label.net)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{Grid, Orientation, PlacedComponent, Rotation, WirePolyline};

    fn one_nmos() -> SchematicLayout {
        SchematicLayout {
            components: vec![PlacedComponent::new("M1", ComponentKind::Nmos, 0, 0)],
            ..Default::default()
        }
    }

    #[test]
    fn empty_layout_is_just_the_canvas() {
        let svg = render_svg(&SchematicLayout::empty(Grid::default()), &RenderOptions::default()).unwrap();
        assert!(svg.contains(r#"viewBox="0.0 0.0 640.0 640.0""#));
        assert!(svg.contains(r#"class="background""#));
        assert!(!svg.contains("<g id="));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn nmos_gate_marker_sits_at_scaled_anchor() {
        let svg = render_svg(&one_nmos(), &RenderOptions::default()).unwrap();
        assert!(svg.contains(r#"<g id="M1""#));
        assert!(svg.contains(r#"data-terminal="M1:GATE:0:3" cx="0.0" cy="30.0""#));
        assert!(svg.contains(r#"data-terminal="M1:DRAIN:4:0" cx="40.0" cy="0.0""#));
    }

    #[test]
    fn highlight_adds_accent_only_to_selected() {
        let mut l = one_nmos();
        l.components.push(
            PlacedComponent::new("M2", ComponentKind::Nmos, 20, 0)
                .with_orientation(Orientation::new(Rotation::R0, true)),
        );
        let opts = RenderOptions {
            highlight: ["M2".to_string()].into(),
            ..Default::default()
        };
        let svg = render_svg(&l, &opts).unwrap();
        assert!(svg.contains(r#"<g id="M2" class="component nmos accent""#));
        assert!(svg.contains(r#"<g id="M1" class="component nmos""#));
    }

    #[test]
    fn overlapping_symbols_get_warning_class() {
        let mut l = one_nmos();
        l.components.push(PlacedComponent::new("M2", ComponentKind::Nmos, 2, 2));
        let svg = render_svg(&l, &RenderOptions::default()).unwrap();
        assert!(svg.contains(r#"<g id="M1" class="component nmos warning""#));
    }

    #[test]
    fn junction_only_at_same_net_tee() {
        let mut l = SchematicLayout::empty(Grid::default());
        l.wires
            .push(WirePolyline::new("A", vec![Point::new(0, 5), Point::new(10, 5)]));
        l.wires
            .push(WirePolyline::new("A", vec![Point::new(5, 5), Point::new(5, 9)]));
        l.wires
            .push(WirePolyline::new("B", vec![Point::new(8, 0), Point::new(8, 9)]));
        assert_eq!(junction_points(&l), vec![("A".to_string(), Point::new(5, 5))]);
    }

    #[test]
    fn unit_px_floor() {
        let opts = RenderOptions {
            unit_px: 3,
            ..Default::default()
        };
        assert_eq!(render_svg(&one_nmos(), &opts), Err(RenderError::UnitTooSmall(3)));
    }

    #[test]
    fn rendering_is_repeatable() {
        let a = render_svg(&one_nmos(), &RenderOptions::default()).unwrap();
        let b = render_svg(&one_nmos(), &RenderOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("-0.0"));
    }
}
