//! Bundled few-shot examples, one per substructure kind.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::eval::check_correctness;
use crate::netlist::{parse_netlist, Circuit};
use crate::placement::{port_net, read_layout, SchematicLayout};
use crate::render::{render_svg, RenderOptions};

use super::SubstructureKind;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("example asset {kind} is corrupt: {reason}")]
    Corrupt { kind: SubstructureKind, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleAsset {
    pub kind: SubstructureKind,
    pub netlist_text: String,
    pub description: String,
    pub layout: SchematicLayout,
}

impl ExampleAsset {
    pub fn circuit(&self) -> Circuit {
        parse_netlist(&self.netlist_text).expect("asset netlist was validated at load")
    }
}

macro_rules! bundled {
    ($dir:literal) => {
        (
            include_str!(concat!("../../assets/examples/", $dir, "/example.sp")),
            include_str!(concat!("../../assets/examples/", $dir, "/description.txt")),
            include_str!(concat!("../../assets/examples/", $dir, "/layout.json")),
        )
    };
}

fn bundled_text(kind: SubstructureKind) -> (&'static str, &'static str, &'static str) {
    match kind {
        SubstructureKind::SingleCascode => bundled!("SINGLE_CASCODE"),
        SubstructureKind::SingleCurrentSource => bundled!("SINGLE_CURRENT_SOURCE"),
        SubstructureKind::DiodeConnected => bundled!("DIODE_CONNECTED"),
        SubstructureKind::TwoTransistorCascode => bundled!("TWO_TRANSISTOR_CASCODE"),
        SubstructureKind::DifferentialPair => bundled!("DIFFERENTIAL_PAIR"),
        SubstructureKind::CurrentMirror => bundled!("CURRENT_MIRROR"),
    }
}

/// The six bundled examples in catalogue order, each self-checked.
pub fn example_library() -> Result<Vec<ExampleAsset>, AssetError> {
    SubstructureKind::ALL
        .into_iter()
        .map(|kind| {
            let (sp, desc, layout) = bundled_text(kind);
            build(kind, sp, desc, layout.as_bytes())
        })
        .collect()
}

/// Load an asset bundle laid out as `<dir>/<KIND>/{example.sp,description.txt,layout.json}`.
pub fn load_library_from(dir: &Path) -> Result<Vec<ExampleAsset>, AssetError> {
    let read = |p: &Path| {
        std::fs::read(p).map_err(|source| AssetError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    SubstructureKind::ALL
        .into_iter()
        .map(|kind| {
            let sub = dir.join(kind.as_str());
            let sp = String::from_utf8_lossy(&read(&sub.join("example.sp"))?).into_owned();
            let desc = String::from_utf8_lossy(&read(&sub.join("description.txt"))?).into_owned();
            let layout = read(&sub.join("layout.json"))?;
            build(kind, &sp, &desc, &layout)
        })
        .collect()
}

fn build(kind: SubstructureKind, sp: &str, desc: &str, layout: &[u8]) -> Result<ExampleAsset, AssetError> {
    let corrupt = |reason: String| AssetError::Corrupt { kind, reason };
    let c = parse_netlist(sp).map_err(|e| corrupt(e.to_string()))?;
    let (l, _) = read_layout(layout).map_err(|e| corrupt(e.to_string()))?;
    let devices: BTreeSet<&str> = c.devices.iter().map(|d| d.name.as_str()).collect();
    let placed: BTreeSet<&str> = l
        .components
        .iter()
        .filter(|p| port_net(&p.id).is_none())
        .map(|p| p.id.as_str())
        .collect();
    if devices != placed {
        return Err(corrupt("layout and netlist list different devices".into()));
    }
    render_svg(&l, &RenderOptions::default()).map_err(|e| corrupt(e.to_string()))?;
    let report = check_correctness(&l, &c);
    if !report.correct {
        return Err(corrupt(format!(
            "layout fails the correctness check: {}",
            report.summary()
        )));
    }
    Ok(ExampleAsset {
        kind,
        netlist_text: sp.to_string(),
        description: desc.trim_end().to_string(),
        layout: l,
    })
}
