//! Transcript files: per-iteration layout snapshots, images and raw replies.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::placement::{read_layout, write_layout, SchematicLayout};
use crate::render::{render_svg, RenderOptions};

use super::{AgentError, Decision, Phase, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Revised,
    Discarded { reason: String },
    BackendError { message: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Accepted => "accepted",
            Outcome::Revised => "revised",
            Outcome::Discarded { .. } => "discarded",
            Outcome::BackendError { .. } => "backend error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub phase: Phase,
    pub index: usize,
    /// sha256 of the DECIDE prompt and its attachment manifest.
    pub request_digest: String,
    pub decision: Option<Decision>,
    pub outcome: Outcome,
    pub response: String,
    pub layout_path: String,
    pub image_path: String,
    pub correct: bool,
    pub violations: usize,
    pub composite: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AgentError + '_ {
    move |source| AgentError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn prepare_dir(dir: &Path) -> Result<(), AgentError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), AgentError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn append_response(buf: &mut String, step: Step, attempt: usize, text: &str) {
    let _ = writeln!(buf, "--- {} {}", step.as_str(), attempt);
    buf.push_str(text);
    if !text.ends_with('\n') {
        buf.push('\n');
    }
}

/// Components that are new or moved, rotated or re-kinded since `before`.
pub fn changed_components(before: &SchematicLayout, after: &SchematicLayout) -> BTreeSet<String> {
    after
        .components
        .iter()
        .filter(|c| before.component(&c.id) != Some(*c))
        .map(|c| c.id.clone())
        .collect()
}

fn image_for(previous: Option<&SchematicLayout>, current: &SchematicLayout) -> Result<String, AgentError> {
    let opts = RenderOptions {
        highlight: previous.map(|p| changed_components(p, current)).unwrap_or_default(),
        ..Default::default()
    };
    render_svg(current, &opts).map_err(|e| AgentError::Replay(e.to_string()))
}

/// Render the end-of-iteration layout (changes since `previous` highlighted)
/// and, when a directory is given, store both the document and the image.
pub(crate) fn snapshot(
    dir: Option<&Path>,
    index: usize,
    previous: Option<&SchematicLayout>,
    current: &SchematicLayout,
) -> Result<String, AgentError> {
    let svg = image_for(previous, current)?;
    if let Some(d) = dir {
        write_text(&d.join(format!("iter_{index:02}.layout.json")), &write_layout(current))?;
        write_text(&d.join(format!("iter_{index:02}.svg")), &svg)?;
    }
    Ok(svg)
}

/// Re-render every stored snapshot and compare with the stored image bytes.
/// Returns the number of images checked.
pub fn verify_replay(dir: &Path) -> Result<usize, AgentError> {
    let mut previous: Option<SchematicLayout> = None;
    let mut checked = 0;
    loop {
        let doc = dir.join(format!("iter_{checked:02}.layout.json"));
        if !doc.exists() {
            break;
        }
        let bytes = std::fs::read(&doc).map_err(io_err(&doc))?;
        let (layout, _) = read_layout(&bytes).map_err(|e| AgentError::Replay(format!("{}: {e}", doc.display())))?;
        let img = dir.join(format!("iter_{checked:02}.svg"));
        let stored = std::fs::read_to_string(&img).map_err(io_err(&img))?;
        if image_for(previous.as_ref(), &layout)? != stored {
            return Err(AgentError::Replay(format!(
                "{} differs from its re-render",
                img.display()
            )));
        }
        previous = Some(layout);
        checked += 1;
    }
    if checked == 0 {
        return Err(AgentError::Replay(format!("no snapshots in {}", dir.display())));
    }
    Ok(checked)
}
