//! Prompt templates. Expansion is a pure function of the request.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{BackendRequest, Phase, Step};

pub const GOOD_CAPTION: &str =
    "Reference A, a layout to emulate: matched devices mirrored about the centre, supplies on top and bottom rows, short orthogonal wires.";
pub const BAD_CAPTION: &str =
    "Reference B, a layout to avoid: devices scattered off their rows, pairs broken up, wires that wander and cross.";

/// One file handed to the backend alongside the prompt text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub name: String,
    pub mime: &'static str,
    pub content: String,
}

impl Attachment {
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.content.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub attachments: Vec<Attachment>,
}

impl Prompt {
    /// Attachment manifest: one `name mime bytes sha256` line per file.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        for a in &self.attachments {
            let _ = writeln!(s, "{} {} {} {}", a.name, a.mime, a.content.len(), a.sha256());
        }
        s
    }

    /// Stable digest of everything sent.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.text.as_bytes());
        h.update(b"\0");
        h.update(self.manifest().as_bytes());
        hex::encode(h.finalize())
    }
}

const SVG: &str = "image/svg+xml";

pub fn build_prompt(req: &BackendRequest) -> Prompt {
    let mut t = String::new();
    let phase = match req.phase {
        Phase::Placement => "placement",
        Phase::Wiring => "wiring",
    };
    let _ = writeln!(t, "# Schematic {phase} review, step {}", req.step.as_str());
    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "You are refining an analog schematic drawn on an integer grid. Symbols are placed by their top-left corner; \
         \"rot\" is a clockwise quarter-turn count in degrees and \"mirror\" flips the symbol horizontally before rotation."
    );
    match req.phase {
        Phase::Placement => {
            let _ = writeln!(
                t,
                "In this phase you may move, rotate or mirror components. Wires are regenerated automatically after every revision."
            );
        }
        Phase::Wiring => {
            let _ = writeln!(
                t,
                "In this phase components are fixed. You may only change the \"wires\" array; any change to components is rejected."
            );
        }
    }
    let _ = writeln!(t);
    let _ = writeln!(t, "## Circuit netlist\n```spice\n{}\n```", req.netlist_text.trim_end());
    let _ = writeln!(t, "\n## Circuit notes\n{}", req.description_text.trim_end());

    let _ = writeln!(t, "\n## Building-block examples");
    for (i, ex) in req.examples.iter().enumerate() {
        let _ = writeln!(t, "\n### Example {}: {} ({})", i + 1, ex.title, ex.kind);
        let _ = writeln!(t, "{}", ex.description.trim_end());
        let _ = writeln!(t, "```spice\n{}\n```", ex.netlist_text.trim_end());
        let _ = writeln!(t, "Layout:\n```json\n{}```", ex.layout_json);
    }

    let _ = writeln!(t, "\n## Reference images");
    let _ = writeln!(t, "- [reference_good] {}", req.reference_good.caption);
    let _ = writeln!(t, "- [reference_bad] {}", req.reference_bad.caption);

    let _ = writeln!(t, "\n## History");
    if req.history_digest.is_empty() {
        let _ = writeln!(t, "(first iteration)");
    }
    for h in &req.history_digest {
        let _ = writeln!(t, "- {h}");
    }

    let _ = writeln!(
        t,
        "\n## Current layout\n```json\n{}```",
        crate::placement::write_layout(&req.layout)
    );
    let _ = writeln!(t, "Current evaluation: {}", req.eval_note);

    match req.step {
        Step::Decide => {
            let _ = writeln!(
                t,
                "\n## Task\nCompare the current image with the references and examples. Answer with a first line \
                 `DECISION: ACCEPT` if no change is needed or `DECISION: MODIFY` otherwise, then explain what should change."
            );
        }
        Step::Revise => {
            let _ = writeln!(
                t,
                "\n## Your assessment\n{}",
                req.reasoning.as_deref().unwrap_or("").trim_end()
            );
            let _ = writeln!(
                t,
                "\n## Task\nApply the changes you described. Reply with the complete revised layout document in a single \
                 ```json fenced block."
            );
            if let Some(err) = &req.repair_error {
                let _ = writeln!(
                    t,
                    "\nYour previous reply could not be used: {err}\nSend the corrected document."
                );
            }
        }
    }

    let mut attachments = Vec::new();
    for (label, svg) in &req.images {
        attachments.push(Attachment {
            name: format!("{label}.svg"),
            mime: SVG,
            content: svg.clone(),
        });
    }
    attachments.push(Attachment {
        name: "reference_good.svg".into(),
        mime: SVG,
        content: req.reference_good.image.clone(),
    });
    attachments.push(Attachment {
        name: "reference_bad.svg".into(),
        mime: SVG,
        content: req.reference_bad.image.clone(),
    });
    Prompt { text: t, attachments }
}
