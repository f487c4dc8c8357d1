//! Critique-and-revise loops around a multimodal backend.
//!
//! Each iteration renders the current layout, asks the backend whether it is
//! acceptable (DECIDE) and, if not, asks for a revised document (REVISE). The
//! placement loop re-wires every revision; the wiring loop only accepts wire
//! edits. The best layout seen is returned, so a loop never makes things
//! worse than its input.

mod http;
mod mock;
mod prompt;
mod transcript;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::eval::{evaluate, EvalReport};
use crate::netlist::Circuit;
use crate::placement::{read_layout, write_layout, SchematicLayout};
use crate::render::{render_svg, RenderOptions};
use crate::substructure::{detect, example_library, AssetError, SubstructureMatch};
use crate::wiring::wire_layout;

pub use http::{HttpBackend, API_KEY_ENV};
pub use mock::{apply_edit, Edit, MockBackend, ScriptStep, SEEDED_ACCEPT_PROB};
pub use prompt::{build_prompt, Attachment, Prompt, BAD_CAPTION, GOOD_CAPTION};
pub use transcript::{changed_components, verify_replay, IterationRecord, Outcome};

/// Re-prompts allowed when a revision cannot be used.
pub const REPAIR_BUDGET: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    Placement,
    Wiring,
}

impl Phase {
    pub fn dir_name(self) -> &'static str {
        match self {
            Phase::Placement => "placement",
            Phase::Wiring => "wiring",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Step {
    Decide,
    Revise,
}

impl Step {
    pub fn as_str(self) -> &'static str {
        match self {
            Step::Decide => "DECIDE",
            Step::Revise => "REVISE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Accept,
    Modify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LoopStatus {
    Accepted,
    BudgetExhausted,
    BackendError,
}

impl fmt::Display for LoopStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoopStatus::Accepted => "ACCEPTED",
            LoopStatus::BudgetExhausted => "BUDGET_EXHAUSTED",
            LoopStatus::BackendError => "BACKEND_ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http { url: String, model: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentConfig {
    pub max_place_iter: usize,
    pub max_wire_iter: usize,
    pub history_window: usize,
    pub backend: BackendKind,
    pub seed: u64,
    pub timeout_secs: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_place_iter: 10,
            max_wire_iter: 20,
            history_window: 3,
            backend: BackendKind::Mock,
            seed: 0,
            timeout_secs: 60,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.max_place_iter < 1 {
            return Err(AgentError::Config("max_place_iter must be at least 1".into()));
        }
        if self.max_wire_iter < 1 {
            return Err(AgentError::Config("max_wire_iter must be at least 1".into()));
        }
        if self.timeout_secs < 1 {
            return Err(AgentError::Config("timeout must be at least 1 second".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("{API_KEY_ENV} is not set")]
    MissingKey,
    #[error("mock script ran out of steps")]
    ScriptExhausted,
    #[error("unusable reply: {0}")]
    Protocol(String),
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Assets(#[from] AssetError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("replay mismatch: {0}")]
    Replay(String),
}

/// Anything that can answer prompts.
pub trait Backend {
    fn name(&self) -> &str;
    fn complete(&mut self, req: &BackendRequest, prompt: &Prompt) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleDigest {
    pub kind: String,
    pub title: String,
    pub description: String,
    pub netlist_text: String,
    /// Golden layout document.
    pub layout_json: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub image: String,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendRequest {
    pub phase: Phase,
    pub step: Step,
    pub iteration: usize,
    pub images: Vec<(String, String)>,
    pub layout: SchematicLayout,
    pub netlist_text: String,
    pub description_text: String,
    pub examples: Vec<ExampleDigest>,
    pub reference_good: Reference,
    pub reference_bad: Reference,
    pub history_digest: Vec<String>,
    pub eval_note: String,
    /// DECIDE reasoning, carried into REVISE.
    pub reasoning: Option<String>,
    /// Why the previous REVISE reply was rejected.
    pub repair_error: Option<String>,
}

/// Parsed backend reply.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendResponse {
    pub decision: Option<Decision>,
    pub reasoning: String,
    pub revised_layout: Option<SchematicLayout>,
}

/// Read a DECIDE reply: the first `DECISION:` line wins.
pub fn parse_decision(text: &str) -> Result<BackendResponse, BackendError> {
    for (i, line) in text.lines().enumerate() {
        let t = line.trim().trim_start_matches(['*', '#', ' ']);
        let Some(rest) = t
            .get(..9)
            .filter(|h| h.eq_ignore_ascii_case("DECISION:"))
            .map(|_| &t[9..])
        else {
            continue;
        };
        let word = rest.trim().trim_matches(|c: char| !c.is_ascii_alphabetic());
        let decision = if word.eq_ignore_ascii_case("ACCEPT") {
            Decision::Accept
        } else if word.eq_ignore_ascii_case("MODIFY") {
            Decision::Modify
        } else {
            return Err(BackendError::Protocol(format!("unknown decision {word:?}")));
        };
        let reasoning: Vec<&str> = text.lines().skip(i + 1).collect();
        return Ok(BackendResponse {
            decision: Some(decision),
            reasoning: reasoning.join("\n").trim().to_string(),
            revised_layout: None,
        });
    }
    Err(BackendError::Protocol("no DECISION line".into()))
}

/// Read a REVISE reply: the first fenced block (preferably tagged json) must
/// hold a layout document.
pub fn parse_revision(text: &str) -> Result<BackendResponse, String> {
    let mut blocks: Vec<(String, String)> = Vec::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let Some(tag) = line.trim_start().strip_prefix("```") else {
            continue;
        };
        let mut body = String::new();
        for l in lines.by_ref() {
            if l.trim_start().starts_with("```") {
                break;
            }
            body.push_str(l);
            body.push('\n');
        }
        blocks.push((tag.trim().to_ascii_lowercase(), body));
    }
    let body = blocks
        .iter()
        .find(|(tag, _)| tag == "json")
        .or_else(|| blocks.first())
        .map(|(_, b)| b.as_str())
        .ok_or_else(|| "reply has no fenced layout block".to_string())?;
    let (layout, warnings) = read_layout(body.as_bytes()).map_err(|e| e.to_string())?;
    for w in warnings {
        log::warn!("revision: {w}");
    }
    let reasoning = text.split("```").next().unwrap_or("").trim().to_string();
    Ok(BackendResponse {
        decision: None,
        reasoning,
        revised_layout: Some(layout),
    })
}

/// Static context shared by every request: examples and reference images.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptContext {
    pub examples: Vec<ExampleDigest>,
    pub reference_good: Reference,
    pub reference_bad: Reference,
}

const REFERENCE_GOOD: &str = include_str!("../../assets/references/good.layout.json");
const REFERENCE_BAD: &str = include_str!("../../assets/references/bad.layout.json");

impl PromptContext {
    pub fn bundled() -> Result<Self, AgentError> {
        let examples = example_library()?
            .into_iter()
            .map(|a| ExampleDigest {
                kind: a.kind.as_str().to_string(),
                title: a.kind.title().to_string(),
                description: a.description.clone(),
                netlist_text: a.netlist_text.clone(),
                layout_json: write_layout(&a.layout),
            })
            .collect();
        let reference = |doc: &str, caption: &str| -> Result<Reference, AgentError> {
            let (l, _) = read_layout(doc.as_bytes()).map_err(|e| AgentError::Config(e.to_string()))?;
            let image = render_svg(&l, &RenderOptions::default()).map_err(|e| AgentError::Config(e.to_string()))?;
            Ok(Reference {
                image,
                caption: caption.to_string(),
            })
        };
        Ok(PromptContext {
            examples,
            reference_good: reference(REFERENCE_GOOD, GOOD_CAPTION)?,
            reference_bad: reference(REFERENCE_BAD, BAD_CAPTION)?,
        })
    }
}

/// Complete record of one loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentTranscript {
    pub circuit: String,
    pub phase: Phase,
    pub status: LoopStatus,
    pub budget: usize,
    pub best_iteration: usize,
    pub records: Vec<IterationRecord>,
    pub error: Option<String>,
}

impl AgentTranscript {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// Everything a loop needs besides the backend.
pub struct Agent<'b> {
    pub config: AgentConfig,
    pub context: PromptContext,
    backend: &'b mut dyn Backend,
    out_dir: Option<PathBuf>,
}

fn circuit_notes(matches: &[SubstructureMatch]) -> String {
    let mut s = String::from("Recognised building blocks:");
    for m in matches {
        let members: Vec<String> = m.members.iter().map(|(d, r)| format!("{d} ({r:?})")).collect();
        s.push_str(&format!("\n- {}: {}", m.kind, members.join(", ")));
    }
    s
}

fn eval_note(r: &EvalReport) -> String {
    format!(
        "correct={} ({}), aesthetics composite {:.3}",
        r.correct,
        r.summary(),
        r.composite()
    )
}

/// Ordering of candidates: fewer violations, then higher composite, then later.
fn better(v: usize, comp: f64, best_v: usize, best_comp: f64) -> bool {
    v < best_v || (v == best_v && comp >= best_comp)
}

impl<'b> Agent<'b> {
    pub fn new(
        config: AgentConfig,
        backend: &'b mut dyn Backend,
        out_dir: Option<PathBuf>,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        Ok(Agent {
            config,
            context: PromptContext::bundled()?,
            backend,
            out_dir,
        })
    }

    pub fn run_placement_loop(
        &mut self,
        name: &str,
        c: &Circuit,
        layout: &SchematicLayout,
    ) -> Result<(SchematicLayout, AgentTranscript), AgentError> {
        self.run_loop(Phase::Placement, name, c, layout)
    }

    pub fn run_wiring_loop(
        &mut self,
        name: &str,
        c: &Circuit,
        layout: &SchematicLayout,
    ) -> Result<(SchematicLayout, AgentTranscript), AgentError> {
        self.run_loop(Phase::Wiring, name, c, layout)
    }

    fn phase_dir(&self, name: &str, phase: Phase) -> Option<PathBuf> {
        self.out_dir
            .as_ref()
            .map(|d| d.join("run").join(name).join(phase.dir_name()))
    }

    #[allow(clippy::too_many_arguments)]
    fn request(
        &self,
        phase: Phase,
        step: Step,
        iteration: usize,
        c: &Circuit,
        matches: &[SubstructureMatch],
        layout: &SchematicLayout,
        image: &str,
        history: &[String],
        eval: &EvalReport,
    ) -> BackendRequest {
        let k = self.config.history_window;
        BackendRequest {
            phase,
            step,
            iteration,
            images: vec![("current".to_string(), image.to_string())],
            layout: layout.clone(),
            netlist_text: c.to_netlist_text(),
            description_text: circuit_notes(matches),
            examples: self.context.examples.clone(),
            reference_good: self.context.reference_good.clone(),
            reference_bad: self.context.reference_bad.clone(),
            history_digest: history[history.len().saturating_sub(k)..].to_vec(),
            eval_note: eval_note(eval),
            reasoning: None,
            repair_error: None,
        }
    }

    /// Turn a usable revision into the next candidate, or explain the refusal.
    fn admit(
        &self,
        phase: Phase,
        c: &Circuit,
        current: &SchematicLayout,
        revised: SchematicLayout,
    ) -> Result<SchematicLayout, String> {
        match phase {
            Phase::Placement => {
                let mut placed = revised;
                placed.wires.clear();
                if placed.grid != current.grid {
                    return Err("the grid size may not change".into());
                }
                wire_layout(c, &placed).map(|(l, _)| l).map_err(|e| e.to_string())
            }
            Phase::Wiring => {
                let mut a = current.components.clone();
                let mut b = revised.components.clone();
                a.sort_by(|x, y| x.id.cmp(&y.id));
                b.sort_by(|x, y| x.id.cmp(&y.id));
                if a != b || revised.grid != current.grid {
                    return Err("components may not change during the wiring phase".into());
                }
                Ok(SchematicLayout {
                    components: current.components.clone(),
                    ..revised
                })
            }
        }
    }

    fn run_loop(
        &mut self,
        phase: Phase,
        name: &str,
        c: &Circuit,
        initial: &SchematicLayout,
    ) -> Result<(SchematicLayout, AgentTranscript), AgentError> {
        let budget = match phase {
            Phase::Placement => self.config.max_place_iter,
            Phase::Wiring => self.config.max_wire_iter,
        };
        let matches = detect(c);
        let dir = self.phase_dir(name, phase);
        if let Some(d) = &dir {
            transcript::prepare_dir(d)?;
        }

        let mut current = initial.clone();
        let mut current_eval = evaluate(&current, c, &matches);
        let mut image = transcript::snapshot(dir.as_deref(), 0, None, &current)?;
        let mut best = (
            current.clone(),
            current_eval.violation_count(),
            current_eval.composite(),
            0usize,
        );
        let mut history: Vec<String> = Vec::new();
        let mut records: Vec<IterationRecord> = Vec::new();
        let mut status = LoopStatus::BudgetExhausted;
        let mut error = None;

        for i in 1..=budget {
            let previous = current.clone();
            let mut responses = String::new();
            let req = self.request(
                phase,
                Step::Decide,
                i,
                c,
                &matches,
                &current,
                &image,
                &history,
                &current_eval,
            );
            let prompt = build_prompt(&req);
            let digest = prompt.digest();
            let reply = self.backend.complete(&req, &prompt);
            let (outcome, decision) = match reply.and_then(|t| {
                transcript::append_response(&mut responses, Step::Decide, 0, &t);
                parse_decision(&t)
            }) {
                Err(e) => {
                    error = Some(e.to_string());
                    (Outcome::BackendError { message: e.to_string() }, None)
                }
                Ok(r) if r.decision == Some(Decision::Accept) => (Outcome::Accepted, r.decision),
                Ok(r) => {
                    let mut repair_error: Option<String> = None;
                    let mut result = None;
                    for attempt in 0..=REPAIR_BUDGET {
                        let mut rreq = self.request(
                            phase,
                            Step::Revise,
                            i,
                            c,
                            &matches,
                            &current,
                            &image,
                            &history,
                            &current_eval,
                        );
                        rreq.reasoning = Some(r.reasoning.clone());
                        rreq.repair_error = repair_error.clone();
                        let rprompt = build_prompt(&rreq);
                        match self.backend.complete(&rreq, &rprompt) {
                            Err(e) => {
                                error = Some(e.to_string());
                                result = Some(Outcome::BackendError { message: e.to_string() });
                                break;
                            }
                            Ok(text) => {
                                transcript::append_response(&mut responses, Step::Revise, attempt, &text);
                                let admitted = parse_revision(&text).and_then(|resp| {
                                    self.admit(
                                        phase,
                                        c,
                                        &current,
                                        resp.revised_layout.expect("revision carries a layout"),
                                    )
                                });
                                match admitted {
                                    Ok(next) => {
                                        current_eval = evaluate(&next, c, &matches);
                                        current = next;
                                        result = Some(Outcome::Revised);
                                        break;
                                    }
                                    Err(e) => repair_error = Some(e),
                                }
                            }
                        }
                    }
                    let outcome = result.unwrap_or(Outcome::Discarded {
                        reason: repair_error.unwrap_or_default(),
                    });
                    (outcome, r.decision)
                }
            };

            if outcome == Outcome::Revised {
                let (v, comp) = (current_eval.violation_count(), current_eval.composite());
                if better(v, comp, best.1, best.2) {
                    best = (current.clone(), v, comp, i);
                }
            }
            image = transcript::snapshot(dir.as_deref(), i, Some(&previous), &current)?;
            if let Some(d) = &dir {
                transcript::write_text(&d.join(format!("iter_{i:02}.response.txt")), &responses)?;
            }
            history.push(format!(
                "iteration {i}: {} -> {}; {}",
                decision
                    .map(|d| format!("{d:?}").to_uppercase())
                    .unwrap_or_else(|| "NONE".into()),
                outcome.label(),
                eval_note(&current_eval)
            ));
            records.push(IterationRecord {
                phase,
                index: i,
                request_digest: digest,
                decision,
                outcome: outcome.clone(),
                response: responses,
                layout_path: format!("iter_{i:02}.layout.json"),
                image_path: format!("iter_{i:02}.svg"),
                correct: current_eval.correct,
                violations: current_eval.violation_count(),
                composite: current_eval.composite(),
            });
            match outcome {
                Outcome::Accepted => {
                    status = LoopStatus::Accepted;
                    break;
                }
                Outcome::BackendError { .. } => {
                    status = LoopStatus::BackendError;
                    break;
                }
                _ => {}
            }
        }

        let t = AgentTranscript {
            circuit: name.to_string(),
            phase,
            status,
            budget,
            best_iteration: best.3,
            records,
            error,
        };
        if let Some(d) = &dir {
            let summary = serde_json::json!({
                "backend": self.backend.name(),
                "config": self.config,
                "transcript": t,
            });
            transcript::write_text(
                &d.join("summary.json"),
                &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"),
            )?;
        }
        Ok((best.0, t))
    }
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub layout: SchematicLayout,
    pub svg: String,
    pub report: EvalReport,
    pub routing: crate::wiring::RoutingReport,
    pub placement: Option<AgentTranscript>,
    pub wiring: Option<AgentTranscript>,
}

impl PipelineOutcome {
    pub fn backend_failed(&self) -> bool {
        [&self.placement, &self.wiring]
            .into_iter()
            .flatten()
            .any(|t| t.status == LoopStatus::BackendError)
    }

    pub fn iterations(&self) -> (usize, usize) {
        (
            self.placement.as_ref().map_or(0, |t| t.iterations()),
            self.wiring.as_ref().map_or(0, |t| t.iterations()),
        )
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Placement(#[from] crate::placement::PlacementError),
    #[error(transparent)]
    Wiring(#[from] crate::wiring::WiringError),
    #[error(transparent)]
    Render(#[from] crate::render::RenderError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Detect, place, wire and, with a backend, refine placement then wiring.
pub fn run_pipeline(
    name: &str,
    c: &Circuit,
    config: &AgentConfig,
    backend: Option<&mut dyn Backend>,
    out_dir: Option<&Path>,
) -> Result<PipelineOutcome, PipelineError> {
    let matches = detect(c);
    let placed = crate::placement::initial_place(c, &matches)?;
    let (mut layout, mut routing) = wire_layout(c, &placed)?;
    let (mut placement, mut wiring) = (None, None);
    if let Some(backend) = backend {
        let mut agent = Agent::new(config.clone(), backend, out_dir.map(Path::to_path_buf))?;
        let (l, t) = agent.run_placement_loop(name, c, &layout)?;
        let failed = t.status == LoopStatus::BackendError;
        placement = Some(t);
        layout = l;
        if !failed {
            let (l, t) = agent.run_wiring_loop(name, c, &layout)?;
            wiring = Some(t);
            layout = l;
        }
        // routing report for the placement actually returned
        let placed_only = SchematicLayout {
            wires: Vec::new(),
            ..layout.clone()
        };
        routing = wire_layout(c, &placed_only)?.1;
    }
    let report = evaluate(&layout, c, &matches);
    let svg = render_svg(&layout, &RenderOptions::default())?;
    Ok(PipelineOutcome {
        layout,
        svg,
        report,
        routing,
        placement,
        wiring,
    })
}

/// Components whose placement differs between two layouts.
pub fn highlight_set(before: &SchematicLayout, after: &SchematicLayout) -> BTreeSet<String> {
    changed_components(before, after)
}
