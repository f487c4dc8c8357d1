//! Offline stand-in for a multimodal model: scripted or seeded replies in the
//! same text format a real backend must produce.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::placement::{port_net, write_layout, SchematicLayout};

use super::{Backend, BackendError, BackendRequest, Phase, Prompt, Step};

/// Change applied to the request's layout when revising.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    /// Return the layout unchanged.
    Keep,
    /// Move one component, clamped so its box stays on the grid.
    Nudge { id: String, dx: i32, dy: i32 },
    /// Reverse the point order of one wire (geometry unchanged).
    ReverseWire(usize),
    /// Drop one wire.
    DropWire(usize),
    /// Reply with this exact document.
    Replace(SchematicLayout),
    /// Reply with this exact text, usable or not.
    Raw(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStep {
    Accept,
    Modify(Edit),
}

#[derive(Debug, Clone)]
enum Mode {
    Script(VecDeque<ScriptStep>),
    Random { rng: Box<ChaCha8Rng>, accept_prob: f64 },
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    mode: Mode,
    pending: Edit,
    pub calls: usize,
}

/// Chance that the seeded mock accepts at a DECIDE step.
pub const SEEDED_ACCEPT_PROB: f64 = 0.3;

impl MockBackend {
    pub fn scripted(steps: impl IntoIterator<Item = ScriptStep>) -> Self {
        Self::with_mode(Mode::Script(steps.into_iter().collect()))
    }

    /// Pseudo-random decisions and legal edits derived from `seed`.
    pub fn seeded(seed: u64) -> Self {
        Self::with_accept_prob(seed, SEEDED_ACCEPT_PROB)
    }

    pub fn always_accept() -> Self {
        Self::with_accept_prob(0, 1.0)
    }

    pub fn never_accept(seed: u64) -> Self {
        Self::with_accept_prob(seed, 0.0)
    }

    pub fn with_accept_prob(seed: u64, accept_prob: f64) -> Self {
        Self::with_mode(Mode::Random {
            rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
            accept_prob,
        })
    }

    fn with_mode(mode: Mode) -> Self {
        MockBackend {
            mode,
            pending: Edit::Keep,
            calls: 0,
        }
    }

    fn random_edit(rng: &mut ChaCha8Rng, phase: Phase, l: &SchematicLayout) -> Edit {
        match phase {
            Phase::Placement => {
                let movable: Vec<&str> = l
                    .components
                    .iter()
                    .filter(|c| port_net(&c.id).is_none())
                    .map(|c| c.id.as_str())
                    .collect();
                if movable.is_empty() {
                    return Edit::Keep;
                }
                let id = movable[rng.gen_range(0..movable.len())].to_string();
                let (mut dx, mut dy) = (0, 0);
                while dx == 0 && dy == 0 {
                    dx = rng.gen_range(-2..=2);
                    dy = rng.gen_range(-2..=2);
                }
                Edit::Nudge { id, dx, dy }
            }
            Phase::Wiring => {
                if l.wires.is_empty() {
                    return Edit::Keep;
                }
                let i = rng.gen_range(0..l.wires.len());
                if rng.gen_bool(0.75) {
                    Edit::ReverseWire(i)
                } else {
                    Edit::DropWire(i)
                }
            }
        }
    }
}

fn describe(e: &Edit) -> String {
    match e {
        Edit::Keep => "The drawing can be tidied but no concrete change is proposed.".into(),
        Edit::Nudge { id, dx, dy } => format!("Shift {id} by ({dx}, {dy}) to improve spacing and alignment."),
        Edit::ReverseWire(i) => format!("Redraw wire {i} starting from its other end."),
        Edit::DropWire(i) => format!("Wire {i} looks redundant and should be removed."),
        Edit::Replace(_) => "Replace the layout with a reworked arrangement.".into(),
        Edit::Raw(_) => "Rework the layout.".into(),
    }
}

/// Apply an edit; nudges are clamped so the moved box stays on the grid.
pub fn apply_edit(e: &Edit, l: &SchematicLayout) -> SchematicLayout {
    let mut out = l.clone();
    match e {
        Edit::Keep | Edit::Raw(_) => {}
        Edit::Replace(r) => out = r.clone(),
        Edit::Nudge { id, dx, dy } => {
            let grid = out.grid;
            if let Some(c) = out.component_mut(id) {
                let b = c.bbox();
                let (w, h) = (b.width(), b.height());
                c.x = (c.x + dx).clamp(0, (grid.width - w).max(0));
                c.y = (c.y + dy).clamp(0, (grid.height - h).max(0));
            }
        }
        Edit::ReverseWire(i) => {
            if let Some(w) = out.wires.get_mut(*i) {
                w.points.reverse();
            }
        }
        Edit::DropWire(i) => {
            if *i < out.wires.len() {
                out.wires.remove(*i);
            }
        }
    }
    out
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        match self.mode {
            Mode::Script(_) => "mock-script",
            Mode::Random { .. } => "mock-seeded",
        }
    }

    fn complete(&mut self, req: &BackendRequest, _prompt: &Prompt) -> Result<String, BackendError> {
        self.calls += 1;
        match req.step {
            Step::Decide => {
                let step = match &mut self.mode {
                    Mode::Script(steps) => steps.pop_front().ok_or(BackendError::ScriptExhausted)?,
                    Mode::Random { rng, accept_prob } => {
                        if rng.gen_bool(accept_prob.clamp(0.0, 1.0)) {
                            ScriptStep::Accept
                        } else {
                            ScriptStep::Modify(Self::random_edit(rng, req.phase, &req.layout))
                        }
                    }
                };
                Ok(match step {
                    ScriptStep::Accept => {
                        "DECISION: ACCEPT\nThe schematic matches the preferred reference closely enough.\n".to_string()
                    }
                    ScriptStep::Modify(edit) => {
                        let text = format!("DECISION: MODIFY\n{}\n", describe(&edit));
                        self.pending = edit;
                        text
                    }
                })
            }
            Step::Revise => {
                if let Edit::Raw(text) = &self.pending {
                    return Ok(text.clone());
                }
                let revised = apply_edit(&self.pending, &req.layout);
                Ok(format!(
                    "Revised layout follows.\n```json\n{}```\n",
                    write_layout(&revised)
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{ComponentKind, PlacedComponent};

    #[test]
    fn nudge_clamps_to_grid() {
        let mut l = SchematicLayout::default();
        l.components
            .push(PlacedComponent::new("M1", ComponentKind::Nmos, 1, 59));
        let out = apply_edit(
            &Edit::Nudge {
                id: "M1".into(),
                dx: -5,
                dy: 5,
            },
            &l,
        );
        let c = out.component("M1").unwrap();
        assert_eq!((c.x, c.y), (0, 58));
    }

    #[test]
    fn random_edits_are_repeatable() {
        let mut l = SchematicLayout::default();
        l.components
            .push(PlacedComponent::new("M1", ComponentKind::Nmos, 10, 10));
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            assert_eq!(
                MockBackend::random_edit(&mut a, Phase::Placement, &l),
                MockBackend::random_edit(&mut b, Phase::Placement, &l)
            );
        }
    }
}
