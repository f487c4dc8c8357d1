//! Compile SPICE netlists into analog schematic drawings: parse, recognise
//! building blocks, place on a grid, route, render to SVG, score, and refine
//! through a critique loop driven by a pluggable multimodal backend.

pub mod agent;
pub mod eval;
pub mod netlist;
pub mod placement;
pub mod render;
pub mod substructure;
pub mod wiring;
