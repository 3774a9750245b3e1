//! Production-rule gate netlists: parsing, event-driven simulation with
//! hazard detection, the arbiter-guard timing check, and conformance
//! against the handshaking-level server.

mod analysis;
mod netlist;
mod sim;

pub use analysis::*;
pub use netlist::{
    builtin_asym_netlist, builtin_asym_source, is_channel_wire, parse_prs, ArbiterInstance, Netlist, ProductionRule,
    PrsError, DEFAULT_ARBITER_DELAY, DEFAULT_GATE_DELAY, DEFAULT_RESOLUTION_DELAY,
};
pub use sim::{quiescent_state, reset_state, simulate, simulate_with, Hazard, HazardKind, PrsRun, SimError};
