//! Simulation and verification toolkit for opportunistic two-client
//! mutual exclusion servers.

pub mod cli;
pub mod hse;
pub mod prs;
pub mod servers;
pub mod sim;
pub mod timing;
pub mod verify;
