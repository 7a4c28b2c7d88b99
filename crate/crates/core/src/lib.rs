//! Simulation and analysis of memory-assisted quantum sensing on the NV
//! electron / 14N nuclear spin pair: MCS, CS and QDyne protocols.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod metrics;
pub mod protocol;
pub mod pulse_gates;
pub mod quantum;
pub mod readout;
pub mod rng;
pub mod runner;
pub mod signal_model;
pub mod spin_system;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use protocol::{Engine, Protocol, ProtocolConfig};
pub use readout::{NoiseMode, ReadoutParams, TimeTrace};
pub use runner::{compare_protocols, run_scenario, simulate_trace};
pub use spin_system::SpinSystemParams;
