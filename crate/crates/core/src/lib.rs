//! Logic encryption for combinational gate-level netlists.

pub mod aes;
pub mod attack;
pub mod corrector;
pub mod encryptor;
pub mod error;
pub mod flow;
pub mod integrator;
pub mod netlist;
pub mod nandnor;
pub mod optimizer;
pub mod verifier;

pub use error::{Error, Result};
pub use netlist::{CircuitStats, Gate, GateKind, NetId, Netlist, NetlistBuilder, NetlistParts};
