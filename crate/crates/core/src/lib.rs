//! Continuous-variable quantum-optics simulator in a truncated Fock basis.
//!
//! Covers two-mode squeezed vacuum resources, entanglement-breaking and pure-loss
//! eavesdropper channels, Braunstein-Kimble teleportation of cat and GKP states,
//! Wigner negativity, rate formulas, and a logical GKP Bell test.

// `!(x >= 0.0)` guards deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacities;
pub mod channels;
pub mod cli;
pub mod error;
pub mod fock;
pub mod gkp_logic;
pub mod metrics;
pub mod states;
pub mod teleport;

pub use error::{Error, Result};
