//! Simulation of two trapped ions with a three-level internal structure
//! (`|a⟩`, `|↓⟩`, `|↑⟩`) coupled through a shared motional mode, where a
//! continuous rf field dresses the `|↓⟩ ↔ |↑⟩` qubit and a bichromatic
//! sideband drive on `|a⟩ ↔ |↓⟩` entangles the ions inside the dressed
//! dark space.
//!
//! Units: ħ = 1, angular frequencies in rad/s, times in s.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod scenario;

pub use error::{Error, Result};
