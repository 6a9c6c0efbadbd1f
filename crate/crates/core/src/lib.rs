//! Ground states of the bond-alternating Heisenberg chain, their compilation
//! into brickwork circuits, and the diagnostics used to certify
//! symmetry-protected topological order on the prepared states.

pub mod aqc;
pub mod circuit;
pub mod dmrg;
pub mod error;
pub mod fit;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod mps;
pub mod noisy;

pub use error::{Error, Result};
pub use noisy::subseed;
