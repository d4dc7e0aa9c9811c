//! Cost-share equilibria, cores and their equivalence in public-project
//! economies.

pub mod blocking;
pub mod catalog;
pub mod cli;
pub mod continuum;
pub mod economy;
pub mod equilibrium;
pub mod harness;
pub mod io;
pub mod perturbation;
pub mod error;
pub mod preferences;
pub mod replica;
pub mod vecops;

pub use economy::{Allocation, Coalition, CostScheme, Economy, SolverConfig};
pub use error::{Error, Result};
