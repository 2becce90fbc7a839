//! Unsteady channel flow of the regularized, cut-off problem on a staggered
//! grid, with energy ledger and consistency diagnostics.

pub mod config;
pub mod cutoff;
pub mod diagnostics;
pub mod grid;
pub mod ledger;
pub mod output;
pub mod projection;
pub mod secant;
pub mod solver;

pub use config::{Linearization, SimConfig, V0Kind};
pub use cutoff::cutoff;
pub use grid::Grid;
pub use ledger::{EnergyLedger, LedgerRow};
pub use solver::{FlowSolver, FlowState, StepRecord};
