//! Discrete-time simulation and optimization of virtual machine placement in
//! a cloud datacenter.
//!
//! - [`model`]: PMs, VMs, placements and the mutable datacenter state.
//! - [`objectives`]: objective functions, normalization and scalarization.
//! - [`heuristics`]: online First/Best/Worst Fit and their decreasing variants.
//! - [`memetic`]: whole-placement search with repair and local search.
//! - [`sim`]: the step loop, with optional periodic reconfiguration.
//! - [`trace`]: workload trace generators and the trace CSV format.
//! - [`eval`]: scenario averaging, Pareto comparison and report tables.
//! - [`cli`]: the `vmpsim` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod heuristics;
pub mod memetic;
pub mod model;
pub mod objectives;
pub mod sim;
pub mod trace;
