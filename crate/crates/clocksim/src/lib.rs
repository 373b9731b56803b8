//! Simulator for a clock interferometer: a two-level (or spin-S) internal
//! clock riding a spatial superposition, with the which-path information it
//! accumulates traded off against fringe visibility.
//!
//! Layout:
//! - [`clock`]: two-level clock states, visibility / clockness /
//!   distinguishability and the complementarity record.
//! - [`spin`]: spin-S coherent states and the multilevel generalizations.
//! - [`sim`]: sequence physics — Rabi preparation, dephasing maps, Gaussian
//!   wave packets, pattern synthesis, breakup bound.
//! - [`fringe`]: fringe fitting, shot Monte Carlo, visibility statistics.
//! - [`config`] / [`report`] / [`run`]: config files, output tables, and the
//!   named experiment sweeps behind the CLI.

pub mod clock;
pub mod config;
pub mod fringe;
pub mod report;
pub mod run;
pub mod sim;
pub mod spin;
