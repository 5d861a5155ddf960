//! Measurement-driven ground-state amplification.
//!
//! A single ancilla runs a Hadamard test against `e^{-iHt}` for a cost
//! Hamiltonian `H` that is diagonal in the computational basis. Reading the
//! ancilla as `0` multiplies every amplitude by `cos ϑ_k`, which suppresses
//! high-energy configurations; reading `1` applies `sin ϑ_k` instead, after
//! which a transverse mixer repopulates the low-energy sector.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`] and [`qubo`]: vertex-cover instances and their energy tables.
//! - [`sv`]: the ancilla + register pure-state engine, measurement, noise.
//! - [`amplifier`]: parameter selection, closed-form filters, the iteration
//!   and full runs in trajectory, postselected and analytic modes.
//! - [`qaoa`]: the variational baseline on the same energy table.
//! - [`experiments`]: sweeps, comparisons and the noise study.

pub mod amplifier;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod graph;
pub mod qaoa;
pub mod qubo;
pub mod rng;
pub mod stats;
pub mod sv;

pub use error::{Error, Result};
pub use graph::Graph;
pub use qubo::{BoundsMode, EnergyTable, QuboHamiltonian};
pub use rng::TrajectoryRng;
pub use sv::{AncillaBranchState, NoiseSpec};
