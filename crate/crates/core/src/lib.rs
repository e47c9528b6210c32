//! Scattering on quantum star graphs with Fülöp-Tsutsui vertex couplings.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense complex solves, adaptive quadrature, bracketed roots.
//! * [`vertex`]: boundary conditions `A·Ψ(0) + B·Ψ'(0) = 0`, ST-forms and δ-couplings.
//! * [`scattering`]: the S-matrix of a star graph with per-line potentials,
//!   including evanescent (closed) channels.
//! * [`devices`]: closed forms for the three-line threshold filter and the
//!   four-line sluice gate.
//! * [`analysis`]: bandwidth, second-sheet poles and flux curves.
//! * [`assembly`]: finite graphs of δ-couplings that approximate the
//!   scale-invariant vertices as their size shrinks.
//! * [`sweep`]: grid generation and CSV/JSON rendering used by the CLI.

pub mod analysis;
pub mod assembly;
pub mod devices;
mod error;
pub mod numerics;
pub mod scattering;
pub mod sweep;
pub mod vertex;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use analysis::{BandReport, FluxCurve, FluxReport, MomentumDistribution, PoleReport};
pub use assembly::{CompoundGraph, ConvergenceReport, DeltaChainRecipe, RecipeTarget, Variant};
pub use devices::{Device, FilterN3, GateN4, N3Amplitudes, N4Amplitudes};
pub use numerics::{ComplexMatrix, Tolerance};
pub use scattering::{ChannelSet, FinalStateWave, Probabilities, ScatteringMatrix};
pub use vertex::{BoundaryCondition, Diagnostics, StForm};
